#include "synsal/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <opencv2/imgproc.hpp>

#include "synsal/errors.hpp"
#include "synsal/image_io.hpp"
#include "synsal/run_config.hpp"

namespace synsal {

namespace fs = std::filesystem;

ModelConfig TrainingConfig::model_config() const {
  ModelConfig mc;
  mc.encoder = EncoderConfig::for_backbone(backbone, input_size);
  mc.encoder.pretrained_weights = pretrained_weights;
  mc.ablation = ablation;
  mc.detach_query = detach_query;
  mc.patch_grid = patch_grid;
  return mc;
}

void TrainingConfig::validate() const {
  loss_weights.validate();
  if (!(lr_generator > 0) || !(lr_discriminator > 0)) throw ConfigError("learning rates must be positive");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1) || !(adam_beta2 >= 0 && adam_beta2 < 1)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (steps < 0) throw ConfigError("steps must be non-negative");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be non-negative");
  if (patch_grid < 0) throw ConfigError("patch_grid must be non-negative");
  EncoderConfig::for_backbone(backbone, input_size).validate();
}

namespace {

LevelFeatures slice(const LevelFeatures& f, int64_t begin, int64_t end) {
  return {f.l3.slice(0, begin, end), f.l4.slice(0, begin, end), f.l5.slice(0, begin, end)};
}

std::vector<torch::Tensor> branch_inputs(const LevelFeatures& v, const torch::Tensor& map) {
  return {v.l3, v.l4, v.l5, map};
}

std::vector<torch::Tensor> detached_inputs(const LevelFeatures& v, const torch::Tensor& map) {
  return {v.l3.detach(), v.l4.detach(), v.l5.detach(), map.detach()};
}

std::string describe(const LossRecord& r) {
  std::ostringstream os;
  os << "init_s=" << r.init_s << " init_d=" << r.init_d << " fin_s=" << r.fin_s << " fin_d=" << r.fin_d
     << " adv_s=" << r.adv_s << " adv_d=" << r.adv_d << " disc_s=" << r.disc_s << " disc_d=" << r.disc_d
     << " total_G=" << r.total_G << " total_D=" << r.total_D;
  return os.str();
}

double value_of(const std::optional<LossTerm>& term) {
  return term ? term->value.item<double>() : 0.0;
}

}  // namespace

Trainer::Trainer(TrainingConfig config) : Trainer(std::move(config), true) {}

Trainer::Trainer(TrainingConfig config, bool load_pretrained) : config_(std::move(config)) {
  config_.validate();
  torch::manual_seed(config_.seed);
  ModelConfig mc = config_.model_config();
  if (!load_pretrained) mc.encoder.pretrained_weights.reset();

  generator_ = Generator(mc);
  generator_opt_ = std::make_unique<torch::optim::Adam>(
      generator_->parameters(),
      torch::optim::AdamOptions(config_.lr_generator).betas({config_.adam_beta1, config_.adam_beta2}));

  if (has_discriminators(config_.ablation)) {
    discriminators_ = make_discriminators(mc);
    auto params = discriminators_.ds->parameters();
    for (auto& p : discriminators_.dt->parameters()) params.push_back(p);
    discriminator_opt_ = std::make_unique<torch::optim::Adam>(
        params,
        torch::optim::AdamOptions(config_.lr_discriminator).betas({config_.adam_beta1, config_.adam_beta2}));
  }
}

LossRecord Trainer::train_step(const DomainBatch& batch) {
  const Ablation ablation = config_.ablation;
  const LossWeights& w = config_.loss_weights;
  const auto x_m = batch.rgb_images();
  const auto y_m = batch.rgb_saliency();
  const int64_t b = x_m.size(0);

  generator_->train();
  GeneratorLossParts parts;
  GeneratorOutput out_m;
  GeneratorOutput out_n;
  torch::Tensor z_n;

  if (!has_depth_branch(ablation)) {
    // Saliency-only ablations never look at the RGB-D half.
    out_m = generator_(x_m);
    parts.init_s = LossTerm{bce_map_loss(out_m.F, y_m), Domain::RgbSource};
  } else {
    z_n = batch.rgbd_depth();
    // One pass over both halves; nothing in the generator mixes samples.
    const auto both = generator_(torch::cat({x_m, batch.rgbd_images()}, 0));
    auto split = [&](int64_t lo, int64_t hi) {
      GeneratorOutput o;
      o.F = both.F.slice(0, lo, hi);
      o.R = both.R.slice(0, lo, hi);
      o.P = both.P.slice(0, lo, hi);
      o.Q = both.Q.slice(0, lo, hi);
      o.v_saliency = slice(both.v_saliency, lo, hi);
      o.v_depth = slice(both.v_depth, lo, hi);
      return o;
    };
    out_m = split(0, b);
    out_n = split(b, 2 * b);
    parts.init_s = LossTerm{bce_map_loss(out_m.F, y_m), Domain::RgbSource};
    parts.fin_s = LossTerm{bce_map_loss(out_m.P, y_m), Domain::RgbSource};
    parts.init_d = LossTerm{l1_map_loss(out_n.R, z_n), Domain::RgbdSource};
    parts.fin_d = LossTerm{l1_map_loss(out_n.Q, z_n), Domain::RgbdSource};
    if (has_discriminators(ablation)) {
      auto& ds = discriminators_.ds;
      auto& dt = discriminators_.dt;
      parts.adv_s = LossTerm{adversarial_loss(ds(branch_inputs(out_n.v_saliency, out_n.P))), Domain::RgbdSource};
      parts.adv_d = LossTerm{adversarial_loss(dt(branch_inputs(out_m.v_depth, out_m.Q))), Domain::RgbSource};
    }
  }

  const auto total_g = total_generator_loss(parts, w);
  LossRecord record;
  record.init_s = value_of(parts.init_s);
  record.init_d = value_of(parts.init_d);
  record.fin_s = value_of(parts.fin_s);
  record.fin_d = value_of(parts.fin_d);
  record.adv_s = value_of(parts.adv_s);
  record.adv_d = value_of(parts.adv_d);
  record.total_G = total_generator_loss(record, w);
  if (!record.all_finite() || !std::isfinite(total_g.item<double>())) {
    throw NonFiniteError("non-finite generator loss at step " + std::to_string(step_ + 1) + ": " +
                         describe(record));
  }

  // Generator update. Discriminator gradients produced here are discarded.
  generator_opt_->zero_grad();
  total_g.backward();
  generator_opt_->step();
  if (after_generator_update) after_generator_update();

  if (has_discriminators(ablation)) {
    auto& ds = discriminators_.ds;
    auto& dt = discriminators_.dt;
    discriminator_opt_->zero_grad();
    const auto ds_loss = discriminator_loss(ds(detached_inputs(out_m.v_saliency, out_m.P)),
                                            ds(detached_inputs(out_n.v_saliency, out_n.P)));
    const auto dt_loss = discriminator_loss(dt(detached_inputs(out_n.v_depth, out_n.Q)),
                                            dt(detached_inputs(out_m.v_depth, out_m.Q)));
    const auto total_d = total_discriminator_loss(ds_loss, dt_loss);
    record.disc_s = ds_loss.item<double>();
    record.disc_d = dt_loss.item<double>();
    record.total_D = record.disc_s + record.disc_d;
    if (!record.all_finite()) {
      throw NonFiniteError("non-finite discriminator loss at step " + std::to_string(step_ + 1) + ": " +
                           describe(record));
    }
    total_d.backward();
    discriminator_opt_->step();
    if (after_discriminator_update) after_discriminator_update();
  }

  ++step_;
  return record;
}

CheckpointData Trainer::checkpoint() const {
  CheckpointData data;
  data.step = step_;
  data.seed = config_.seed;
  data.config = format_training_config(config_);
  data.groups.push_back(module_group("generator", *generator_));
  data.groups.push_back(adam_group("adam_generator", *generator_, *generator_opt_));
  if (discriminator_opt_) {
    data.groups.push_back(module_group("ds", *discriminators_.ds));
    data.groups.push_back(module_group("dt", *discriminators_.dt));
    data.groups.push_back(adam_group("adam_ds", *discriminators_.ds, *discriminator_opt_));
    data.groups.push_back(adam_group("adam_dt", *discriminators_.dt, *discriminator_opt_));
  }
  return data;
}

std::unique_ptr<Trainer> Trainer::from_checkpoint(const CheckpointData& data) {
  auto config = parse_training_config(data.config);
  std::unique_ptr<Trainer> trainer(new Trainer(std::move(config), false));
  auto require = [&](const char* name) -> const TensorGroup& {
    const TensorGroup* g = data.find_group(name);
    if (g == nullptr) throw FormatError(std::string("checkpoint lacks group '") + name + "'");
    return *g;
  };
  load_module_group(*trainer->generator_, require("generator"));
  load_adam_group(*trainer->generator_, *trainer->generator_opt_, require("adam_generator"));
  if (trainer->discriminator_opt_) {
    load_module_group(*trainer->discriminators_.ds, require("ds"));
    load_module_group(*trainer->discriminators_.dt, require("dt"));
    load_adam_group(*trainer->discriminators_.ds, *trainer->discriminator_opt_, require("adam_ds"));
    load_adam_group(*trainer->discriminators_.dt, *trainer->discriminator_opt_, require("adam_dt"));
  }
  trainer->step_ = data.step;
  return trainer;
}

std::string loss_csv_row(std::uint64_t step, const LossRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                static_cast<unsigned long long>(step), r.init_s, r.init_d, r.fin_s, r.fin_d, r.adv_s,
                r.adv_d, r.disc_s, r.disc_d, r.total_G, r.total_D);
  return buf;
}

namespace {

// Keeps the header and rows up to `step` of an existing log.
std::vector<std::string> existing_rows(const fs::path& csv, std::uint64_t step) {
  std::vector<std::string> rows;
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (std::stoull(line.substr(0, line.find(','))) <= step) rows.push_back(line);
  }
  return rows;
}

fs::path step_checkpoint_path(const fs::path& dir, std::uint64_t step) {
  char name[32];
  std::snprintf(name, sizeof(name), "step_%06llu.ckpt", static_cast<unsigned long long>(step));
  return dir / name;
}

}  // namespace

TrainResult train(const TrainingConfig& config, const fs::path& rgb_root, const fs::path& rgbd_root,
                  const TrainOptions& options) {
  config.validate();
  std::unique_ptr<Trainer> trainer;
  if (options.resume_from) {
    trainer = Trainer::from_checkpoint(read_checkpoint(*options.resume_from));
  } else {
    trainer = std::make_unique<Trainer>(config);
  }
  const TrainingConfig& active = trainer->config();

  const auto rgb = load_dataset(rgb_root, Domain::RgbSource, active.input_size);
  const auto rgbd = load_dataset(rgbd_root, Domain::RgbdSource, active.input_size);
  PairedBatches batches(rgb.samples, rgbd.samples, active.batch_size, active.seed, trainer->step());

  TrainResult result;
  fs::create_directories(config.checkpoint_dir);
  result.loss_log = config.checkpoint_dir / "losses.csv";
  std::vector<std::string> kept;
  if (options.resume_from && fs::exists(result.loss_log)) kept = existing_rows(result.loss_log, trainer->step());
  std::ofstream log(result.loss_log, std::ios::trunc);
  if (!log) throw ConfigError("cannot write " + result.loss_log.string());
  log << kLossCsvHeader << '\n';
  for (const auto& row : kept) log << row << '\n';

  const auto target = static_cast<std::uint64_t>(config.steps);
  while (trainer->step() < target) {
    const LossRecord record = trainer->train_step(batches.next());
    const std::uint64_t step = trainer->step();
    log << loss_csv_row(step, record) << '\n';
    log.flush();
    result.records.push_back(record);
    if (options.on_step) options.on_step(step, record);
    if (config.checkpoint_every > 0 && step % static_cast<std::uint64_t>(config.checkpoint_every) == 0) {
      write_checkpoint(step_checkpoint_path(config.checkpoint_dir, step), trainer->checkpoint());
    }
  }
  result.final_checkpoint = config.checkpoint_dir / "final.ckpt";
  write_checkpoint(result.final_checkpoint, trainer->checkpoint());
  return result;
}

Predictor::Predictor(const CheckpointData& checkpoint)
    : config_(parse_training_config(checkpoint.config)) {
  ModelConfig mc = config_.model_config();
  mc.encoder.pretrained_weights.reset();
  generator_ = Generator(mc);
  const TensorGroup* group = checkpoint.find_group("generator");
  if (group == nullptr) throw FormatError("checkpoint lacks group 'generator'");
  load_module_group(*generator_, *group);
  generator_->eval();
}

Predictor::Predictor(const fs::path& checkpoint_path) : Predictor(read_checkpoint(checkpoint_path)) {}

torch::Tensor Predictor::predict_tensor(const torch::Tensor& rgb) const {
  torch::NoGradGuard no_grad;
  return generator_->forward(rgb).saliency();
}

cv::Mat Predictor::predict(const cv::Mat& rgb8) const {
  if (rgb8.empty() || rgb8.type() != CV_8UC3) throw ShapeError("predict expects an 8-bit RGB image");
  const int s = config_.input_size;
  auto x = io::rgb_to_tensor(rgb8, s).unsqueeze(0);
  cv::Mat map = io::tensor_to_map(predict_tensor(x));
  if (map.rows != rgb8.rows || map.cols != rgb8.cols) {
    cv::Mat restored;
    cv::resize(map, restored, rgb8.size(), 0, 0, cv::INTER_LINEAR);
    return restored;
  }
  return map;
}

PredictSummary predict_images(const Predictor& predictor, const fs::path& input, const fs::path& out_dir) {
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    files = io::list_images(input);
  } else if (fs::exists(input)) {
    files.push_back(input);
  } else {
    throw ConfigError("input does not exist: " + input.string());
  }
  fs::create_directories(out_dir);
  PredictSummary summary;
  for (const auto& path : files) {
    try {
      const cv::Mat map = predictor.predict(io::read_rgb(path));
      io::write_gray(out_dir / (path.stem().string() + ".png"), io::map_to_gray8(map));
      ++summary.written;
    } catch (const std::exception& e) {
      summary.failures.push_back(path.string() + ": " + e.what());
    }
  }
  return summary;
}

}  // namespace synsal
