#include "../support/doctest_torch.hpp"

#include <fstream>
#include <iterator>
#include <limits>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "../support/test_support.hpp"
#include "synsal/errors.hpp"
#include "synsal/image_io.hpp"
#include "synsal/trainer.hpp"

using namespace synsal;
namespace fs = std::filesystem;

namespace {

TrainingConfig tiny_config(Ablation ablation, const fs::path& dir = "unused") {
  TrainingConfig c;
  c.backbone = Backbone::Tiny;
  c.input_size = 32;
  c.batch_size = 2;
  c.steps = 4;
  c.seed = 1;
  c.ablation = ablation;
  c.checkpoint_dir = dir;
  c.checkpoint_every = 0;
  return c;
}

struct ToyData {
  LoadedDataset rgb;
  LoadedDataset rgbd;
};

const ToyData& toy_data() {
  static ToyData data = [] {
    const auto& toy = testing::shared_toy();
    return ToyData{load_dataset(toy.rgb_dir, Domain::RgbSource, 32),
                   load_dataset(toy.rgbd_dir, Domain::RgbdSource, 32)};
  }();
  return data;
}

PairedBatches batches(std::uint64_t seed = 1, int batch_size = 2) {
  return PairedBatches(toy_data().rgb.samples, toy_data().rgbd.samples, batch_size, seed);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<torch::Tensor> discriminator_params(Trainer& t) {
  auto a = testing::snapshot(*t.discriminators().ds);
  auto b = testing::snapshot(*t.discriminators().dt);
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

int64_t total_parameters(Ablation a) {
  Trainer t(tiny_config(a));
  int64_t n = parameter_count(*t.generator());
  if (t.discriminators().ds) n += parameter_count(*t.discriminators().ds) + parameter_count(*t.discriminators().dt);
  return n;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("ablation B records only the initial saliency term") {
  Trainer t(tiny_config(Ablation::B));
  auto it = batches();
  const auto r = t.train_step(it.next());
  CHECK(r.init_s > 0);
  CHECK(r.init_d == 0);
  CHECK(r.fin_s == 0);
  CHECK(r.fin_d == 0);
  CHECK(r.adv_s == 0);
  CHECK(r.adv_d == 0);
  CHECK(r.disc_s == 0);
  CHECK(r.disc_d == 0);
  CHECK(t.discriminator_optimizer() == nullptr);
}

TEST_CASE("full record recomposes") {
  Trainer t(tiny_config(Ablation::Full));
  auto it = batches();
  for (int i = 0; i < 3; ++i) {
    const auto r = t.train_step(it.next());
    CHECK(r.all_finite());
    for (double v : {r.init_s, r.init_d, r.fin_s, r.fin_d, r.adv_s, r.adv_d, r.disc_s, r.disc_d}) CHECK(v > 0);
    const double g = 1.75 * r.fin_s + 1.0 * r.fin_d + 0.2 * 1.75 * r.init_s + 0.2 * 1.0 * r.init_d +
                     0.002 * r.adv_s + 0.001 * r.adv_d;
    CHECK(std::fabs(r.total_G - g) <= 1e-10);
    CHECK(std::fabs(r.total_D - (r.disc_s + r.disc_d)) <= 1e-10);
  }
}

TEST_CASE("identical seeds give identical records") {
  Trainer a(tiny_config(Ablation::Full));
  Trainer b(tiny_config(Ablation::Full));
  auto ia = batches();
  auto ib = batches();
  for (int i = 0; i < 3; ++i) CHECK(a.train_step(ia.next()) == b.train_step(ib.next()));
}

TEST_CASE("optimizer partition") {
  Trainer t(tiny_config(Ablation::Full));
  std::vector<torch::Tensor> d_before, g_after_g;
  int g_violations = 0, d_violations = 0, d_moved = 0, g_moved = 0;
  std::vector<torch::Tensor> g_before;
  t.after_generator_update = [&] {
    if (!testing::bit_identical(d_before, discriminator_params(t))) ++d_violations;
    const auto g_now = testing::snapshot(*t.generator());
    if (!testing::bit_identical(g_before, g_now)) ++g_moved;
    g_after_g = g_now;
  };
  t.after_discriminator_update = [&] {
    if (!testing::bit_identical(g_after_g, testing::snapshot(*t.generator()))) ++g_violations;
    if (!testing::bit_identical(d_before, discriminator_params(t))) ++d_moved;
  };
  auto it = batches();
  for (int i = 0; i < 3; ++i) {
    d_before = discriminator_params(t);
    g_before = testing::snapshot(*t.generator());
    t.train_step(it.next());
  }
  CHECK(d_violations == 0);
  CHECK(g_violations == 0);
  CHECK(g_moved == 3);
  CHECK(d_moved == 3);
}

TEST_CASE("rgb-d saliency masks never influence training") {
  Trainer clean(tiny_config(Ablation::Full));
  Trainer poisoned(tiny_config(Ablation::Full));
  auto it = batches();
  for (int i = 0; i < 3; ++i) {
    const auto batch = it.next();
    auto dirty = batch;
    for (auto& s : dirty.rgbd) {
      s.saliency_gt = torch::full({1, 32, 32}, std::numeric_limits<float>::quiet_NaN());
    }
    CHECK(clean.train_step(batch) == poisoned.train_step(dirty));
  }
}

TEST_CASE("ablation levels nest") {
  const auto b = total_parameters(Ablation::B);
  const auto bm = total_parameters(Ablation::BM);
  const auto bma = total_parameters(Ablation::BMA);
  const auto full = total_parameters(Ablation::Full);
  CHECK(b < bm);
  CHECK(bm < bma);
  CHECK(bma < full);
}

TEST_CASE("generator loss falls on a frozen batch") {
  auto config = tiny_config(Ablation::BMA);
  config.lr_generator = 1e-4;
  Trainer t(config);
  const auto batch = batches().next();
  const auto first = t.train_step(batch);
  const auto second = t.train_step(batch);
  CHECK(second.total_G < first.total_G);
}

TEST_CASE("non-finite losses abort") {
  Trainer t(tiny_config(Ablation::Full));
  {
    torch::NoGradGuard guard;
    t.generator()->saliency_decoder->heads->heads[0]->bias.fill_(std::numeric_limits<float>::quiet_NaN());
  }
  auto it = batches();
  CHECK_THROWS_AS(t.train_step(it.next()), NonFiniteError);
}

TEST_CASE("checkpoint save load save is byte identical") {
  Trainer t(tiny_config(Ablation::Full));
  auto it = batches();
  for (int i = 0; i < 2; ++i) t.train_step(it.next());
  const auto bytes = serialize_checkpoint(t.checkpoint());
  const auto loaded = Trainer::from_checkpoint(deserialize_checkpoint(bytes));
  CHECK(serialize_checkpoint(loaded->checkpoint()) == bytes);
  CHECK(loaded->step() == 2);

  {
    const auto probe = torch::rand({1, 3, 32, 32});
    torch::NoGradGuard guard;
    CHECK(torch::equal(t.generator()(probe).P, loaded->generator()(probe).P));
  }

  // continuing both gives the same next record
  const auto batch = it.next();
  CHECK(t.train_step(batch) == loaded->train_step(batch));
}

TEST_CASE("train with zero steps writes the initialization") {
  testing::TempDir dir("zero");
  const auto& toy = testing::shared_toy();
  auto config = tiny_config(Ablation::Full, dir / "run");
  config.steps = 0;
  const auto result = train(config, toy.rgb_dir, toy.rgbd_dir);
  CHECK(result.records.empty());
  Trainer fresh(config);
  CHECK(serialize_checkpoint(read_checkpoint(result.final_checkpoint)) == serialize_checkpoint(fresh.checkpoint()));
  CHECK(lines(result.loss_log).size() == 1);
}

TEST_CASE("loss log and resume") {
  testing::TempDir dir("resume");
  const auto& toy = testing::shared_toy();
  auto config = tiny_config(Ablation::Full, dir / "full");
  config.steps = 6;
  config.checkpoint_every = 3;
  const auto whole = train(config, toy.rgb_dir, toy.rgbd_dir);
  const auto log = lines(whole.loss_log);
  REQUIRE(log.size() == 7);
  CHECK(log[0] == kLossCsvHeader);
  CHECK(log[1].rfind("1,", 0) == 0);
  CHECK(fs::exists(dir / "full/step_000003.ckpt"));
  CHECK(fs::exists(dir / "full/step_000006.ckpt"));

  // interrupted run: 3 steps, then resume to 6 in the same directory
  auto part = config;
  part.checkpoint_dir = dir / "split";
  part.steps = 3;
  train(part, toy.rgb_dir, toy.rgbd_dir);
  part.steps = 6;
  TrainOptions options;
  options.resume_from = dir / "split/step_000003.ckpt";
  const auto resumed = train(part, toy.rgb_dir, toy.rgbd_dir, options);
  CHECK(resumed.records.size() == 3);
  CHECK(slurp(resumed.loss_log) == slurp(whole.loss_log));
  CHECK(slurp(dir / "split/final.ckpt") == slurp(dir / "full/final.ckpt"));
}

TEST_CASE("training reads no rgb-d masks from disk") {
  testing::TempDir dir("nogt");
  const auto& toy = testing::shared_toy();
  fs::copy(toy.rgbd_dir, dir / "rgbd", fs::copy_options::recursive);
  fs::remove_all(dir / "rgbd/gt");
  auto config = tiny_config(Ablation::Full, dir / "a");
  config.steps = 3;
  const auto without = train(config, toy.rgb_dir, dir / "rgbd");
  config.checkpoint_dir = dir / "b";
  const auto with = train(config, toy.rgb_dir, toy.rgbd_dir);
  CHECK(slurp(without.loss_log) == slurp(with.loss_log));
}

TEST_CASE("fin_s decreases over 300 steps") {
  auto config = tiny_config(Ablation::Full);
  config.batch_size = 4;
  Trainer t(config);
  auto it = batches(1, 4);
  double first = 0, last = 0;
  for (int i = 0; i < 300; ++i) {
    const auto r = t.train_step(it.next());
    if (i < 50) first += r.fin_s;
    if (i >= 250) last += r.fin_s;
  }
  CHECK(last / 50 < first / 50);
}

TEST_CASE("rgb-only inference") {
  testing::TempDir dir("infer");
  Trainer t(tiny_config(Ablation::Full));
  const Predictor predictor(t.checkpoint());

  cv::Mat3b img(37, 50, cv::Vec3b(10, 120, 200));
  cv::circle(img, {20, 18}, 9, cv::Scalar(250, 20, 20), -1);
  fs::create_directories(dir / "in");
  for (int i = 0; i < 5; ++i) cv::imwrite((dir / ("in/im" + std::to_string(i) + ".png")).string(), img);

  const cv::Mat a = predictor.predict(img);
  const cv::Mat b = predictor.predict(img);
  CHECK(a.rows == 37);
  CHECK(a.cols == 50);
  CHECK(cv::norm(a, b, cv::NORM_INF) == 0.0);

  const auto single = predict_images(predictor, dir / "in/im0.png", dir / "one");
  CHECK(single.written == 1);
  const cv::Mat out = cv::imread((dir / "one/im0.png").string(), cv::IMREAD_UNCHANGED);
  CHECK(out.type() == CV_8UC1);
  CHECK(out.size() == img.size());

  std::ofstream(dir / "in/broken.png") << "not an image";
  const auto many = predict_images(predictor, dir / "in", dir / "many");
  CHECK(many.written == 5);
  CHECK(many.failures.size() == 1);
}

TEST_CASE("saliency-only checkpoints predict from the initial map") {
  Trainer t(tiny_config(Ablation::BM));
  const Predictor predictor(t.checkpoint());
  const auto y = predictor.predict_tensor(torch::rand({2, 3, 32, 32}));
  CHECK(y.sizes() == torch::IntArrayRef({2, 1, 32, 32}));
}

}  // TEST_SUITE
