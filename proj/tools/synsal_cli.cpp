#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <torch/torch.h>

#include "synsal/datasets.hpp"
#include "synsal/errors.hpp"
#include "synsal/metrics.hpp"
#include "synsal/run_config.hpp"
#include "synsal/trainer.hpp"

namespace fs = std::filesystem;
using namespace synsal;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct GenToyArgs {
  fs::path out;
  ToyDatasetSpec spec;
};

struct TrainArgs {
  fs::path config;
  std::optional<std::string> ablation;
  std::optional<int> steps;
  std::optional<std::uint64_t> seed;
  bool tiny = false;
  std::optional<fs::path> checkpoint_dir;
  std::optional<fs::path> resume;
  std::vector<std::string> overrides;
};

struct EvalArgs {
  std::optional<fs::path> pred;
  std::optional<fs::path> gt;
  std::optional<fs::path> checkpoint;
  std::optional<fs::path> data;
  std::optional<fs::path> out;
  fs::path csv = "metrics.csv";
  std::string name;
};

struct PredictArgs {
  fs::path checkpoint;
  fs::path input;
  fs::path out;
};

int run_gen_toy(const GenToyArgs& args) {
  args.spec.validate();
  const ToySummary summary = generate_toy_dataset(args.spec, args.out);
  std::printf("wrote %d rgb, %d rgbd, %d test images under %s\n", summary.n_rgb, summary.n_rgbd,
              summary.n_test, args.out.string().c_str());
  return kOk;
}

int run_train(const TrainArgs& args) {
  RunConfig config = load_run_config(args.config);
  for (const auto& item : args.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + item + "'");
    apply_config_value(config, item.substr(0, eq), item.substr(eq + 1));
  }
  if (args.tiny) {
    config.training.backbone = Backbone::Tiny;
    config.training.input_size = 64;
  }
  if (args.ablation) config.training.ablation = parse_ablation(*args.ablation);
  if (args.steps) config.training.steps = *args.steps;
  if (args.seed) config.training.seed = *args.seed;
  if (args.checkpoint_dir) config.training.checkpoint_dir = *args.checkpoint_dir;
  config.training.validate();

  std::printf("# effective configuration\n%s\n", format_run_config(config).c_str());
  std::fflush(stdout);

  const int every = std::max(1, config.training.steps / 20);
  TrainOptions options;
  options.resume_from = args.resume;
  options.on_step = [every](std::uint64_t step, const LossRecord& r) {
    if (step % every == 0) {
      std::printf("step %6llu  total_G %.5f  total_D %.5f\n", static_cast<unsigned long long>(step),
                  r.total_G, r.total_D);
      std::fflush(stdout);
    }
  };
  const TrainResult result = train(config.training, config.rgb_root, config.rgbd_root, options);
  std::printf("final checkpoint: %s\nloss log: %s\n", result.final_checkpoint.string().c_str(),
              result.loss_log.string().c_str());
  return kOk;
}

void append_csv(const fs::path& path, const std::string& row) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (fresh) out << metrics::csv_header() << '\n';
  out << row << '\n';
}

int run_eval(const EvalArgs& args) {
  fs::path pred_dir;
  fs::path gt_dir;
  std::string name = args.name;
  if (args.checkpoint || args.data) {
    if (!args.checkpoint || !args.data || args.pred || args.gt) {
      throw ConfigError("use either --pred/--gt or --checkpoint/--data");
    }
    gt_dir = *args.data / "gt";
    pred_dir = args.out.value_or(args.checkpoint->parent_path() /
                                 ("pred_" + args.data->filename().string()));
    const Predictor predictor(*args.checkpoint);
    const PredictSummary summary = predict_images(predictor, *args.data / "images", pred_dir);
    for (const auto& failure : summary.failures) std::cerr << "warning: " << failure << '\n';
    std::printf("wrote %d maps to %s\n", summary.written, pred_dir.string().c_str());
    if (name.empty()) name = args.data->filename().string();
  } else {
    if (!args.pred || !args.gt) throw ConfigError("use either --pred/--gt or --checkpoint/--data");
    pred_dir = *args.pred;
    gt_dir = *args.gt;
    if (name.empty()) name = gt_dir.parent_path().filename().string();
  }
  const metrics::EvalResult result = metrics::evaluate_dataset(pred_dir, gt_dir);
  const std::string row = metrics::csv_row(name, result);
  std::printf("%s\n%s\n", metrics::csv_header().c_str(), row.c_str());
  if (result.f_skipped > 0) {
    std::fprintf(stderr, "note: %d image(s) with empty gt skipped for f_measure\n", result.f_skipped);
  }
  append_csv(args.csv, row);
  return kOk;
}

int run_predict(const PredictArgs& args) {
  const Predictor predictor(args.checkpoint);
  const PredictSummary summary = predict_images(predictor, args.input, args.out);
  for (const auto& failure : summary.failures) std::cerr << "warning: " << failure << '\n';
  std::printf("wrote %d maps to %s\n", summary.written, args.out.string().c_str());
  return summary.written == 0 ? kFailure : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  torch::set_num_threads(1);

  CLI::App app{"Semi-supervised RGB-D saliency: toy data, training, evaluation, inference"};
  app.require_subcommand(1);

  GenToyArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-toy", "write a synthetic two-source dataset");
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  gen_cmd->add_option("--n-rgb", gen.spec.n_rgb, "RGB-source images")->capture_default_str();
  gen_cmd->add_option("--n-rgbd", gen.spec.n_rgbd, "RGB-D-source training images")->capture_default_str();
  gen_cmd->add_option("--n-test", gen.spec.n_test, "held-out RGB-D images")->capture_default_str();
  gen_cmd->add_option("--size", gen.spec.image_size, "image side length")->capture_default_str();
  gen_cmd->add_option("--seed", gen.spec.seed, "generator seed")->capture_default_str();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train a model from a config file");
  train_cmd->add_option("--config", tr.config, "key = value config file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--ablation", tr.ablation, "B | B+M | B+M+A | FULL");
  train_cmd->add_option("--steps", tr.steps, "training steps");
  train_cmd->add_option("--seed", tr.seed, "run seed");
  train_cmd->add_flag("--tiny", tr.tiny, "TINY backbone at 64x64 input");
  train_cmd->add_option("--checkpoint-dir", tr.checkpoint_dir, "output directory");
  train_cmd->add_option("--resume", tr.resume, "continue from a checkpoint")->check(CLI::ExistingFile);
  train_cmd->add_option("--set", tr.overrides, "override a config key (key=value)");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "score saliency maps against ground truth");
  eval_cmd->add_option("--pred", ev.pred, "directory of predicted maps");
  eval_cmd->add_option("--gt", ev.gt, "directory of ground-truth masks");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "checkpoint to run first")->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", ev.data, "dataset root with images/ and gt/");
  eval_cmd->add_option("--out", ev.out, "where predicted maps are written (checkpoint mode)");
  eval_cmd->add_option("--csv", ev.csv, "metric CSV to append to")->capture_default_str();
  eval_cmd->add_option("--name", ev.name, "dataset column value");

  PredictArgs pr;
  auto* predict_cmd = app.add_subcommand("predict", "RGB-only saliency inference");
  predict_cmd->add_option("--checkpoint", pr.checkpoint, "trained checkpoint")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--input", pr.input, "image file or directory")->required();
  predict_cmd->add_option("--out", pr.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen_cmd) return run_gen_toy(gen);
    if (*train_cmd) return run_train(tr);
    if (*eval_cmd) return run_eval(ev);
    if (*predict_cmd) return run_predict(pr);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
