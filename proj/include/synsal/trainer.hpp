#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <torch/torch.h>

#include "synsal/checkpoint.hpp"
#include "synsal/datasets.hpp"
#include "synsal/model.hpp"
#include "synsal/objectives.hpp"

namespace synsal {

struct TrainingConfig {
  LossWeights loss_weights;
  double lr_generator = 1e-4;
  double lr_discriminator = 5e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  int batch_size = 4;
  int steps = 2000;
  Backbone backbone = Backbone::Vgg19Style;
  int input_size = 256;
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::Full;
  std::filesystem::path checkpoint_dir = "runs/default";
  int checkpoint_every = 500;  // 0 disables periodic checkpoints
  bool detach_query = false;
  int64_t patch_grid = 0;
  std::optional<std::filesystem::path> pretrained_weights;

  ModelConfig model_config() const;
  void validate() const;
};

/// Generator, discriminators and their two Adam optimizers. One train_step is
/// a generator update (discriminators frozen) followed by a discriminator
/// update on detached representations.
class Trainer {
 public:
  explicit Trainer(TrainingConfig config);

  LossRecord train_step(const DomainBatch& batch);

  CheckpointData checkpoint() const;
  static std::unique_ptr<Trainer> from_checkpoint(const CheckpointData& data);

  Generator& generator() { return generator_; }
  DiscriminatorPair& discriminators() { return discriminators_; }
  const TrainingConfig& config() const { return config_; }
  std::uint64_t step() const { return step_; }

  torch::optim::Adam& generator_optimizer() { return *generator_opt_; }
  torch::optim::Adam* discriminator_optimizer() { return discriminator_opt_.get(); }

  // Observation points inside train_step.
  std::function<void()> after_generator_update;
  std::function<void()> after_discriminator_update;

 private:
  Trainer(TrainingConfig config, bool load_pretrained);

  TrainingConfig config_;
  Generator generator_{nullptr};
  DiscriminatorPair discriminators_;
  std::unique_ptr<torch::optim::Adam> generator_opt_;
  std::unique_ptr<torch::optim::Adam> discriminator_opt_;
  std::uint64_t step_ = 0;
};

inline const char* kLossCsvHeader =
    "step,init_s,init_d,fin_s,fin_d,adv_s,adv_d,disc_s,disc_d,total_G,total_D";

std::string loss_csv_row(std::uint64_t step, const LossRecord& record);

struct TrainResult {
  std::filesystem::path final_checkpoint;
  std::filesystem::path loss_log;
  std::vector<LossRecord> records;  // this invocation's steps only
};

struct TrainOptions {
  std::optional<std::filesystem::path> resume_from;
  std::function<void(std::uint64_t step, const LossRecord&)> on_step;
};

/// Runs config.steps training steps (counted from zero; a resumed run
/// continues up to the same total). Writes <checkpoint_dir>/losses.csv,
/// step_NNNNNN.ckpt every checkpoint_every steps and final.ckpt.
TrainResult train(const TrainingConfig& config, const std::filesystem::path& rgb_root,
                  const std::filesystem::path& rgbd_root, const TrainOptions& options = {});

/// RGB-only inference. The depth branch still runs internally to build the
/// cross-refinement query; no depth input exists on this path.
class Predictor {
 public:
  explicit Predictor(const CheckpointData& checkpoint);
  explicit Predictor(const std::filesystem::path& checkpoint_path);

  /// 8-bit RGB of any size -> CV_32F saliency map of the same size.
  cv::Mat predict(const cv::Mat& rgb8) const;
  /// [N, 3, S, S] -> [N, 1, S, S]
  torch::Tensor predict_tensor(const torch::Tensor& rgb) const;

  int input_size() const { return config_.input_size; }

 private:
  TrainingConfig config_;
  mutable Generator generator_{nullptr};
};

struct PredictSummary {
  int written = 0;
  std::vector<std::string> failures;  // "<path>: <reason>"
};

/// Predicts every image in `input` (a file or a directory) and writes 8-bit
/// grayscale maps named <stem>.png into out_dir. Unreadable images are
/// recorded in failures and skipped.
PredictSummary predict_images(const Predictor& predictor, const std::filesystem::path& input,
                              const std::filesystem::path& out_dir);

}  // namespace synsal
