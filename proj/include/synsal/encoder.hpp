#pragma once

#include <array>
#include <filesystem>
#include <optional>

#include <torch/torch.h>

#include "synsal/types.hpp"

namespace synsal {

enum class Backbone { Vgg19Style, Tiny };

std::string_view to_string(Backbone backbone);
Backbone parse_backbone(std::string_view text);

/// Layout of the five-level encoder. Level L runs at input_size / 2^(L-1).
struct EncoderConfig {
  Backbone backbone = Backbone::Vgg19Style;
  std::array<int64_t, 5> channels{64, 128, 256, 512, 512};
  std::array<int, 5> convs_per_level{2, 2, 4, 4, 4};
  int input_size = 256;
  std::optional<std::filesystem::path> pretrained_weights;

  static EncoderConfig vgg19(int input_size = 256);
  /// Desk-scale preset with channels (8, 16, 32, 64, 64).
  static EncoderConfig tiny(int input_size = 64);
  static EncoderConfig for_backbone(Backbone backbone, int input_size);

  int64_t level_size(int level) const { return input_size >> (level - 1); }
  int64_t level_channels(int level) const { return channels.at(level - 1); }
  void validate() const;
};

/// The eight encoder maps: two shared levels and three levels per branch.
struct FeaturePyramid {
  torch::Tensor f1;
  torch::Tensor f2;
  LevelFeatures saliency;
  LevelFeatures depth;  // undefined when the encoder has no depth branch
};

/// Two-branch VGG-style encoder. Levels 1-2 are shared; the branches split
/// right after the level-2 pooling and each owns levels 3-5.
class EncoderImpl : public torch::nn::Module {
 public:
  explicit EncoderImpl(EncoderConfig config, bool with_depth_branch = true);

  /// rgb: [N, 3, S, S] in [0, 1] with S == config.input_size; standardized
  /// with ImageNet channel mean and std before level 1.
  FeaturePyramid forward(const torch::Tensor& rgb);

  const EncoderConfig& config() const { return config_; }
  bool has_depth_branch() const { return !depth_.is_empty(); }

  torch::nn::Sequential& shared_level(int level) { return level == 1 ? level1_ : level2_; }
  torch::nn::ModuleList& saliency_branch() { return saliency_; }
  torch::nn::ModuleList& depth_branch() { return depth_; }

 private:
  torch::nn::ModuleList make_branch();
  LevelFeatures run_branch(torch::nn::ModuleList& branch, const torch::Tensor& f2);

  EncoderConfig config_;
  torch::nn::Sequential level1_{nullptr};
  torch::nn::Sequential level2_{nullptr};
  torch::nn::ModuleList saliency_{nullptr};
  torch::nn::ModuleList depth_{nullptr};
};
TORCH_MODULE(Encoder);

}  // namespace synsal
