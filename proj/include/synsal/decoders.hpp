#pragma once

#include <array>

#include <torch/torch.h>

#include "synsal/attention.hpp"
#include "synsal/types.hpp"

namespace synsal {

/// Per-level 1x1 prediction layers. Each level's logit map is upsampled to
/// the output size and the three are summed in logit space.
class PredictionHeadsImpl : public torch::nn::Module {
 public:
  explicit PredictionHeadsImpl(std::array<int64_t, 3> channels);
  torch::Tensor forward(const LevelFeatures& features, int64_t out_height, int64_t out_width);

  std::array<torch::nn::Conv2d, 3> heads{nullptr, nullptr, nullptr};
};
TORCH_MODULE(PredictionHeads);

struct InitialDecoding {
  torch::Tensor logits;
  torch::Tensor map;  // sigmoid(logits)
  LevelFeatures u;
};

/// First-stage decoder (S for saliency, T for depth). With attention enabled:
///   u5 = fam(self_attention(f5))
///   u_L = fam(feature_guided_attention(u5, fuse(u_{L+1}, f_L))),  L = 4, 3
/// Without it, plain fusion: u5 = f5, u_L = fuse(u_{L+1}, f_L).
class InitialDecoderImpl : public torch::nn::Module {
 public:
  /// channels: encoder channels at levels 3, 4, 5; sizes: spatial size per level.
  InitialDecoderImpl(std::array<int64_t, 3> channels, std::array<int64_t, 3> sizes,
                     bool with_attention);

  InitialDecoding forward(const LevelFeatures& f, int64_t out_height, int64_t out_width);

  bool with_attention() const { return with_attention_; }

  FuseLevels fuse4{nullptr};
  FuseLevels fuse3{nullptr};
  AttentionBlock attn5{nullptr};
  AttentionBlock attn4{nullptr};
  AttentionBlock attn3{nullptr};
  Fam fam5{nullptr};
  Fam fam4{nullptr};
  Fam fam3{nullptr};
  PredictionHeads heads{nullptr};

 private:
  bool with_attention_;
};
TORCH_MODULE(InitialDecoder);

struct FinalDecoding {
  torch::Tensor saliency_logits;
  torch::Tensor depth_logits;
  torch::Tensor P;
  torch::Tensor Q;
  LevelFeatures v_saliency;
  LevelFeatures v_depth;
};

/// Second stage (SF and TF): A = cat(F, R) queries all six first-stage
/// features, and fresh per-task heads produce the final maps P and Q.
class FinalDecoderImpl : public torch::nn::Module {
 public:
  explicit FinalDecoderImpl(std::array<int64_t, 3> channels);

  FinalDecoding forward(const LevelFeatures& u_saliency, const LevelFeatures& u_depth,
                        const torch::Tensor& F, const torch::Tensor& R, bool detach_query = false);

  std::array<AttentionBlock, 3> saliency_attn{nullptr, nullptr, nullptr};
  std::array<AttentionBlock, 3> depth_attn{nullptr, nullptr, nullptr};
  PredictionHeads saliency_heads{nullptr};
  PredictionHeads depth_heads{nullptr};
};
TORCH_MODULE(FinalDecoder);

}  // namespace synsal
