#pragma once

#include <vector>

#include <torch/torch.h>

namespace synsal {

/// Non-local attention unit with query/key/value/output 1x1 projections:
///
///   out = W_z( softmax( theta(q)^T phi(x) ) g(x) ) + x
///
/// The softmax runs over key positions. A query map with a different spatial
/// size than x is bilinearly resized onto x's grid first, so the attention
/// matrix is always [HW x HW].
class AttentionBlockImpl : public torch::nn::Module {
 public:
  AttentionBlockImpl(int64_t query_channels, int64_t value_channels, int64_t embed_dim);

  torch::Tensor forward(const torch::Tensor& query, const torch::Tensor& features);

  /// Row-stochastic attention matrix [N, HW, HW] for the given inputs.
  torch::Tensor attention_weights(const torch::Tensor& query, const torch::Tensor& features);

  int64_t query_channels() const { return query_channels_; }
  int64_t value_channels() const { return value_channels_; }
  int64_t embed_dim() const { return embed_dim_; }

  torch::nn::Conv2d theta{nullptr};
  torch::nn::Conv2d phi{nullptr};
  torch::nn::Conv2d g{nullptr};
  torch::nn::Conv2d out{nullptr};  // W_z

 private:
  torch::Tensor aligned_query(const torch::Tensor& query, const torch::Tensor& features) const;

  int64_t query_channels_;
  int64_t value_channels_;
  int64_t embed_dim_;
};
TORCH_MODULE(AttentionBlock);

/// C/2 with a floor of 4.
int64_t default_embed_dim(int64_t channels);

torch::Tensor self_attention(const torch::Tensor& f, AttentionBlock& block);

/// Refined level-5 feature u5 queries the fused lower-level feature.
torch::Tensor feature_guided_attention(const torch::Tensor& u5, const torch::Tensor& f_tilde,
                                       AttentionBlock& block);

/// A = cat(F, R) queries a first-stage feature u_L. With detach_query the
/// query carries no gradient back into F and R.
torch::Tensor prediction_guided_attention(const torch::Tensor& query_maps, const torch::Tensor& u,
                                          AttentionBlock& block, bool detach_query = false);

/// cat(UP(u_{L+1}), f_L) -> 3x3 conv -> ReLU, keeping f_L's channels and size.
class FuseLevelsImpl : public torch::nn::Module {
 public:
  FuseLevelsImpl(int64_t higher_channels, int64_t lower_channels);
  torch::Tensor forward(const torch::Tensor& u_higher, const torch::Tensor& f_lower);

  torch::nn::Conv2d conv{nullptr};
};
TORCH_MODULE(FuseLevels);

/// Feature aggregation: identity plus average-pool branches, each through a
/// 3x3 conv and upsampled back, averaged.
class FamImpl : public torch::nn::Module {
 public:
  explicit FamImpl(int64_t channels, std::vector<int64_t> factors = {2, 4, 8});
  torch::Tensor forward(const torch::Tensor& f);

  /// Turn every conv into an exact pass-through.
  void reset_to_identity();

  const std::vector<int64_t>& factors() const { return factors_; }

  torch::nn::Conv2d identity_conv{nullptr};
  std::vector<torch::nn::Conv2d> pool_convs;

 private:
  std::vector<int64_t> factors_;
};
TORCH_MODULE(Fam);

/// The subset of {2, 4, 8} that tiles a square map of the given size.
std::vector<int64_t> fam_factors_for(int64_t spatial_size);

}  // namespace synsal
