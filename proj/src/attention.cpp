#include "synsal/attention.hpp"

#include <algorithm>
#include <string>

#include "synsal/errors.hpp"
#include "synsal/types.hpp"

namespace synsal {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

int64_t default_embed_dim(int64_t channels) { return std::max<int64_t>(4, channels / 2); }

AttentionBlockImpl::AttentionBlockImpl(int64_t query_channels, int64_t value_channels,
                                       int64_t embed_dim)
    : query_channels_(query_channels), value_channels_(value_channels), embed_dim_(embed_dim) {
  theta = register_module("theta", nn::Conv2d(nn::Conv2dOptions(query_channels, embed_dim, 1)));
  phi = register_module("phi", nn::Conv2d(nn::Conv2dOptions(value_channels, embed_dim, 1)));
  g = register_module("g", nn::Conv2d(nn::Conv2dOptions(value_channels, embed_dim, 1)));
  out = register_module("out", nn::Conv2d(nn::Conv2dOptions(embed_dim, value_channels, 1)));
}

torch::Tensor AttentionBlockImpl::aligned_query(const torch::Tensor& query,
                                                const torch::Tensor& features) const {
  if (features.dim() != 4 || query.dim() != 4) {
    throw ShapeError("attention inputs must be NCHW");
  }
  if (query.size(1) != query_channels_) {
    throw ShapeError("attention query has " + std::to_string(query.size(1)) +
                     " channels, block expects " + std::to_string(query_channels_));
  }
  if (features.size(1) != value_channels_) {
    throw ShapeError("attention features have " + std::to_string(features.size(1)) +
                     " channels, block expects " + std::to_string(value_channels_));
  }
  if (query.size(0) != features.size(0)) {
    throw ShapeError("attention query and features differ in batch size");
  }
  return resize_bilinear(query, features.size(2), features.size(3));
}

torch::Tensor AttentionBlockImpl::attention_weights(const torch::Tensor& query,
                                                    const torch::Tensor& features) {
  auto q = theta->forward(aligned_query(query, features)).flatten(2);  // [N, E, HW]
  auto k = phi->forward(features).flatten(2);                          // [N, E, HW]
  return torch::softmax(torch::bmm(q.transpose(1, 2), k), -1);          // [N, HWq, HWk]
}

torch::Tensor AttentionBlockImpl::forward(const torch::Tensor& query, const torch::Tensor& features) {
  auto weights = attention_weights(query, features);
  auto v = g->forward(features).flatten(2).transpose(1, 2);  // [N, HW, E]
  auto y = torch::bmm(weights, v).transpose(1, 2);           // [N, E, HW]
  y = y.reshape({features.size(0), embed_dim_, features.size(2), features.size(3)});
  return out->forward(y) + features;
}

torch::Tensor self_attention(const torch::Tensor& f, AttentionBlock& block) { return block(f, f); }

torch::Tensor feature_guided_attention(const torch::Tensor& u5, const torch::Tensor& f_tilde,
                                       AttentionBlock& block) {
  return block(u5, f_tilde);
}

torch::Tensor prediction_guided_attention(const torch::Tensor& query_maps, const torch::Tensor& u,
                                          AttentionBlock& block, bool detach_query) {
  return block(detach_query ? query_maps.detach() : query_maps, u);
}

FuseLevelsImpl::FuseLevelsImpl(int64_t higher_channels, int64_t lower_channels) {
  conv = register_module(
      "conv", nn::Conv2d(nn::Conv2dOptions(higher_channels + lower_channels, lower_channels, 3).padding(1)));
}

torch::Tensor FuseLevelsImpl::forward(const torch::Tensor& u_higher, const torch::Tensor& f_lower) {
  if (u_higher.dim() != 4 || f_lower.dim() != 4 || f_lower.size(2) != 2 * u_higher.size(2) ||
      f_lower.size(3) != 2 * u_higher.size(3)) {
    throw ShapeError("fuse_levels needs the lower level at exactly twice the higher resolution, got " +
                     c10::str(u_higher.sizes()) + " and " + c10::str(f_lower.sizes()));
  }
  auto up = resize_bilinear(u_higher, f_lower.size(2), f_lower.size(3));
  return torch::relu(conv->forward(torch::cat({up, f_lower}, 1)));
}

std::vector<int64_t> fam_factors_for(int64_t spatial_size) {
  std::vector<int64_t> factors;
  for (int64_t k : {2, 4, 8}) {
    if (k <= spatial_size && spatial_size % k == 0) factors.push_back(k);
  }
  return factors;
}

FamImpl::FamImpl(int64_t channels, std::vector<int64_t> factors) : factors_(std::move(factors)) {
  identity_conv = register_module("identity", nn::Conv2d(nn::Conv2dOptions(channels, channels, 3).padding(1)));
  for (int64_t k : factors_) {
    pool_convs.push_back(register_module(
        "pool" + std::to_string(k), nn::Conv2d(nn::Conv2dOptions(channels, channels, 3).padding(1))));
  }
}

torch::Tensor FamImpl::forward(const torch::Tensor& f) {
  if (f.dim() != 4) throw ShapeError("fam expects NCHW input");
  const int64_t h = f.size(2);
  const int64_t w = f.size(3);
  for (int64_t k : factors_) {
    if (h % k != 0 || w % k != 0) {
      throw ShapeError("fam: spatial size " + std::to_string(h) + "x" + std::to_string(w) +
                       " is not divisible by pooling factor " + std::to_string(k));
    }
  }
  auto sum = identity_conv->forward(f);
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const int64_t k = factors_[i];
    auto pooled = F::avg_pool2d(f, F::AvgPool2dFuncOptions(k).stride(k));
    sum = sum + resize_bilinear(pool_convs[i]->forward(pooled), h, w);
  }
  return sum / static_cast<double>(factors_.size() + 1);
}

void FamImpl::reset_to_identity() {
  torch::NoGradGuard no_grad;
  auto reset = [](nn::Conv2d& conv) {
    conv->weight.zero_();
    conv->bias.zero_();
    const int64_t c = conv->weight.size(0);
    for (int64_t i = 0; i < c; ++i) conv->weight[i][i][1][1] = 1.0;
  };
  reset(identity_conv);
  for (auto& conv : pool_convs) reset(conv);
}

}  // namespace synsal
