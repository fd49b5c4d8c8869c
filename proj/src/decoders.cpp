#include "synsal/decoders.hpp"

#include <string>

#include "synsal/errors.hpp"

namespace synsal {

namespace nn = torch::nn;

PredictionHeadsImpl::PredictionHeadsImpl(std::array<int64_t, 3> channels) {
  for (int i = 0; i < 3; ++i) {
    heads[i] = register_module("level" + std::to_string(i + 3),
                               nn::Conv2d(nn::Conv2dOptions(channels[i], 1, 1)));
  }
}

torch::Tensor PredictionHeadsImpl::forward(const LevelFeatures& features, int64_t out_height,
                                           int64_t out_width) {
  torch::Tensor logits;
  for (int i = 0; i < 3; ++i) {
    auto level = resize_bilinear(heads[i]->forward(features.at(i + 3)), out_height, out_width);
    logits = logits.defined() ? logits + level : level;
  }
  return logits;
}

InitialDecoderImpl::InitialDecoderImpl(std::array<int64_t, 3> channels, std::array<int64_t, 3> sizes,
                                       bool with_attention)
    : with_attention_(with_attention) {
  const auto [c3, c4, c5] = channels;
  fuse4 = register_module("fuse4", FuseLevels(c5, c4));
  fuse3 = register_module("fuse3", FuseLevels(c4, c3));
  if (with_attention_) {
    attn5 = register_module("attn5", AttentionBlock(c5, c5, default_embed_dim(c5)));
    attn4 = register_module("attn4", AttentionBlock(c5, c4, default_embed_dim(c4)));
    attn3 = register_module("attn3", AttentionBlock(c5, c3, default_embed_dim(c3)));
    fam5 = register_module("fam5", Fam(c5, fam_factors_for(sizes[2])));
    fam4 = register_module("fam4", Fam(c4, fam_factors_for(sizes[1])));
    fam3 = register_module("fam3", Fam(c3, fam_factors_for(sizes[0])));
  }
  heads = register_module("heads", PredictionHeads(channels));
}

InitialDecoding InitialDecoderImpl::forward(const LevelFeatures& f, int64_t out_height,
                                            int64_t out_width) {
  if (!f.defined()) throw ShapeError("initial decoder needs all three levels");
  InitialDecoding out;
  if (with_attention_) {
    out.u.l5 = fam5(self_attention(f.l5, attn5));
    out.u.l4 = fam4(feature_guided_attention(out.u.l5, fuse4(out.u.l5, f.l4), attn4));
    out.u.l3 = fam3(feature_guided_attention(out.u.l5, fuse3(out.u.l4, f.l3), attn3));
  } else {
    out.u.l5 = f.l5;
    out.u.l4 = fuse4(out.u.l5, f.l4);
    out.u.l3 = fuse3(out.u.l4, f.l3);
  }
  out.logits = heads(out.u, out_height, out_width);
  out.map = torch::sigmoid(out.logits);
  return out;
}

FinalDecoderImpl::FinalDecoderImpl(std::array<int64_t, 3> channels) {
  for (int i = 0; i < 3; ++i) {
    const int64_t c = channels[i];
    const std::string level = std::to_string(i + 3);
    saliency_attn[i] = register_module("saliency_attn" + level, AttentionBlock(2, c, default_embed_dim(c)));
    depth_attn[i] = register_module("depth_attn" + level, AttentionBlock(2, c, default_embed_dim(c)));
  }
  saliency_heads = register_module("saliency_heads", PredictionHeads(channels));
  depth_heads = register_module("depth_heads", PredictionHeads(channels));
}

FinalDecoding FinalDecoderImpl::forward(const LevelFeatures& u_saliency, const LevelFeatures& u_depth,
                                        const torch::Tensor& F, const torch::Tensor& R,
                                        bool detach_query) {
  if (!u_saliency.defined() || !u_depth.defined()) {
    throw ShapeError("final decoder needs first-stage features of both branches");
  }
  if (F.sizes() != R.sizes() || F.dim() != 4 || F.size(1) != 1) {
    throw ShapeError("initial maps F and R must both be [N, 1, H, W]");
  }
  const auto query = torch::cat({F, R}, 1);

  FinalDecoding out;
  auto refine = [&](std::array<AttentionBlock, 3>& blocks, const LevelFeatures& u) {
    LevelFeatures v;
    v.l3 = prediction_guided_attention(query, u.l3, blocks[0], detach_query);
    v.l4 = prediction_guided_attention(query, u.l4, blocks[1], detach_query);
    v.l5 = prediction_guided_attention(query, u.l5, blocks[2], detach_query);
    return v;
  };
  out.v_saliency = refine(saliency_attn, u_saliency);
  out.v_depth = refine(depth_attn, u_depth);
  out.saliency_logits = saliency_heads(out.v_saliency, F.size(2), F.size(3));
  out.depth_logits = depth_heads(out.v_depth, R.size(2), R.size(3));
  out.P = torch::sigmoid(out.saliency_logits);
  out.Q = torch::sigmoid(out.depth_logits);
  return out;
}

}  // namespace synsal
