#include "synsal/model.hpp"

namespace synsal {

int64_t ModelConfig::effective_patch_grid() const {
  return patch_grid > 0 ? patch_grid : default_patch_grid(encoder.input_size);
}

namespace {

std::array<int64_t, 3> decoder_channels(const EncoderConfig& e) {
  return {e.level_channels(3), e.level_channels(4), e.level_channels(5)};
}

std::array<int64_t, 3> decoder_sizes(const EncoderConfig& e) {
  return {e.level_size(3), e.level_size(4), e.level_size(5)};
}

}  // namespace

GeneratorImpl::GeneratorImpl(ModelConfig config) : config_(std::move(config)) {
  const Ablation a = config_.ablation;
  const auto& e = config_.encoder;
  encoder = register_module("encoder", Encoder(e, has_depth_branch(a)));
  saliency_decoder = register_module(
      "S", InitialDecoder(decoder_channels(e), decoder_sizes(e), has_attention(a)));
  if (has_depth_branch(a)) {
    depth_decoder = register_module("T", InitialDecoder(decoder_channels(e), decoder_sizes(e), true));
    final_decoder = register_module("SF_TF", FinalDecoder(decoder_channels(e)));
  }
}

GeneratorOutput GeneratorImpl::forward(const torch::Tensor& rgb) {
  const auto pyramid = encoder(rgb);
  const int64_t h = rgb.size(2);
  const int64_t w = rgb.size(3);

  GeneratorOutput out;
  auto s = saliency_decoder(pyramid.saliency, h, w);
  out.F = s.map;
  out.u_saliency = s.u;
  if (depth_decoder.is_empty()) return out;

  auto t = depth_decoder(pyramid.depth, h, w);
  out.R = t.map;
  out.u_depth = t.u;

  auto fin = final_decoder(out.u_saliency, out.u_depth, out.F, out.R, config_.detach_query);
  out.P = fin.P;
  out.Q = fin.Q;
  out.v_saliency = fin.v_saliency;
  out.v_depth = fin.v_depth;
  return out;
}

DiscriminatorPair make_discriminators(const ModelConfig& config) {
  DiscriminatorOptions options;
  options.level_channels = decoder_channels(config.encoder);
  options.patch_grid = config.effective_patch_grid();
  return {Discriminator(options), Discriminator(options)};
}

int64_t parameter_count(const torch::nn::Module& module) {
  int64_t n = 0;
  for (const auto& p : module.parameters()) n += p.numel();
  return n;
}

}  // namespace synsal
