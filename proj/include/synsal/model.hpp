#pragma once

#include <torch/torch.h>

#include "synsal/adversarial.hpp"
#include "synsal/decoders.hpp"
#include "synsal/encoder.hpp"
#include "synsal/types.hpp"

namespace synsal {

struct ModelConfig {
  EncoderConfig encoder = EncoderConfig::vgg19();
  Ablation ablation = Ablation::Full;
  bool detach_query = false;
  int64_t patch_grid = 0;  // 0 -> input_size / 32

  int64_t effective_patch_grid() const;
};

/// Everything one generator pass produces. Maps that the ablation level does
/// not build are undefined tensors.
struct GeneratorOutput {
  torch::Tensor F;  // initial saliency
  torch::Tensor R;  // initial depth
  torch::Tensor P;  // final saliency
  torch::Tensor Q;  // final depth
  LevelFeatures u_saliency;
  LevelFeatures u_depth;
  LevelFeatures v_saliency;
  LevelFeatures v_depth;

  /// The map used at inference: P when the second stage exists, else F.
  const torch::Tensor& saliency() const { return P.defined() ? P : F; }
};

/// Encoder E, initial decoders S and T, final decoders SF and TF.
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(ModelConfig config);

  GeneratorOutput forward(const torch::Tensor& rgb);

  const ModelConfig& config() const { return config_; }

  Encoder encoder{nullptr};
  InitialDecoder saliency_decoder{nullptr};
  InitialDecoder depth_decoder{nullptr};
  FinalDecoder final_decoder{nullptr};

 private:
  ModelConfig config_;
};
TORCH_MODULE(Generator);

/// DS for the saliency branch, DT for the depth branch.
struct DiscriminatorPair {
  Discriminator ds{nullptr};
  Discriminator dt{nullptr};
};

DiscriminatorPair make_discriminators(const ModelConfig& config);

int64_t parameter_count(const torch::nn::Module& module);

}  // namespace synsal
