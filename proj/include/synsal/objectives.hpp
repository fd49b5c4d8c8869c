#pragma once

#include <optional>

#include <torch/torch.h>

#include "synsal/types.hpp"

namespace synsal {

struct LossWeights {
  double lambda_s = 1.75;
  double lambda_d = 1.0;
  double lambda_init = 0.2;
  double lambda_adv_s = 0.002;
  double lambda_adv_d = 0.001;

  void validate() const;
};

/// Scalar values of every loss term for one training step. Terms disabled
/// by the ablation level are zero.
struct LossRecord {
  double init_s = 0.0;
  double init_d = 0.0;
  double fin_s = 0.0;
  double fin_d = 0.0;
  double adv_s = 0.0;
  double adv_d = 0.0;
  double disc_s = 0.0;
  double disc_d = 0.0;
  double total_G = 0.0;
  double total_D = 0.0;

  bool all_finite() const;
  bool operator==(const LossRecord&) const = default;
};

/// Pixel-mean binary cross-entropy; pred is clamped to [1e-7, 1 - 1e-7].
torch::Tensor bce_map_loss(const torch::Tensor& pred, const torch::Tensor& target);

torch::Tensor l1_map_loss(const torch::Tensor& pred, const torch::Tensor& target);

/// Supervised-source logits are labelled 0, unsupervised-source logits 1.
torch::Tensor discriminator_loss(const torch::Tensor& sup_logits, const torch::Tensor& unsup_logits);

/// Pushes unsupervised-source logits toward the supervised label 0.
torch::Tensor adversarial_loss(const torch::Tensor& unsup_logits);

/// A loss value tagged with the domain of the images it was computed on.
struct LossTerm {
  torch::Tensor value;
  Domain domain;
};

/// The six generator terms. Missing terms (ablations) count as zero.
struct GeneratorLossParts {
  std::optional<LossTerm> init_s;
  std::optional<LossTerm> init_d;
  std::optional<LossTerm> fin_s;
  std::optional<LossTerm> fin_d;
  std::optional<LossTerm> adv_s;
  std::optional<LossTerm> adv_d;
};

/// lambda_s fin_s + lambda_d fin_d + lambda_init (lambda_s init_s + lambda_d init_d)
///   + lambda_adv_s adv_s + lambda_adv_d adv_d
/// Throws DomainError when a term was computed on the wrong source: saliency
/// supervision belongs to the RGB source, depth supervision to the RGB-D source,
/// adv_s to RGB-D images and adv_d to RGB images.
torch::Tensor total_generator_loss(const GeneratorLossParts& parts, const LossWeights& weights);

/// Scalar form used to check that a logged record recomposes.
double total_generator_loss(const LossRecord& record, const LossWeights& weights);

torch::Tensor total_discriminator_loss(const torch::Tensor& ds_loss, const torch::Tensor& dt_loss);

}  // namespace synsal
