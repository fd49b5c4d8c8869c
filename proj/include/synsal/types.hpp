#pragma once

#include <string>
#include <string_view>

#include <torch/torch.h>

namespace synsal {

// Which training source an image comes from. RGB-source images carry saliency
// masks; RGB-D-source images carry depth maps only.
enum class Domain { RgbSource, RgbdSource };

std::string_view to_string(Domain domain);

// Nested ablation levels: each adds components to the previous one.
enum class Ablation {
  B,     // saliency branch, plain multi-level fusion
  BM,    // + FAM and feature-guided attention
  BMA,   // + depth branch and prediction-guided cross refinement
  Full,  // + patch discriminators and adversarial terms
};

std::string_view to_string(Ablation ablation);
Ablation parse_ablation(std::string_view text);

inline bool has_attention(Ablation a) { return a != Ablation::B; }
inline bool has_depth_branch(Ablation a) { return a == Ablation::BMA || a == Ablation::Full; }
inline bool has_discriminators(Ablation a) { return a == Ablation::Full; }

// The three decoder levels (3, 4, 5) of one branch.
struct LevelFeatures {
  torch::Tensor l3;
  torch::Tensor l4;
  torch::Tensor l5;

  const torch::Tensor& at(int level) const;
  bool defined() const { return l3.defined() && l4.defined() && l5.defined(); }
  LevelFeatures detached() const { return {l3.detach(), l4.detach(), l5.detach()}; }
};

// Bilinear resize of an NCHW tensor (align_corners = false). Returns the input
// unchanged when it already has the requested size.
torch::Tensor resize_bilinear(const torch::Tensor& x, int64_t height, int64_t width);

void require_finite(const torch::Tensor& x, const char* what);

}  // namespace synsal
