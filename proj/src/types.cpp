#include "synsal/types.hpp"

#include <string>

#include "synsal/errors.hpp"

namespace synsal {

std::string_view to_string(Domain domain) {
  return domain == Domain::RgbSource ? "RGB_SOURCE" : "RGBD_SOURCE";
}

std::string_view to_string(Ablation ablation) {
  switch (ablation) {
    case Ablation::B:
      return "B";
    case Ablation::BM:
      return "B+M";
    case Ablation::BMA:
      return "B+M+A";
    case Ablation::Full:
      return "FULL";
  }
  return "FULL";
}

Ablation parse_ablation(std::string_view text) {
  if (text == "B") return Ablation::B;
  if (text == "B+M" || text == "B_M") return Ablation::BM;
  if (text == "B+M+A" || text == "B_M_A") return Ablation::BMA;
  if (text == "FULL" || text == "full") return Ablation::Full;
  throw ConfigError("unknown ablation '" + std::string(text) + "' (expected B, B+M, B+M+A or FULL)");
}

const torch::Tensor& LevelFeatures::at(int level) const {
  switch (level) {
    case 3:
      return l3;
    case 4:
      return l4;
    case 5:
      return l5;
    default:
      throw std::out_of_range("decoder level must be 3, 4 or 5");
  }
}

torch::Tensor resize_bilinear(const torch::Tensor& x, int64_t height, int64_t width) {
  if (x.size(-2) == height && x.size(-1) == width) return x;
  namespace F = torch::nn::functional;
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .size(std::vector<int64_t>{height, width})
                               .mode(torch::kBilinear)
                               .align_corners(false));
}

void require_finite(const torch::Tensor& x, const char* what) {
  if (!torch::isfinite(x).all().item<bool>()) {
    throw NonFiniteError(std::string(what) + " contains non-finite values");
  }
}

}  // namespace synsal
