#pragma once

#include <array>
#include <vector>

#include <torch/torch.h>

namespace synsal {

struct DiscriminatorOptions {
  std::array<int64_t, 3> level_channels;  // v3, v4, v5
  int64_t patch_grid = 8;
  int64_t adapter_width = 64;
  std::array<int64_t, 4> trunk_widths{256, 128, 64, 1};
  double negative_slope = 0.2;
};

/// Patch discriminator over one branch's {v3, v4, v5, final map}. Every input
/// goes through its own adapter conv, is resized to the G x G patch grid, and
/// the concatenation runs through a four-conv trunk ending in one channel.
/// Output: [N, 1, G, G] logits.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(DiscriminatorOptions options);

  torch::Tensor forward(const std::vector<torch::Tensor>& inputs);

  const DiscriminatorOptions& options() const { return options_; }

  std::array<torch::nn::Conv2d, 4> adapters{nullptr, nullptr, nullptr, nullptr};
  std::array<torch::nn::Conv2d, 4> trunk{nullptr, nullptr, nullptr, nullptr};

 private:
  DiscriminatorOptions options_;
};
TORCH_MODULE(Discriminator);

/// input_size / 32, at least 1.
int64_t default_patch_grid(int input_size);

}  // namespace synsal
