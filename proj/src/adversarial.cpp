#include "synsal/adversarial.hpp"

#include <algorithm>
#include <string>

#include "synsal/errors.hpp"
#include "synsal/types.hpp"

namespace synsal {

namespace nn = torch::nn;

int64_t default_patch_grid(int input_size) { return std::max(1, input_size / 32); }

DiscriminatorImpl::DiscriminatorImpl(DiscriminatorOptions options) : options_(std::move(options)) {
  if (options_.patch_grid <= 0) throw ConfigError("discriminator patch grid must be positive");
  const int64_t a = options_.adapter_width;
  for (int i = 0; i < 3; ++i) {
    adapters[i] = register_module("adapter_v" + std::to_string(i + 3),
                                  nn::Conv2d(nn::Conv2dOptions(options_.level_channels[i], a, 3).padding(1)));
  }
  adapters[3] = register_module("adapter_map", nn::Conv2d(nn::Conv2dOptions(1, a, 3).padding(1)));

  int64_t in = 4 * a;
  for (int i = 0; i < 4; ++i) {
    trunk[i] = register_module("trunk" + std::to_string(i),
                               nn::Conv2d(nn::Conv2dOptions(in, options_.trunk_widths[i], 3).padding(1)));
    in = options_.trunk_widths[i];
  }
  if (in != 1) throw ConfigError("discriminator trunk must end in one channel");
}

torch::Tensor DiscriminatorImpl::forward(const std::vector<torch::Tensor>& inputs) {
  if (inputs.size() != 4) {
    throw ShapeError("discriminator expects {v3, v4, v5, map}, got " + std::to_string(inputs.size()) +
                     " inputs");
  }
  const int64_t grid = options_.patch_grid;
  const double slope = options_.negative_slope;
  std::vector<torch::Tensor> adapted;
  adapted.reserve(4);
  for (int i = 0; i < 4; ++i) {
    auto x = torch::leaky_relu(adapters[i]->forward(inputs[i]), slope);
    adapted.push_back(resize_bilinear(x, grid, grid));
  }
  auto x = torch::cat(adapted, 1);
  for (int i = 0; i < 3; ++i) x = torch::leaky_relu(trunk[i]->forward(x), slope);
  return trunk[3]->forward(x);
}

}  // namespace synsal
