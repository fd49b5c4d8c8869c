#include "synsal/encoder.hpp"

#include <string>

#include "synsal/checkpoint.hpp"
#include "synsal/errors.hpp"

namespace synsal {

namespace nn = torch::nn;

std::string_view to_string(Backbone backbone) {
  return backbone == Backbone::Tiny ? "tiny" : "vgg19";
}

Backbone parse_backbone(std::string_view text) {
  if (text == "tiny" || text == "TINY") return Backbone::Tiny;
  if (text == "vgg19" || text == "VGG19_STYLE" || text == "VGG19") return Backbone::Vgg19Style;
  throw ConfigError("unknown backbone '" + std::string(text) + "' (expected vgg19 or tiny)");
}

EncoderConfig EncoderConfig::vgg19(int input_size) {
  EncoderConfig c;
  c.backbone = Backbone::Vgg19Style;
  c.channels = {64, 128, 256, 512, 512};
  c.convs_per_level = {2, 2, 4, 4, 4};
  c.input_size = input_size;
  return c;
}

EncoderConfig EncoderConfig::tiny(int input_size) {
  EncoderConfig c;
  c.backbone = Backbone::Tiny;
  c.channels = {8, 16, 32, 64, 64};
  c.convs_per_level = {1, 1, 2, 2, 2};
  c.input_size = input_size;
  return c;
}

EncoderConfig EncoderConfig::for_backbone(Backbone backbone, int input_size) {
  return backbone == Backbone::Tiny ? tiny(input_size) : vgg19(input_size);
}

void EncoderConfig::validate() const {
  if (input_size < 16 || input_size % 16 != 0) {
    throw ConfigError("input_size must be a positive multiple of 16, got " +
                      std::to_string(input_size));
  }
  for (int l = 0; l < 5; ++l) {
    if (channels[l] <= 0 || convs_per_level[l] <= 0) {
      throw ConfigError("encoder channels and conv counts must be positive");
    }
  }
}

namespace {

nn::Sequential make_level(int64_t in_channels, int64_t out_channels, int convs, bool pool_first) {
  nn::Sequential level;
  if (pool_first) level->push_back(nn::MaxPool2d(nn::MaxPool2dOptions(2).stride(2)));
  for (int i = 0; i < convs; ++i) {
    auto conv = nn::Conv2d(nn::Conv2dOptions(i == 0 ? in_channels : out_channels, out_channels, 3).padding(1));
    nn::init::kaiming_normal_(conv->weight, 0.0, torch::kFanOut, torch::kReLU);
    nn::init::zeros_(conv->bias);
    level->push_back(conv);
    level->push_back(nn::ReLU());
  }
  return level;
}

}  // namespace

EncoderImpl::EncoderImpl(EncoderConfig config, bool with_depth_branch) : config_(std::move(config)) {
  config_.validate();
  const auto& ch = config_.channels;
  const auto& n = config_.convs_per_level;
  level1_ = register_module("level1", make_level(3, ch[0], n[0], false));
  level2_ = register_module("level2", make_level(ch[0], ch[1], n[1], true));
  saliency_ = register_module("saliency", make_branch());
  if (with_depth_branch) depth_ = register_module("depth", make_branch());

  if (config_.pretrained_weights) {
    const auto archive = read_checkpoint(*config_.pretrained_weights);
    const TensorGroup* group = archive.find_group("encoder");
    if (group == nullptr) {
      throw FormatError("pretrained weights file has no 'encoder' group: " +
                        config_.pretrained_weights->string());
    }
    load_module_group(*this, *group);
  }
}

nn::ModuleList EncoderImpl::make_branch() {
  const auto& ch = config_.channels;
  const auto& n = config_.convs_per_level;
  nn::ModuleList branch;
  for (int level = 3; level <= 5; ++level) {
    branch->push_back(make_level(ch[level - 2], ch[level - 1], n[level - 1], true));
  }
  return branch;
}

LevelFeatures EncoderImpl::run_branch(nn::ModuleList& branch, const torch::Tensor& f2) {
  LevelFeatures out;
  out.l3 = branch[0]->as<nn::SequentialImpl>()->forward(f2);
  out.l4 = branch[1]->as<nn::SequentialImpl>()->forward(out.l3);
  out.l5 = branch[2]->as<nn::SequentialImpl>()->forward(out.l4);
  return out;
}

FeaturePyramid EncoderImpl::forward(const torch::Tensor& rgb) {
  const int64_t s = config_.input_size;
  if (rgb.dim() != 4 || rgb.size(1) != 3 || rgb.size(2) != s || rgb.size(3) != s) {
    throw ShapeError("encoder expects [N, 3, " + std::to_string(s) + ", " + std::to_string(s) +
                     "] input, got " + c10::str(rgb.sizes()));
  }
  require_finite(rgb, "encoder input");

  // ImageNet channel statistics, as VGG weights expect.
  const auto opts = rgb.options();
  const auto mean = torch::tensor({0.485, 0.456, 0.406}, opts).view({1, 3, 1, 1});
  const auto std = torch::tensor({0.229, 0.224, 0.225}, opts).view({1, 3, 1, 1});

  FeaturePyramid pyramid;
  pyramid.f1 = level1_->forward((rgb - mean) / std);
  pyramid.f2 = level2_->forward(pyramid.f1);
  pyramid.saliency = run_branch(saliency_, pyramid.f2);
  if (!depth_.is_empty()) pyramid.depth = run_branch(depth_, pyramid.f2);
  return pyramid;
}

}  // namespace synsal
