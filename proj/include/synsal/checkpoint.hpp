#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace synsal {

/// Named tensors of one parameter group, in a fixed order.
struct TensorGroup {
  std::string name;
  std::vector<std::pair<std::string, torch::Tensor>> tensors;

  const torch::Tensor* find(const std::string& tensor_name) const;
};

/// On-disk training state. See README for the byte layout.
struct CheckpointData {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint32_t format_version = kFormatVersion;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  std::string config;  // key = value lines
  std::vector<TensorGroup> groups;

  const TensorGroup* find_group(const std::string& group_name) const;
};

std::vector<std::uint8_t> serialize_checkpoint(const CheckpointData& data);
CheckpointData deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint(const std::filesystem::path& path, const CheckpointData& data);
CheckpointData read_checkpoint(const std::filesystem::path& path);

/// Parameters of a module as a group (float32, contiguous copies).
TensorGroup module_group(const std::string& name, const torch::nn::Module& module);

/// Copies a group's tensors into the module's parameters by name. Every
/// parameter must be present with a matching shape.
void load_module_group(torch::nn::Module& module, const TensorGroup& group);

TensorGroup adam_group(const std::string& name, const torch::nn::Module& module,
                       torch::optim::Adam& optimizer);
void load_adam_group(const torch::nn::Module& module, torch::optim::Adam& optimizer,
                     const TensorGroup& group);

}  // namespace synsal
