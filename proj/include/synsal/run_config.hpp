#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "synsal/trainer.hpp"

namespace synsal {

/// A training run as described by a flat `key = value` file. Lines starting
/// with '#' are comments. Unknown keys are rejected.
struct RunConfig {
  TrainingConfig training;
  std::filesystem::path rgb_root;
  std::filesystem::path rgbd_root;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Applies one key/value pair; throws ConfigError naming unknown keys.
void apply_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Every key with its current value, in a fixed order. Parsing the result
/// reproduces the config.
std::string format_run_config(const RunConfig& config);

/// The key/value view of a training config as stored in checkpoints. Run
/// control keys (steps, checkpoint_dir, checkpoint_every) are left out so a
/// checkpoint does not depend on where or how long its run went.
std::string format_training_config(const TrainingConfig& config);
TrainingConfig parse_training_config(const std::string& text);

}  // namespace synsal
