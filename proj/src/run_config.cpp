#include "synsal/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "synsal/errors.hpp"

namespace synsal {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("invalid value '" + value + "' for key '" + key + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("invalid boolean '" + value + "' for key '" + key + "'");
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SYNSAL_DOUBLE_FIELD(name, member)                                                        \
  Field {                                                                                        \
    name, [](RunConfig& c, const std::string& v) { c.member = parse_number<double>(name, v); }, \
        [](const RunConfig& c) { return fmt_double(c.member); }                                  \
  }
#define SYNSAL_INT_FIELD(name, type, member)                                                   \
  Field {                                                                                      \
    name, [](RunConfig& c, const std::string& v) { c.member = parse_number<type>(name, v); }, \
        [](const RunConfig& c) { return std::to_string(c.member); }                            \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"rgb_root", [](RunConfig& c, const std::string& v) { c.rgb_root = v; },
            [](const RunConfig& c) { return c.rgb_root.string(); }},
      Field{"rgbd_root", [](RunConfig& c, const std::string& v) { c.rgbd_root = v; },
            [](const RunConfig& c) { return c.rgbd_root.string(); }},
      Field{"backbone", [](RunConfig& c, const std::string& v) { c.training.backbone = parse_backbone(v); },
            [](const RunConfig& c) { return std::string(to_string(c.training.backbone)); }},
      SYNSAL_INT_FIELD("input_size", int, training.input_size),
      SYNSAL_INT_FIELD("batch_size", int, training.batch_size),
      SYNSAL_INT_FIELD("steps", int, training.steps),
      SYNSAL_INT_FIELD("seed", std::uint64_t, training.seed),
      Field{"ablation", [](RunConfig& c, const std::string& v) { c.training.ablation = parse_ablation(v); },
            [](const RunConfig& c) { return std::string(to_string(c.training.ablation)); }},
      SYNSAL_DOUBLE_FIELD("lr_generator", training.lr_generator),
      SYNSAL_DOUBLE_FIELD("lr_discriminator", training.lr_discriminator),
      SYNSAL_DOUBLE_FIELD("adam_beta1", training.adam_beta1),
      SYNSAL_DOUBLE_FIELD("adam_beta2", training.adam_beta2),
      SYNSAL_DOUBLE_FIELD("lambda_s", training.loss_weights.lambda_s),
      SYNSAL_DOUBLE_FIELD("lambda_d", training.loss_weights.lambda_d),
      SYNSAL_DOUBLE_FIELD("lambda_init", training.loss_weights.lambda_init),
      SYNSAL_DOUBLE_FIELD("lambda_adv_s", training.loss_weights.lambda_adv_s),
      SYNSAL_DOUBLE_FIELD("lambda_adv_d", training.loss_weights.lambda_adv_d),
      Field{"checkpoint_dir", [](RunConfig& c, const std::string& v) { c.training.checkpoint_dir = v; },
            [](const RunConfig& c) { return c.training.checkpoint_dir.string(); }},
      SYNSAL_INT_FIELD("checkpoint_every", int, training.checkpoint_every),
      Field{"detach_query",
            [](RunConfig& c, const std::string& v) { c.training.detach_query = parse_bool("detach_query", v); },
            [](const RunConfig& c) { return std::string(c.training.detach_query ? "true" : "false"); }},
      SYNSAL_INT_FIELD("patch_grid", int64_t, training.patch_grid),
      Field{"pretrained_weights",
            [](RunConfig& c, const std::string& v) {
              if (v.empty()) {
                c.training.pretrained_weights.reset();
              } else {
                c.training.pretrained_weights = v;
              }
            },
            [](const RunConfig& c) {
              return c.training.pretrained_weights ? c.training.pretrained_weights->string() : std::string();
            }},
  };
  return table;
}

#undef SYNSAL_DOUBLE_FIELD
#undef SYNSAL_INT_FIELD

bool is_training_key(const std::string& key) { return key != "rgb_root" && key != "rgbd_root"; }

// Where and for how long a run goes; not part of the trained state.
bool is_run_control_key(const std::string& key) {
  return key == "steps" || key == "checkpoint_dir" || key == "checkpoint_every";
}

}  // namespace

void apply_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(config, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    apply_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

std::string format_run_config(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(config) + "\n";
  return out;
}

std::string format_training_config(const TrainingConfig& config) {
  RunConfig rc;
  rc.training = config;
  std::string out;
  for (const auto& f : fields()) {
    if (is_training_key(f.key) && !is_run_control_key(f.key)) {
      out += std::string(f.key) + " = " + f.get(rc) + "\n";
    }
  }
  return out;
}

TrainingConfig parse_training_config(const std::string& text) { return parse_run_config(text).training; }

}  // namespace synsal
