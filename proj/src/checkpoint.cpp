#include "synsal/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_map>

#include "synsal/errors.hpp"

namespace synsal {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'S', 'Y', 'N', 'S', 'A', 'L', 'C', 'K'};
constexpr std::uint8_t kFloat32 = 0;
constexpr std::uint8_t kInt64 = 1;

class Writer {
 public:
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes.insert(bytes.end(), p, p + sizeof(T));
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  void put_raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes.insert(bytes.end(), p, p + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    T value;
    std::memcpy(&value, take(sizeof(T)), sizeof(T));
    return value;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    const auto* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  const std::uint8_t* take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw FormatError("checkpoint truncated");
    const auto* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

void write_tensor(Writer& w, const std::string& name, const torch::Tensor& t) {
  w.put_string(name);
  auto c = t.detach().contiguous();
  std::uint8_t dtype;
  if (c.scalar_type() == torch::kLong) {
    dtype = kInt64;
  } else {
    dtype = kFloat32;
    c = c.to(torch::kFloat32).contiguous();
  }
  w.put<std::uint8_t>(dtype);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.dim()));
  for (int64_t d : c.sizes()) w.put<std::int64_t>(d);
  w.put_raw(c.data_ptr(), c.numel() * c.element_size());
}

torch::Tensor read_tensor(Reader& r) {
  const auto dtype = r.get<std::uint8_t>();
  if (dtype != kFloat32 && dtype != kInt64) throw FormatError("checkpoint: unknown tensor dtype");
  const auto ndim = r.get<std::uint32_t>();
  std::vector<int64_t> dims(ndim);
  int64_t numel = 1;
  for (auto& d : dims) {
    d = r.get<std::int64_t>();
    if (d < 0) throw FormatError("checkpoint: negative tensor dimension");
    numel *= d;
  }
  const auto type = dtype == kInt64 ? torch::kLong : torch::kFloat32;
  auto t = torch::empty(dims, torch::TensorOptions().dtype(type));
  const std::size_t n = static_cast<std::size_t>(numel) * t.element_size();
  if (n > 0) std::memcpy(t.data_ptr(), r.take(n), n);
  return t;
}

}  // namespace

const torch::Tensor* TensorGroup::find(const std::string& tensor_name) const {
  for (const auto& [name, t] : tensors) {
    if (name == tensor_name) return &t;
  }
  return nullptr;
}

const TensorGroup* CheckpointData::find_group(const std::string& group_name) const {
  for (const auto& g : groups) {
    if (g.name == group_name) return &g;
  }
  return nullptr;
}

std::vector<std::uint8_t> serialize_checkpoint(const CheckpointData& data) {
  Writer w;
  w.put_raw(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(data.format_version);
  w.put<std::uint64_t>(data.step);
  w.put<std::uint64_t>(data.seed);
  w.put_string(data.config);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(data.groups.size()));
  for (const auto& group : data.groups) {
    w.put_string(group.name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(group.tensors.size()));
    for (const auto& [name, t] : group.tensors) write_tensor(w, name, t);
  }
  return std::move(w.bytes);
}

CheckpointData deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (std::memcmp(r.take(sizeof(kMagic)), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a synsal checkpoint (bad magic)");
  }
  CheckpointData data;
  data.format_version = r.get<std::uint32_t>();
  if (data.format_version != CheckpointData::kFormatVersion) {
    throw FormatError("unsupported checkpoint format version " + std::to_string(data.format_version));
  }
  data.step = r.get<std::uint64_t>();
  data.seed = r.get<std::uint64_t>();
  data.config = r.get_string();
  const auto n_groups = r.get<std::uint32_t>();
  data.groups.resize(n_groups);
  for (auto& group : data.groups) {
    group.name = r.get_string();
    const auto n_tensors = r.get<std::uint32_t>();
    group.tensors.reserve(n_tensors);
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
      auto name = r.get_string();
      group.tensors.emplace_back(std::move(name), read_tensor(r));
    }
  }
  if (!r.done()) throw FormatError("checkpoint has trailing bytes");
  return data;
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointData& data) {
  const auto bytes = serialize_checkpoint(data);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointData read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

TensorGroup module_group(const std::string& name, const torch::nn::Module& module) {
  TensorGroup group{name, {}};
  for (const auto& item : module.named_parameters(/*recurse=*/true)) {
    group.tensors.emplace_back(item.key(), item.value().detach().to(torch::kFloat32).contiguous().clone());
  }
  return group;
}

void load_module_group(torch::nn::Module& module, const TensorGroup& group) {
  torch::NoGradGuard no_grad;
  auto params = module.named_parameters(/*recurse=*/true);
  if (params.size() != group.tensors.size()) {
    throw FormatError("group '" + group.name + "' has " + std::to_string(group.tensors.size()) +
                      " tensors, module has " + std::to_string(params.size()) + " parameters");
  }
  for (auto& item : params) {
    const torch::Tensor* t = group.find(item.key());
    if (t == nullptr) throw FormatError("group '" + group.name + "' lacks parameter " + item.key());
    if (t->sizes() != item.value().sizes()) {
      throw FormatError("shape mismatch for " + item.key() + " in group '" + group.name + "'");
    }
    item.value().copy_(*t);
  }
}

TensorGroup adam_group(const std::string& name, const torch::nn::Module& module,
                       torch::optim::Adam& optimizer) {
  TensorGroup group{name, {}};
  auto& state = optimizer.state();
  for (const auto& item : module.named_parameters(/*recurse=*/true)) {
    auto it = state.find(item.value().unsafeGetTensorImpl());
    if (it == state.end()) continue;
    const auto& s = static_cast<const torch::optim::AdamParamState&>(*it->second);
    group.tensors.emplace_back(item.key() + ".step", torch::tensor({s.step()}, torch::kLong));
    group.tensors.emplace_back(item.key() + ".exp_avg", s.exp_avg().detach().contiguous().clone());
    group.tensors.emplace_back(item.key() + ".exp_avg_sq", s.exp_avg_sq().detach().contiguous().clone());
  }
  return group;
}

void load_adam_group(const torch::nn::Module& module, torch::optim::Adam& optimizer,
                     const TensorGroup& group) {
  auto& state = optimizer.state();
  for (const auto& item : module.named_parameters(/*recurse=*/true)) {
    const torch::Tensor* step = group.find(item.key() + ".step");
    if (step == nullptr) continue;
    const torch::Tensor* avg = group.find(item.key() + ".exp_avg");
    const torch::Tensor* avg_sq = group.find(item.key() + ".exp_avg_sq");
    if (avg == nullptr || avg_sq == nullptr) {
      throw FormatError("optimizer group '" + group.name + "' incomplete for " + item.key());
    }
    auto s = std::make_unique<torch::optim::AdamParamState>();
    s->step(step->item<int64_t>());
    s->exp_avg(avg->to(item.value().dtype()).clone());
    s->exp_avg_sq(avg_sq->to(item.value().dtype()).clone());
    state[item.value().unsafeGetTensorImpl()] = std::move(s);
  }
}

}  // namespace synsal
