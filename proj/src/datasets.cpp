#include "synsal/datasets.hpp"

#include <algorithm>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>

#include <opencv2/imgproc.hpp>

#include "synsal/errors.hpp"
#include "synsal/image_io.hpp"

namespace synsal {

namespace fs = std::filesystem;

namespace {

constexpr double kDepthRangeEps = 1e-8;

std::optional<fs::path> find_by_stem(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".png", ".PNG", ".jpg", ".jpeg", ".bmp"}) {
    fs::path candidate = dir / (stem + ext);
    if (fs::exists(candidate)) return candidate;
  }
  return std::nullopt;
}

torch::Tensor gray_to_tensor(const cv::Mat& gray8, int size, int interpolation) {
  cv::Mat f;
  gray8.convertTo(f, CV_32F, 1.0 / 255.0);
  cv::Mat resized;
  if (f.rows == size && f.cols == size) {
    resized = f;
  } else {
    cv::resize(f, resized, cv::Size(size, size), 0, 0, interpolation);
  }
  return torch::from_blob(resized.data, {1, size, size}, torch::kFloat32).clone();
}

torch::Tensor load_mask(const fs::path& path, int size) {
  auto t = gray_to_tensor(io::read_gray(path), size, cv::INTER_NEAREST);
  return (t > 0.5).to(torch::kFloat32);
}

torch::Tensor load_depth(const fs::path& path, int size) {
  return normalize_depth(gray_to_tensor(io::read_gray(path), size, cv::INTER_LINEAR));
}

void warn(LoadedDataset& dataset, std::string message) {
  std::cerr << "warning: " << message << '\n';
  dataset.warnings.push_back(std::move(message));
}

torch::Tensor stack_field(const std::vector<ImageSample>& samples,
                          const std::function<torch::Tensor(const ImageSample&)>& field) {
  std::vector<torch::Tensor> parts;
  parts.reserve(samples.size());
  for (const auto& s : samples) parts.push_back(field(s));
  return torch::stack(parts);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

}  // namespace

torch::Tensor normalize_depth(const torch::Tensor& depth) {
  const double lo = depth.min().item<double>();
  const double hi = depth.max().item<double>();
  if (hi - lo <= kDepthRangeEps) return torch::zeros_like(depth);
  return (depth - lo) / (hi - lo);
}

LoadedDataset load_dataset(const fs::path& root, Domain domain, int input_size, LoadPurpose purpose) {
  const fs::path images_dir = root / "images";
  const fs::path label_dir = root / (domain == Domain::RgbSource ? "gt" : "depth");
  if (!fs::is_directory(images_dir)) throw ConfigError("missing directory " + images_dir.string());
  if (!fs::is_directory(label_dir)) throw ConfigError("missing directory " + label_dir.string());
  if (input_size <= 0) throw ConfigError("input_size must be positive");

  // Saliency masks of the RGB-D source are only touched for evaluation.
  const fs::path eval_gt_dir = root / "gt";
  const bool load_eval_gt = domain == Domain::RgbdSource && purpose == LoadPurpose::Evaluation &&
                            fs::is_directory(eval_gt_dir);

  LoadedDataset dataset;
  for (const auto& image_path : io::list_images(images_dir)) {
    const std::string stem = image_path.stem().string();
    const auto label_path = find_by_stem(label_dir, stem);
    if (!label_path) {
      warn(dataset, "skipping " + stem + ": no file in " + label_dir.string());
      continue;
    }
    ImageSample sample;
    sample.id = stem;
    sample.domain = domain;
    sample.rgb = io::rgb_to_tensor(io::read_rgb(image_path), input_size);
    if (domain == Domain::RgbSource) {
      sample.saliency_gt = load_mask(*label_path, input_size);
    } else {
      sample.depth_gt = load_depth(*label_path, input_size);
      if (load_eval_gt) {
        if (const auto gt_path = find_by_stem(eval_gt_dir, stem)) {
          sample.saliency_gt = load_mask(*gt_path, input_size);
        }
      }
    }
    dataset.samples.push_back(std::move(sample));
  }
  if (dataset.samples.empty()) {
    throw DatasetEmptyError("no matched samples under " + root.string());
  }
  return dataset;
}

torch::Tensor DomainBatch::rgb_images() const {
  return stack_field(rgb, [](const ImageSample& s) { return s.rgb; });
}

torch::Tensor DomainBatch::rgb_saliency() const {
  return stack_field(rgb, [](const ImageSample& s) { return *s.saliency_gt; });
}

torch::Tensor DomainBatch::rgbd_images() const {
  return stack_field(rgbd, [](const ImageSample& s) { return s.rgb; });
}

torch::Tensor DomainBatch::rgbd_depth() const {
  return stack_field(rgbd, [](const ImageSample& s) { return *s.depth_gt; });
}

DomainBatch make_domain_batch(std::vector<ImageSample> rgb, std::vector<ImageSample> rgbd) {
  if (rgb.empty() || rgbd.empty() || rgb.size() != rgbd.size()) {
    throw ShapeError("a domain batch needs two non-empty halves of equal size");
  }
  for (const auto& s : rgb) {
    if (s.domain != Domain::RgbSource || !s.saliency_gt) {
      throw DomainError("RGB half of a batch needs RGB-source samples with saliency masks (" + s.id + ")");
    }
  }
  for (auto& s : rgbd) {
    if (s.domain != Domain::RgbdSource || !s.depth_gt) {
      throw DomainError("RGB-D half of a batch needs RGB-D-source samples with depth (" + s.id + ")");
    }
    s.saliency_gt.reset();
  }
  return DomainBatch{std::move(rgb), std::move(rgbd)};
}

PairSampler::PairSampler(std::size_t n_rgb, std::size_t n_rgbd, int batch_size, std::uint64_t seed)
    : n_rgb_(n_rgb), n_rgbd_(n_rgbd), batch_size_(batch_size), seed_(seed) {
  if (n_rgb == 0 || n_rgbd == 0) throw DatasetEmptyError("pair sampler needs two non-empty datasets");
  if (batch_size <= 0) throw ConfigError("batch size must be positive");
  if (static_cast<std::size_t>(batch_size) > std::min(n_rgb, n_rgbd)) {
    throw ConfigError("batch size " + std::to_string(batch_size) + " exceeds a dataset of size " +
                      std::to_string(std::min(n_rgb, n_rgbd)));
  }
}

std::size_t PairSampler::batches_per_epoch() const {
  const std::size_t n = std::max(n_rgb_, n_rgbd_);
  return (n + batch_size_ - 1) / batch_size_;
}

std::vector<std::size_t> PairSampler::permutation(int side, std::uint64_t epoch) const {
  std::vector<std::size_t> perm(side == 0 ? n_rgb_ : n_rgbd_);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(mix_seed(seed_, static_cast<std::uint64_t>(side), epoch));
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

std::vector<std::size_t> PairSampler::take(int side, std::size_t n, std::uint64_t start) const {
  std::vector<std::size_t> out;
  out.reserve(batch_size_);
  std::uint64_t cached_epoch = ~std::uint64_t{0};
  std::vector<std::size_t> perm;
  for (std::uint64_t j = start; j < start + static_cast<std::uint64_t>(batch_size_); ++j) {
    const std::uint64_t epoch = j / n;
    if (epoch != cached_epoch) {
      perm = permutation(side, epoch);
      cached_epoch = epoch;
    }
    out.push_back(perm[j % n]);
  }
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> PairSampler::batch_indices(
    std::uint64_t step) const {
  const std::uint64_t start = step * static_cast<std::uint64_t>(batch_size_);
  return {take(0, n_rgb_, start), take(1, n_rgbd_, start)};
}

PairedBatches::PairedBatches(const std::vector<ImageSample>& rgb, const std::vector<ImageSample>& rgbd,
                             int batch_size, std::uint64_t seed, std::uint64_t start_step)
    : rgb_(&rgb), rgbd_(&rgbd), sampler_(rgb.size(), rgbd.size(), batch_size, seed), step_(start_step) {}

DomainBatch PairedBatches::at(std::uint64_t step) const {
  const auto [ri, di] = sampler_.batch_indices(step);
  std::vector<ImageSample> rgb;
  std::vector<ImageSample> rgbd;
  for (auto i : ri) rgb.push_back((*rgb_)[i]);
  for (auto i : di) rgbd.push_back((*rgbd_)[i]);
  return make_domain_batch(std::move(rgb), std::move(rgbd));
}

DomainBatch PairedBatches::next() { return at(step_++); }

}  // namespace synsal
