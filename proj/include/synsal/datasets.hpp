#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "synsal/types.hpp"

namespace synsal {

/// One preprocessed image. rgb is [3, S, S] in [0, 1]; saliency_gt and
/// depth_gt are [1, S, S].
struct ImageSample {
  std::string id;
  torch::Tensor rgb;
  std::optional<torch::Tensor> saliency_gt;
  std::optional<torch::Tensor> depth_gt;
  Domain domain = Domain::RgbSource;
};

struct LoadedDataset {
  std::vector<ImageSample> samples;
  std::vector<std::string> warnings;
};

/// Training never reads saliency masks of the RGB-D source; evaluation may.
enum class LoadPurpose { Training, Evaluation };

/// Reads <root>/images with <root>/gt (RGB source) or <root>/depth (RGB-D
/// source), joined by basename. Images without a label file are skipped with a
/// warning. Masks are resized nearest and binarized at 0.5; depth is resized
/// bilinearly and min-max normalized per image.
LoadedDataset load_dataset(const std::filesystem::path& root, Domain domain, int input_size,
                           LoadPurpose purpose = LoadPurpose::Training);

/// Per-image min-max to [0, 1]; a constant map becomes all zeros.
torch::Tensor normalize_depth(const torch::Tensor& depth);

/// One RGB-source and one RGB-D-source mini-batch of equal size.
struct DomainBatch {
  std::vector<ImageSample> rgb;
  std::vector<ImageSample> rgbd;

  torch::Tensor rgb_images() const;       // [B, 3, S, S]
  torch::Tensor rgb_saliency() const;     // [B, 1, S, S]
  torch::Tensor rgbd_images() const;      // [B, 3, S, S]
  torch::Tensor rgbd_depth() const;       // [B, 1, S, S]
};

/// Validates domains and sizes; saliency masks on RGB-D samples are dropped.
DomainBatch make_domain_batch(std::vector<ImageSample> rgb, std::vector<ImageSample> rgbd);

/// Deterministic pairing of the two sources. Each side is an endless stream
/// of per-epoch shuffles of its dataset; batch k takes elements
/// [k*B, (k+1)*B) of both streams. An epoch spans the larger dataset, so the
/// smaller side cycles. batch_indices(k) is random access, which makes resuming
/// at any step exact.
class PairSampler {
 public:
  PairSampler(std::size_t n_rgb, std::size_t n_rgbd, int batch_size, std::uint64_t seed);

  std::size_t batches_per_epoch() const;
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> batch_indices(std::uint64_t step) const;

  int batch_size() const { return batch_size_; }

 private:
  std::vector<std::size_t> permutation(int side, std::uint64_t epoch) const;
  std::vector<std::size_t> take(int side, std::size_t n, std::uint64_t start) const;

  std::size_t n_rgb_;
  std::size_t n_rgbd_;
  int batch_size_;
  std::uint64_t seed_;
};

/// Iterates DomainBatch objects over two loaded datasets.
class PairedBatches {
 public:
  PairedBatches(const std::vector<ImageSample>& rgb, const std::vector<ImageSample>& rgbd,
                int batch_size, std::uint64_t seed, std::uint64_t start_step = 0);

  DomainBatch next();
  DomainBatch at(std::uint64_t step) const;
  std::uint64_t step() const { return step_; }
  const PairSampler& sampler() const { return sampler_; }

 private:
  const std::vector<ImageSample>* rgb_;
  const std::vector<ImageSample>* rgbd_;
  PairSampler sampler_;
  std::uint64_t step_;
};

struct ToyDatasetSpec {
  int n_rgb = 200;
  int n_rgbd = 200;
  int n_test = 50;  // RGB-D images with masks kept apart for evaluation
  int image_size = 64;
  int min_shapes = 1;
  int max_shapes = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ToySummary {
  std::filesystem::path rgb_dir;
  std::filesystem::path rgbd_dir;
  std::filesystem::path test_dir;
  int n_rgb = 0;
  int n_rgbd = 0;
  int n_test = 0;
};

/// Writes a synthetic two-source dataset under out_dir:
///   rgb/{images,gt}            clean backgrounds, saliency masks
///   rgbd/{images,depth,gt}     cluttered backgrounds, depth maps; gt is held out
///   rgbd_test/{images,depth,gt}
/// Foreground shapes have uniform depth strictly nearer (smaller) than the
/// background. Output is a pure function of the spec.
ToySummary generate_toy_dataset(const ToyDatasetSpec& spec, const std::filesystem::path& out_dir);

}  // namespace synsal
