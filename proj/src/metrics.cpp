#include "synsal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include <opencv2/imgproc.hpp>

#include "synsal/errors.hpp"
#include "synsal/image_io.hpp"

namespace synsal::metrics {

namespace {

constexpr double kEps = 2.220446049250313e-16;  // MATLAB eps
constexpr double kBeta2 = 0.3;
constexpr double kAlpha = 0.5;

cv::Mat1d as_double(const cv::Mat& m) {
  if (m.empty() || m.channels() != 1) throw ShapeError("metrics expect non-empty single-channel maps");
  cv::Mat1d out;
  m.convertTo(out, CV_64F, m.depth() == CV_8U ? 1.0 / 255.0 : 1.0);
  return out;
}

cv::Mat1b binarize_gt(const cv::Mat& gt) {
  cv::Mat1b out = as_double(gt) > 0.5;
  return out / 255;  // 0 / 1
}

void require_same_size(const cv::Mat& a, const cv::Mat& b) {
  if (a.size() != b.size()) throw ShapeError("prediction and ground truth differ in size");
}

cv::Mat1b binarize_adaptive(const cv::Mat1d& pred) {
  cv::Mat1b out = pred >= adaptive_threshold(pred);
  return out / 255;
}

// Mean and sample standard deviation of pred over the pixels where mask is set.
std::pair<double, double> masked_mean_std(const cv::Mat1d& pred, const cv::Mat1b& mask) {
  double sum = 0.0;
  int n = 0;
  for (int r = 0; r < pred.rows; ++r) {
    for (int c = 0; c < pred.cols; ++c) {
      if (mask(r, c)) {
        sum += pred(r, c);
        ++n;
      }
    }
  }
  if (n == 0) return {0.0, 0.0};
  const double mean = sum / n;
  if (n == 1) return {mean, 0.0};
  double ss = 0.0;
  for (int r = 0; r < pred.rows; ++r) {
    for (int c = 0; c < pred.cols; ++c) {
      if (mask(r, c)) ss += (pred(r, c) - mean) * (pred(r, c) - mean);
    }
  }
  return {mean, std::sqrt(ss / (n - 1))};
}

double object_score(const cv::Mat1d& values, const cv::Mat1b& mask) {
  if (cv::countNonZero(mask) == 0) return 0.0;
  const auto [x, sigma] = masked_mean_std(values, mask);
  return 2.0 * x / (x * x + 1.0 + sigma + kEps);
}

double s_object(const cv::Mat1d& pred, const cv::Mat1b& gt) {
  const cv::Mat1b bg = 1 - gt;
  const cv::Mat1d inverse = 1.0 - pred;
  const double u = cv::mean(gt)[0];
  return u * object_score(pred, gt) + (1.0 - u) * object_score(inverse, bg);
}

double block_ssim(const cv::Mat1d& pred, const cv::Mat1d& gt) {
  const double n = static_cast<double>(pred.total());
  if (n == 0) return 0.0;
  const double x = cv::mean(pred)[0];
  const double y = cv::mean(gt)[0];
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (int r = 0; r < pred.rows; ++r) {
    for (int c = 0; c < pred.cols; ++c) {
      const double dx = pred(r, c) - x;
      const double dy = gt(r, c) - y;
      sxx += dx * dx;
      syy += dy * dy;
      sxy += dx * dy;
    }
  }
  sxx /= (n - 1 + kEps);
  syy /= (n - 1 + kEps);
  sxy /= (n - 1 + kEps);
  const double alpha = 4.0 * x * y * sxy;
  const double beta = (x * x + y * y) * (sxx + syy);
  if (alpha != 0.0) return alpha / (beta + kEps);
  return beta == 0.0 ? 1.0 : 0.0;
}

double s_region(const cv::Mat1d& pred, const cv::Mat1b& gt) {
  const int h = gt.rows;
  const int w = gt.cols;
  // 1-based centroid column X and row Y of the foreground.
  double total = 0.0, sx = 0.0, sy = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (gt(r, c)) {
        total += 1.0;
        sx += c + 1;
        sy += r + 1;
      }
    }
  }
  int X, Y;
  if (total == 0.0) {
    X = static_cast<int>(std::round(w / 2.0));
    Y = static_cast<int>(std::round(h / 2.0));
  } else {
    X = static_cast<int>(std::round(sx / total));
    Y = static_cast<int>(std::round(sy / total));
  }
  const double area = static_cast<double>(w) * h;
  const double w1 = X * Y / area;
  const double w2 = (w - X) * Y / area;
  const double w3 = X * (h - Y) / area;
  const double w4 = 1.0 - w1 - w2 - w3;

  cv::Mat1d g;
  gt.convertTo(g, CV_64F);
  auto block = [&](const cv::Mat1d& m, int r0, int r1, int c0, int c1) {
    return cv::Mat1d(m, cv::Range(r0, r1), cv::Range(c0, c1));
  };
  auto q = [&](int r0, int r1, int c0, int c1) {
    if (r1 <= r0 || c1 <= c0) return 0.0;
    return block_ssim(block(pred, r0, r1, c0, c1), block(g, r0, r1, c0, c1));
  };
  return w1 * q(0, Y, 0, X) + w2 * q(0, Y, X, w) + w3 * q(Y, h, 0, X) + w4 * q(Y, h, X, w);
}

}  // namespace

double mae(const cv::Mat& pred, const cv::Mat& gt) {
  require_same_size(pred, gt);
  cv::Mat1d g;
  binarize_gt(gt).convertTo(g, CV_64F);
  return cv::mean(cv::abs(as_double(pred) - g))[0];
}

double adaptive_threshold(const cv::Mat& pred) {
  return std::min(1.0, 2.0 * cv::mean(as_double(pred))[0]);
}

double f_measure(const cv::Mat& pred, const cv::Mat& gt) {
  require_same_size(pred, gt);
  const cv::Mat1b g = binarize_gt(gt);
  const double positives = cv::countNonZero(g);
  if (positives == 0) throw std::domain_error("f_measure: ground truth has no foreground");
  const cv::Mat1b b = binarize_adaptive(as_double(pred));
  const double predicted = cv::countNonZero(b);
  const double tp = cv::countNonZero(b & g);
  const double precision = predicted > 0 ? tp / predicted : 0.0;
  const double recall = tp / positives;
  const double denom = kBeta2 * precision + recall;
  return denom > 0 ? (1.0 + kBeta2) * precision * recall / denom : 0.0;
}

double s_measure(const cv::Mat& pred, const cv::Mat& gt) {
  require_same_size(pred, gt);
  const cv::Mat1d p = as_double(pred);
  const cv::Mat1b g = binarize_gt(gt);
  const double y = cv::mean(g)[0];
  double q;
  if (y == 0.0) {
    q = 1.0 - cv::mean(p)[0];
  } else if (y == 1.0) {
    q = cv::mean(p)[0];
  } else {
    q = kAlpha * s_object(p, g) + (1.0 - kAlpha) * s_region(p, g);
  }
  return std::clamp(q, 0.0, 1.0);
}

double e_measure(const cv::Mat& pred, const cv::Mat& gt) {
  require_same_size(pred, gt);
  cv::Mat1d fm, g;
  binarize_adaptive(as_double(pred)).convertTo(fm, CV_64F);
  binarize_gt(gt).convertTo(g, CV_64F);
  const double n = static_cast<double>(g.total());
  const double fg = cv::sum(g)[0];

  cv::Mat1d enhanced;
  if (fg == 0.0) {
    enhanced = 1.0 - fm;
  } else if (fg == n) {
    enhanced = fm;
  } else {
    const cv::Mat1d a_fm = fm - cv::mean(fm)[0];
    const cv::Mat1d a_gt = g - cv::mean(g)[0];
    const cv::Mat1d align = 2.0 * a_gt.mul(a_fm) / (a_gt.mul(a_gt) + a_fm.mul(a_fm) + kEps);
    cv::Mat1d shifted = align + 1.0;
    enhanced = shifted.mul(shifted) / 4.0;
  }
  return std::clamp(cv::sum(enhanced)[0] / n, 0.0, 1.0);
}

EvalResult evaluate_dataset(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir) {
  if (!std::filesystem::is_directory(pred_dir)) throw ConfigError("missing directory " + pred_dir.string());
  if (!std::filesystem::is_directory(gt_dir)) throw ConfigError("missing directory " + gt_dir.string());

  std::map<std::string, std::filesystem::path> gt_by_stem;
  for (const auto& path : io::list_images(gt_dir)) gt_by_stem.emplace(path.stem().string(), path);

  EvalResult result;
  double f_sum = 0.0;
  for (const auto& pred_path : io::list_images(pred_dir)) {
    const auto it = gt_by_stem.find(pred_path.stem().string());
    if (it == gt_by_stem.end()) continue;
    const auto& gt_path = it->second;

    const cv::Mat gt = io::gray8_to_map(io::read_gray(gt_path));
    cv::Mat pred = io::gray8_to_map(io::read_gray(pred_path));
    if (pred.size() != gt.size()) {
      cv::Mat resized;
      cv::resize(pred, resized, gt.size(), 0, 0, cv::INTER_LINEAR);
      pred = resized;
    }
    result.mae += mae(pred, gt);
    result.s_measure += s_measure(pred, gt);
    result.e_measure += e_measure(pred, gt);
    if (cv::countNonZero(gt > 0.5) == 0) {
      ++result.f_skipped;
    } else {
      f_sum += f_measure(pred, gt);
    }
    ++result.n_images;
  }
  if (result.n_images == 0) {
    throw DatasetEmptyError("no prediction in " + pred_dir.string() + " matches a file in " + gt_dir.string());
  }
  const double n = result.n_images;
  result.mae /= n;
  result.s_measure /= n;
  result.e_measure /= n;
  const int f_count = result.n_images - result.f_skipped;
  result.f_measure = f_count > 0 ? f_sum / f_count : 0.0;
  return result;
}

std::string csv_header() { return "dataset,mae,f_measure,s_measure,e_measure,n_images"; }

std::string csv_row(const std::string& dataset, const EvalResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%d", dataset.c_str(), r.mae, r.f_measure,
                r.s_measure, r.e_measure, r.n_images);
  return buf;
}

}  // namespace synsal::metrics
