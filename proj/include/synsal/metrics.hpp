#pragma once

#include <filesystem>
#include <string>

#include <opencv2/core.hpp>

namespace synsal::metrics {

// All metrics take single-channel maps of equal size. Predictions are in
// [0, 1]; ground truth is binary (values > 0.5 count as foreground).

double mae(const cv::Mat& pred, const cv::Mat& gt);

/// min(1, 2 * mean(pred)); pixels >= threshold are foreground.
double adaptive_threshold(const cv::Mat& pred);

/// F-beta (beta^2 = 0.3) of the adaptively binarized prediction. Throws
/// std::domain_error if gt has no foreground.
double f_measure(const cv::Mat& pred, const cv::Mat& gt);

/// Structure measure: 0.5 * object-aware + 0.5 * region-aware similarity.
double s_measure(const cv::Mat& pred, const cv::Mat& gt);

/// Enhanced-alignment measure of the adaptively binarized prediction.
double e_measure(const cv::Mat& pred, const cv::Mat& gt);

struct EvalResult {
  double mae = 0.0;
  double f_measure = 0.0;
  double s_measure = 0.0;
  double e_measure = 0.0;
  int n_images = 0;
  int f_skipped = 0;  // images whose gt has no foreground
};

/// Scores every prediction in pred_dir against the ground truth with the same
/// basename in gt_dir. Predictions are resized to the gt size when needed.
EvalResult evaluate_dataset(const std::filesystem::path& pred_dir,
                            const std::filesystem::path& gt_dir);

std::string csv_header();
std::string csv_row(const std::string& dataset, const EvalResult& result);

}  // namespace synsal::metrics
