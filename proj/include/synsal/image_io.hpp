#pragma once

#include <filesystem>
#include <vector>

#include <opencv2/core.hpp>
#include <torch/torch.h>

namespace synsal::io {

/// 8-bit RGB (not BGR). Throws ConfigError when the file cannot be decoded.
cv::Mat read_rgb(const std::filesystem::path& path);
cv::Mat read_gray(const std::filesystem::path& path);
void write_gray(const std::filesystem::path& path, const cv::Mat& gray8);
void write_rgb(const std::filesystem::path& path, const cv::Mat& rgb8);

bool is_image_file(const std::filesystem::path& path);
/// Image files in dir, sorted by name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

/// 8-bit RGB -> [3, size, size] float in [0, 1], bilinear resize.
torch::Tensor rgb_to_tensor(const cv::Mat& rgb8, int size);

/// Single-channel float map in [0, 1] from a [1, H, W], [H, W] or [1, 1, H, W] tensor.
cv::Mat tensor_to_map(const torch::Tensor& map);
cv::Mat map_to_gray8(const cv::Mat& map);
/// 8-bit gray -> CV_64F in [0, 1].
cv::Mat gray8_to_map(const cv::Mat& gray8);

}  // namespace synsal::io
