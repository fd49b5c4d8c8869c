#include "synsal/image_io.hpp"

#include <algorithm>
#include <cstring>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "synsal/errors.hpp"

namespace synsal::io {

namespace fs = std::filesystem;

cv::Mat read_rgb(const fs::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw ConfigError("cannot read image " + path.string());
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return rgb;
}

cv::Mat read_gray(const fs::path& path) {
  cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (gray.empty()) throw ConfigError("cannot read image " + path.string());
  return gray;
}

void write_gray(const fs::path& path, const cv::Mat& gray8) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), gray8)) throw ConfigError("cannot write " + path.string());
}

void write_rgb(const fs::path& path, const cv::Mat& rgb8) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  cv::Mat bgr;
  cv::cvtColor(rgb8, bgr, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path.string(), bgr)) throw ConfigError("cannot write " + path.string());
}

bool is_image_file(const fs::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

torch::Tensor rgb_to_tensor(const cv::Mat& rgb8, int size) {
  cv::Mat resized;
  if (rgb8.rows == size && rgb8.cols == size) {
    resized = rgb8;
  } else {
    cv::resize(rgb8, resized, cv::Size(size, size), 0, 0, cv::INTER_LINEAR);
  }
  cv::Mat f;
  resized.convertTo(f, CV_32FC3, 1.0 / 255.0);
  auto t = torch::from_blob(f.data, {size, size, 3}, torch::kFloat32).clone();
  return t.permute({2, 0, 1}).contiguous();
}

cv::Mat tensor_to_map(const torch::Tensor& map) {
  auto t = map.detach().to(torch::kFloat32).contiguous();
  while (t.dim() > 2) {
    if (t.size(0) != 1) throw ShapeError("tensor_to_map expects a single map");
    t = t.squeeze(0);
  }
  cv::Mat out(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), CV_32F);
  std::memcpy(out.data, t.data_ptr<float>(), t.numel() * sizeof(float));
  return out;
}

cv::Mat map_to_gray8(const cv::Mat& map) {
  cv::Mat gray;
  map.convertTo(gray, CV_8U, 255.0);  // saturating, rounds to nearest
  return gray;
}

cv::Mat gray8_to_map(const cv::Mat& gray8) {
  cv::Mat out;
  gray8.convertTo(out, CV_64F, 1.0 / 255.0);
  return out;
}

}  // namespace synsal::io
