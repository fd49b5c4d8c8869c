#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include <opencv2/imgproc.hpp>

#include "synsal/datasets.hpp"
#include "synsal/errors.hpp"
#include "synsal/image_io.hpp"

namespace synsal {

namespace fs = std::filesystem;

namespace {

using Color = cv::Vec3f;

enum class Split { Rgb, Rgbd, RgbdTest };

struct ToyImage {
  cv::Mat rgb;    // CV_32FC3 in [0, 1]
  cv::Mat mask;   // CV_8U, 0 / 255
  cv::Mat depth;  // CV_32F in [0, 1], near = small
};

class ToyPainter {
 public:
  ToyPainter(const ToyDatasetSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {}

  ToyImage paint(bool cluttered) {
    const int s = spec_.image_size;
    ToyImage img;
    img.mask = cv::Mat::zeros(s, s, CV_8U);
    img.depth = cv::Mat(s, s, CV_32F);
    for (int y = 0; y < s; ++y) {
      // Ground-plane ramp: top of the frame is farthest.
      const float d = 1.0f - 0.4f * static_cast<float>(y) / static_cast<float>(std::max(1, s - 1));
      img.depth.row(y).setTo(d);
    }

    const Color base = random_color(0.25f, 0.75f);
    img.rgb = cluttered ? cluttered_background(base) : smooth_background(base);

    const int n_shapes = std::uniform_int_distribution<int>(spec_.min_shapes, spec_.max_shapes)(rng_);
    std::vector<float> depths(n_shapes);
    for (auto& d : depths) d = uniform(0.1f, 0.45f);
    std::sort(depths.begin(), depths.end(), std::greater<>());  // later shapes occlude earlier ones

    for (int i = 0; i < n_shapes; ++i) {
      cv::Mat shape = cv::Mat::zeros(s, s, CV_8U);
      draw_shape(shape, uniform(0.14f, 0.26f) * s);
      if (cluttered) {
        shade(img.rgb, shape, moderate_contrast_color(base));
      } else {
        const Color color = contrasting_color(base);
        img.rgb.setTo(cv::Scalar(color[0], color[1], color[2]), shape);
      }
      img.depth.setTo(depths[i], shape);
      img.mask.setTo(255, shape);
    }

    add_noise(img.rgb, cluttered ? 0.015f : 0.02f);
    return img;
  }

 private:
  float uniform(float lo, float hi) { return std::uniform_real_distribution<float>(lo, hi)(rng_); }

  Color random_color(float lo, float hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }

  Color contrasting_color(const Color& base) {
    for (;;) {
      Color c = random_color(0.0f, 1.0f);
      if (cv::norm(c - base) > 0.45) return c;
    }
  }

  Color moderate_contrast_color(const Color& base) {
    for (;;) {
      Color c = random_color(0.1f, 0.9f);
      const double d = cv::norm(c - base);
      if (d > 0.4 && d < 0.8) return c;
    }
  }

  // Linear shading across the shape so RGB-D foregrounds are not flat.
  void shade(cv::Mat& rgb, const cv::Mat& shape, const Color& color) {
    const float angle = uniform(0.0f, static_cast<float>(2 * CV_PI));
    const float cx = std::cos(angle), cy = std::sin(angle);
    const float s = static_cast<float>(rgb.rows);
    for (int y = 0; y < rgb.rows; ++y) {
      for (int x = 0; x < rgb.cols; ++x) {
        if (!shape.at<std::uint8_t>(y, x)) continue;
        const float t = 0.12f * ((x - s / 2) * cx + (y - s / 2) * cy) / (s / 2);
        rgb.at<Color>(y, x) = color * (1.0f + t);
      }
    }
  }

  cv::Mat smooth_background(const Color& base) {
    const int s = spec_.image_size;
    const Color other = base + random_color(-0.15f, 0.15f);
    const float angle = uniform(0.0f, static_cast<float>(2 * CV_PI));
    const float cx = std::cos(angle), cy = std::sin(angle);
    cv::Mat bg(s, s, CV_32FC3);
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        const float t = 0.5f + 0.5f * ((x - s / 2.0f) * cx + (y - s / 2.0f) * cy) / (s / 2.0f);
        bg.at<Color>(y, x) = base * (1.0f - t) + other * t;
      }
    }
    return bg;
  }

  // Oriented stripes under pixel noise.
  cv::Mat cluttered_background(const Color& base) {
    const int s = spec_.image_size;
    cv::Mat bg(s, s, CV_32FC3);
    const float freq = uniform(0.3f, 0.9f);
    const float angle = uniform(0.0f, static_cast<float>(CV_PI));
    const float cx = std::cos(angle), cy = std::sin(angle);
    const Color stripe = random_color(-0.09f, 0.09f);
    std::normal_distribution<float> noise(0.0f, 0.035f);
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        const float w = std::sin(freq * (x * cx + y * cy));
        Color c = base + stripe * w;
        for (int k = 0; k < 3; ++k) c[k] += noise(rng_);
        bg.at<Color>(y, x) = c;
      }
    }
    return bg;
  }

  // One filled convex shape (ellipse, rotated rectangle or triangle) whose
  // center lies inside the frame.
  void draw_shape(cv::Mat& canvas, float radius) {
    const int s = canvas.rows;
    const float margin = std::min(radius * 0.6f, s * 0.3f);
    const cv::Point2f center(uniform(margin, s - 1 - margin), uniform(margin, s - 1 - margin));
    const float angle = uniform(0.0f, 180.0f);
    const int kind = std::uniform_int_distribution<int>(0, 2)(rng_);
    if (kind == 0) {
      const cv::Size axes(std::max(1, static_cast<int>(radius)),
                          std::max(1, static_cast<int>(radius * uniform(0.5f, 1.0f))));
      cv::ellipse(canvas, cv::Point(cvRound(center.x), cvRound(center.y)), axes, angle, 0, 360,
                  cv::Scalar(255), cv::FILLED, cv::LINE_8);
      return;
    }
    std::vector<cv::Point> poly;
    if (kind == 1) {
      cv::RotatedRect rect(center, cv::Size2f(2 * radius, 2 * radius * uniform(0.5f, 1.0f)), angle);
      std::array<cv::Point2f, 4> corners;
      rect.points(corners.data());
      for (const auto& p : corners) poly.emplace_back(cvRound(p.x), cvRound(p.y));
    } else {
      const float rot = uniform(0.0f, static_cast<float>(2 * CV_PI));
      for (int k = 0; k < 3; ++k) {
        const float a = rot + static_cast<float>(k * 2 * CV_PI / 3);
        poly.emplace_back(cvRound(center.x + 1.2f * radius * std::cos(a)),
                          cvRound(center.y + 1.2f * radius * std::sin(a)));
      }
    }
    cv::fillConvexPoly(canvas, poly, cv::Scalar(255), cv::LINE_8);
  }

  void add_noise(cv::Mat& rgb, float sigma) {
    std::normal_distribution<float> noise(0.0f, sigma);
    for (int y = 0; y < rgb.rows; ++y) {
      for (int x = 0; x < rgb.cols; ++x) {
        auto& c = rgb.at<Color>(y, x);
        for (int k = 0; k < 3; ++k) c[k] = std::clamp(c[k] + noise(rng_), 0.0f, 1.0f);
      }
    }
  }

  const ToyDatasetSpec& spec_;
  std::mt19937_64 rng_;
};

std::uint64_t image_seed(std::uint64_t seed, Split split, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(split), static_cast<std::uint32_t>(index)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

cv::Mat to_rgb8(const cv::Mat& rgb) {
  cv::Mat out;
  rgb.convertTo(out, CV_8UC3, 255.0);
  return out;
}

cv::Mat to_gray8(const cv::Mat& gray) {
  cv::Mat out;
  gray.convertTo(out, CV_8U, 255.0);
  return out;
}

int write_split(const ToyDatasetSpec& spec, const fs::path& dir, Split split, int count) {
  const bool cluttered = split != Split::Rgb;
  for (int i = 0; i < count; ++i) {
    ToyPainter painter(spec, image_seed(spec.seed, split, i));
    const ToyImage img = painter.paint(cluttered);
    char name[32];
    std::snprintf(name, sizeof(name), "%05d.png", i);
    io::write_rgb(dir / "images" / name, to_rgb8(img.rgb));
    io::write_gray(dir / "gt" / name, img.mask);
    if (cluttered) io::write_gray(dir / "depth" / name, to_gray8(img.depth));
  }
  return count;
}

}  // namespace

void ToyDatasetSpec::validate() const {
  if (n_rgb <= 0 || n_rgbd <= 0) throw ConfigError("toy dataset counts must be positive");
  if (n_test < 0) throw ConfigError("toy test count must be non-negative");
  if (image_size < 16) throw ConfigError("toy image size must be at least 16");
  if (min_shapes <= 0 || max_shapes < min_shapes) throw ConfigError("invalid shapes-per-image range");
}

ToySummary generate_toy_dataset(const ToyDatasetSpec& spec, const fs::path& out_dir) {
  spec.validate();
  ToySummary summary;
  summary.rgb_dir = out_dir / "rgb";
  summary.rgbd_dir = out_dir / "rgbd";
  summary.test_dir = out_dir / "rgbd_test";
  summary.n_rgb = write_split(spec, summary.rgb_dir, Split::Rgb, spec.n_rgb);
  summary.n_rgbd = write_split(spec, summary.rgbd_dir, Split::Rgbd, spec.n_rgbd);
  summary.n_test = write_split(spec, summary.test_dir, Split::RgbdTest, spec.n_test);
  return summary;
}

}  // namespace synsal
