#pragma once

// Definitional reference implementations of the four saliency metrics over
// plain row-major vectors. Written from the metric definitions without
// sharing code with the library.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace synsal::oracle {

struct Map {
  int h = 0;
  int w = 0;
  std::vector<double> v;
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * w + c]; }
};

inline constexpr double kEps = 2.220446049250313e-16;

inline std::vector<int> binary_gt(const Map& gt) {
  std::vector<int> b(gt.v.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = gt.v[i] > 0.5 ? 1 : 0;
  return b;
}

inline std::vector<int> binary_pred(const Map& pred) {
  double sum = 0;
  for (double x : pred.v) sum += x;
  double th = 2 * sum / pred.v.size();
  if (th > 1) th = 1;
  std::vector<int> b(pred.v.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = pred.v[i] >= th ? 1 : 0;
  return b;
}

inline double mae(const Map& pred, const Map& gt) {
  const auto g = binary_gt(gt);
  double s = 0;
  for (std::size_t i = 0; i < g.size(); ++i) s += std::fabs(pred.v[i] - g[i]);
  return s / g.size();
}

inline double f_measure(const Map& pred, const Map& gt) {
  const auto g = binary_gt(gt);
  const auto b = binary_pred(pred);
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (b[i] && g[i]) ++tp;
    if (b[i] && !g[i]) ++fp;
    if (!b[i] && g[i]) ++fn;
  }
  if (tp + fn == 0) throw std::domain_error("empty gt");
  const double precision = (tp + fp) == 0 ? 0.0 : double(tp) / double(tp + fp);
  const double recall = double(tp) / double(tp + fn);
  if (precision == 0 && recall == 0) return 0.0;
  return 1.3 * precision * recall / (0.3 * precision + recall);
}

// E-measure: binary maps take only four joint values, so the enhanced
// alignment is evaluated once per (pred, gt) combination and weighted by its
// pixel count.
inline double e_measure(const Map& pred, const Map& gt) {
  const auto g = binary_gt(gt);
  const auto b = binary_pred(pred);
  const double n = static_cast<double>(g.size());
  double count[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < g.size(); ++i) count[b[i]][g[i]] += 1;
  const double n_gt = count[0][1] + count[1][1];
  const double n_pred = count[1][0] + count[1][1];
  if (n_gt == 0) return (count[0][0] + count[0][1]) / n;  // fraction of predicted background
  if (n_gt == n) return n_pred / n;
  const double mu_p = n_pred / n;
  const double mu_g = n_gt / n;
  double total = 0;
  for (int bp = 0; bp < 2; ++bp) {
    for (int bg = 0; bg < 2; ++bg) {
      const double dp = bp - mu_p;
      const double dg = bg - mu_g;
      const double xi = 2 * dp * dg / (dp * dp + dg * dg + kEps);
      total += count[bp][bg] * (1 + xi) * (1 + xi) / 4;
    }
  }
  return std::min(1.0, std::max(0.0, total / n));
}

namespace detail {

inline double object_similarity(const std::vector<double>& values) {
  if (values.empty()) return 0;
  double mean = 0;
  for (double x : values) mean += x;
  mean /= values.size();
  double var = 0;
  for (double x : values) var += (x - mean) * (x - mean);
  const double sd = values.size() > 1 ? std::sqrt(var / (values.size() - 1)) : 0.0;
  return 2 * mean / (mean * mean + 1 + sd + kEps);
}

inline double ssim(const std::vector<double>& p, const std::vector<double>& g) {
  const double n = p.size();
  if (n == 0) return 0;
  double mp = 0, mg = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    mp += p[i];
    mg += g[i];
  }
  mp /= n;
  mg /= n;
  double vp = 0, vg = 0, cov = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    vp += (p[i] - mp) * (p[i] - mp);
    vg += (g[i] - mg) * (g[i] - mg);
    cov += (p[i] - mp) * (g[i] - mg);
  }
  vp /= (n - 1 + kEps);
  vg /= (n - 1 + kEps);
  cov /= (n - 1 + kEps);
  const double num = 4 * mp * mg * cov;
  const double den = (mp * mp + mg * mg) * (vp + vg);
  if (num != 0) return num / (den + kEps);
  if (den == 0) return 1;
  return 0;
}

}  // namespace detail

inline double s_measure(const Map& pred, const Map& gt) {
  const auto g = binary_gt(gt);
  const double n = g.size();
  double fg = 0, pred_mean = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    fg += g[i];
    pred_mean += pred.v[i];
  }
  pred_mean /= n;
  const double ratio = fg / n;
  if (fg == 0) return std::max(0.0, 1 - pred_mean);
  if (fg == n) return std::max(0.0, pred_mean);

  std::vector<double> inside, outside_inverted;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i]) inside.push_back(pred.v[i]);
    else outside_inverted.push_back(1 - pred.v[i]);
  }
  const double object = ratio * detail::object_similarity(inside) +
                        (1 - ratio) * detail::object_similarity(outside_inverted);

  // Split at the rounded 1-based foreground centroid: rows [0, Y) / [Y, h),
  // cols [0, X) / [X, w).
  double sr = 0, sc = 0;
  for (int r = 0; r < gt.h; ++r) {
    for (int c = 0; c < gt.w; ++c) {
      if (g[static_cast<std::size_t>(r) * gt.w + c]) {
        sr += r + 1;
        sc += c + 1;
      }
    }
  }
  const int Y = static_cast<int>(std::lround(sr / fg));
  const int X = static_cast<int>(std::lround(sc / fg));
  const int rows[3] = {0, Y, gt.h};
  const int cols[3] = {0, X, gt.w};
  double region = 0;
  for (int qr = 0; qr < 2; ++qr) {
    for (int qc = 0; qc < 2; ++qc) {
      std::vector<double> p, q;
      for (int r = rows[qr]; r < rows[qr + 1]; ++r) {
        for (int c = cols[qc]; c < cols[qc + 1]; ++c) {
          p.push_back(pred.at(r, c));
          q.push_back(g[static_cast<std::size_t>(r) * gt.w + c]);
        }
      }
      const double weight = static_cast<double>(p.size()) / n;
      region += weight * detail::ssim(p, q);
    }
  }
  const double s = 0.5 * object + 0.5 * region;
  return std::min(1.0, std::max(0.0, s));
}

}  // namespace synsal::oracle
