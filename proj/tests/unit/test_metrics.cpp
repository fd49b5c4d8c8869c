#include "../support/doctest_torch.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "../support/metric_oracles.hpp"
#include "../support/test_support.hpp"
#include "synsal/errors.hpp"
#include "synsal/metrics.hpp"

using namespace synsal;
namespace m = synsal::metrics;

namespace {

cv::Mat to_mat(const oracle::Map& map) {
  cv::Mat1d out(map.h, map.w);
  for (int r = 0; r < map.h; ++r)
    for (int c = 0; c < map.w; ++c) out(r, c) = map.at(r, c);
  return out;
}

oracle::Map random_pred(std::mt19937_64& rng, int h, int w) {
  oracle::Map map{h, w, {}};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> style(0, 2);
  const int s = style(rng);
  for (int i = 0; i < h * w; ++i) {
    double x = u(rng);
    if (s == 1) x = std::round(x * 4) / 4;  // ties and flat blocks
    if (s == 2) x = x * x * x;              // skewed toward zero
    map.v.push_back(x);
  }
  return map;
}

oracle::Map random_gt(std::mt19937_64& rng, int h, int w, bool allow_empty) {
  oracle::Map map{h, w, {}};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double p = u(rng);
  for (int i = 0; i < h * w; ++i) map.v.push_back(u(rng) < p ? 1.0 : 0.0);
  if (!allow_empty && std::all_of(map.v.begin(), map.v.end(), [](double x) { return x == 0; })) {
    map.v[rng() % map.v.size()] = 1.0;
  }
  return map;
}

cv::Mat1d filled(int h, int w, double value) { return cv::Mat1d(h, w, value); }

cv::Mat1d half_mask(int h, int w) {
  cv::Mat1d g = filled(h, w, 0.0);
  g(cv::Rect(0, 0, w / 2, h)) = 1.0;
  return g;
}

cv::Mat1d checker(int n) {
  cv::Mat1d g(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) g(r, c) = (r + c) % 2;
  return g;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("mae examples") {
  cv::Mat1d gt = half_mask(6, 6);
  CHECK(m::mae(gt, gt) == 0.0);
  CHECK(m::mae(filled(6, 6, 0.5), gt) == doctest::Approx(0.5).epsilon(1e-15));
  cv::Mat1d p = (cv::Mat1d(1, 2) << 0.2, 0.8);
  cv::Mat1d g = (cv::Mat1d(1, 2) << 0.0, 1.0);
  CHECK(std::fabs(m::mae(p, g) - 0.2) < 1e-15);
  CHECK_THROWS_AS(m::mae(filled(2, 2, 0), filled(3, 2, 0)), ShapeError);
}

TEST_CASE("f-measure examples") {
  cv::Mat1d gt = half_mask(8, 8);
  CHECK(m::f_measure(gt, gt) == doctest::Approx(1.0).epsilon(1e-15));
  // constant 1 binarizes to all foreground: precision 0.5, recall 1
  const double expected = (1.3 * 0.5) / (0.3 * 0.5 + 1.0);
  CHECK(std::fabs(m::f_measure(filled(8, 8, 1.0), gt) - expected) < 1e-12);
  CHECK(std::fabs(expected - 0.5652173913043478) < 1e-12);
  CHECK_THROWS_AS(m::f_measure(filled(8, 8, 0.3), filled(8, 8, 0.0)), std::domain_error);
}

TEST_CASE("empty binarized prediction gives zero") {
  // a constant 0.3 sits below its own threshold 0.6
  CHECK(m::f_measure(filled(4, 4, 0.3), half_mask(4, 4)) == 0.0);
  cv::Mat1d p = filled(4, 4, 0.0);
  p(0, 3) = 1.0;  // only a background pixel survives
  CHECK(m::f_measure(p, half_mask(4, 4)) == 0.0);
}

TEST_CASE("s-measure examples") {
  cv::Mat1d gt = half_mask(16, 16);
  CHECK(m::s_measure(gt, gt) == doctest::Approx(1.0).epsilon(1e-12));
  cv::Mat1d c = checker(16);
  const double inverted = m::s_measure(1.0 - c, c);
  CHECK(inverted < 0.5);
  // regression anchor
  CHECK(inverted == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m::s_measure(1.0 - gt, gt) < 0.5);
}

TEST_CASE("e-measure examples") {
  cv::Mat1d gt = half_mask(16, 16);
  CHECK(m::e_measure(gt, gt) == doctest::Approx(1.0).epsilon(1e-12));
  const double inverted = m::e_measure(1.0 - gt, gt);
  CHECK(inverted < 0.01);
  // regression anchor: every pixel disagrees, alignment -1, enhanced 0
  CHECK(inverted == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("8-bit inputs are scaled to [0, 1]") {
  cv::Mat1b gt8(4, 4, uchar(0));
  gt8(cv::Rect(0, 0, 2, 4)) = 255;
  cv::Mat1b p8(4, 4, uchar(51));  // 0.2
  CHECK(m::mae(p8, gt8) == doctest::Approx(0.5 * 0.8 + 0.5 * 0.2).epsilon(1e-12));
}

TEST_CASE("oracle agreement on random 8x8 instances") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto pred = random_pred(rng, 8, 8);
    const auto gt = random_gt(rng, 8, 8, trial % 10 == 0);
    const cv::Mat p = to_mat(pred);
    const cv::Mat g = to_mat(gt);
    CAPTURE(trial);
    CHECK(std::fabs(m::mae(p, g) - oracle::mae(pred, gt)) <= 1e-12);
    CHECK(std::fabs(m::s_measure(p, g) - oracle::s_measure(pred, gt)) <= 1e-9);
    CHECK(std::fabs(m::e_measure(p, g) - oracle::e_measure(pred, gt)) <= 1e-9);
    if (std::any_of(gt.v.begin(), gt.v.end(), [](double x) { return x > 0.5; })) {
      CHECK(std::fabs(m::f_measure(p, g) - oracle::f_measure(pred, gt)) <= 1e-12);
    }
  }
}

TEST_CASE("values stay in [0, 1]; mae, f and e are flip invariant") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const cv::Mat p = to_mat(random_pred(rng, 9, 7));
    const cv::Mat g = to_mat(random_gt(rng, 9, 7, false));
    cv::Mat pf, gf;
    cv::flip(p, pf, 1);
    cv::flip(g, gf, 1);
    for (auto fn : {&m::mae, &m::f_measure, &m::s_measure, &m::e_measure}) {
      const double v = fn(p, g);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      if (fn != &m::s_measure) CHECK(fn(pf, gf) == doctest::Approx(v).epsilon(1e-12));
    }
  }
}

TEST_CASE("mae is convex under blending") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const cv::Mat1d g = to_mat(random_gt(rng, 8, 8, true));
    const cv::Mat1d p1 = to_mat(random_pred(rng, 8, 8));
    const cv::Mat1d p2 = to_mat(random_pred(rng, 8, 8));
    const double a = 0.3;
    const cv::Mat1d blend = a * p1 + (1 - a) * p2;
    CHECK(m::mae(blend, g) <= a * m::mae(p1, g) + (1 - a) * m::mae(p2, g) + 1e-12);
    // same side of gt pixelwise -> equality
    const cv::Mat1d q1 = 0.5 * p1 + 0.5 * g;
    const cv::Mat1d q2 = 0.2 * p1 + 0.8 * g;
    const cv::Mat1d mix = a * q1 + (1 - a) * q2;
    CHECK(m::mae(mix, g) == doctest::Approx(a * m::mae(q1, g) + (1 - a) * m::mae(q2, g)).epsilon(1e-12));
  }
}

TEST_CASE("evaluate_dataset") {
  testing::TempDir dir("eval");
  const auto gt_dir = dir / "gt";
  const auto pred_dir = dir / "pred";
  std::filesystem::create_directories(gt_dir);
  std::filesystem::create_directories(pred_dir);
  std::mt19937_64 rng(1);
  std::vector<std::string> names = {"c", "a", "b"};
  for (const auto& name : names) {
    cv::Mat1b g(12, 12, uchar(0));
    g(cv::Rect(int(rng() % 5), int(rng() % 5), 5, 6)) = 255;
    cv::imwrite((gt_dir / (name + ".png")).string(), g);
  }

  SUBCASE("identical predictions") {
    for (const auto& name : names) {
      std::filesystem::copy_file(gt_dir / (name + ".png"), pred_dir / (name + ".png"));
    }
    const auto r = m::evaluate_dataset(pred_dir, gt_dir);
    CHECK(r.n_images == 3);
    CHECK(r.mae == 0.0);
    CHECK(r.f_measure == doctest::Approx(1.0));
    CHECK(r.s_measure == doctest::Approx(1.0));
    CHECK(r.e_measure == doctest::Approx(1.0));
  }

  SUBCASE("single image equals per-image metrics") {
    cv::Mat1b p(12, 12);
    cv::randu(p, 0, 255);
    cv::imwrite((pred_dir / "a.png").string(), p);
    const auto r = m::evaluate_dataset(pred_dir, gt_dir);
    const cv::Mat gt = cv::imread((gt_dir / "a.png").string(), cv::IMREAD_GRAYSCALE);
    CHECK(r.n_images == 1);
    CHECK(r.mae == doctest::Approx(m::mae(p, gt)).epsilon(1e-12));
    CHECK(r.f_measure == doctest::Approx(m::f_measure(p, gt)).epsilon(1e-12));
    CHECK(r.s_measure == doctest::Approx(m::s_measure(p, gt)).epsilon(1e-12));
    CHECK(r.e_measure == doctest::Approx(m::e_measure(p, gt)).epsilon(1e-12));
  }

  SUBCASE("mismatched basenames only") {
    cv::imwrite((pred_dir / "zzz.png").string(), cv::Mat1b(12, 12, uchar(0)));
    CHECK_THROWS_AS(m::evaluate_dataset(pred_dir, gt_dir), DatasetEmptyError);
  }

  SUBCASE("empty gt is skipped for f-measure only") {
    cv::imwrite((gt_dir / "e.png").string(), cv::Mat1b(12, 12, uchar(0)));
    for (const auto& name : {"a", "b", "c", "e"}) {
      std::filesystem::copy_file(gt_dir / (std::string(name) + ".png"), pred_dir / (std::string(name) + ".png"));
    }
    const auto r = m::evaluate_dataset(pred_dir, gt_dir);
    CHECK(r.n_images == 4);
    CHECK(r.f_skipped == 1);
    CHECK(r.f_measure == doctest::Approx(1.0));
  }
}

TEST_CASE("file order does not matter") {
  testing::TempDir one("eval1"), two("eval2");
  std::mt19937_64 rng(9);
  std::vector<std::pair<cv::Mat1b, cv::Mat1b>> pairs;
  for (int i = 0; i < 4; ++i) {
    cv::Mat1b g(10, 10, uchar(0)), p(10, 10);
    g(cv::Rect(int(rng() % 4), int(rng() % 4), 4, 5)) = 255;
    cv::randu(p, 0, 255);
    pairs.emplace_back(p, g);
  }
  for (auto* d : {&one, &two}) {
    std::filesystem::create_directories(*d / "gt");
    std::filesystem::create_directories(*d / "pred");
  }
  const char* names_one[] = {"a", "b", "c", "d"};
  const char* names_two[] = {"d", "c", "b", "a"};
  for (int i = 0; i < 4; ++i) {
    cv::imwrite(((one / "gt") / (std::string(names_one[i]) + ".png")).string(), pairs[i].second);
    cv::imwrite(((one / "pred") / (std::string(names_one[i]) + ".png")).string(), pairs[i].first);
    cv::imwrite(((two / "gt") / (std::string(names_two[i]) + ".png")).string(), pairs[i].second);
    cv::imwrite(((two / "pred") / (std::string(names_two[i]) + ".png")).string(), pairs[i].first);
  }
  const auto a = m::evaluate_dataset(one / "pred", one / "gt");
  const auto b = m::evaluate_dataset(two / "pred", two / "gt");
  CHECK(a.mae == doctest::Approx(b.mae).epsilon(1e-14));
  CHECK(a.f_measure == doctest::Approx(b.f_measure).epsilon(1e-14));
  CHECK(a.s_measure == doctest::Approx(b.s_measure).epsilon(1e-14));
  CHECK(a.e_measure == doctest::Approx(b.e_measure).epsilon(1e-14));
}

TEST_CASE("csv row") {
  m::EvalResult r;
  r.mae = 0.25;
  r.f_measure = 0.5;
  r.s_measure = 0.75;
  r.e_measure = 1.0;
  r.n_images = 3;
  CHECK(m::csv_header() == "dataset,mae,f_measure,s_measure,e_measure,n_images");
  CHECK(m::csv_row("toy", r) == "toy,0.250000,0.500000,0.750000,1.000000,3");
}

}  // TEST_SUITE
