#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "abf/error.hpp"
#include "abf/sway.hpp"
#include "classify_oracle.hpp"

namespace abf {
namespace {

TEST(Calibrate, MeanOfZeros) {
  std::vector<RawSample> s(10);
  for (std::size_t i = 0; i < s.size(); ++i) s[i].t = 0.02 * static_cast<double>(i);
  const Baseline b = calibrate(s);
  EXPECT_EQ(b.x0, 0.0);
  EXPECT_EQ(b.y0, 0.0);
  EXPECT_EQ(b.n_samples, 10u);
}

TEST(Calibrate, ArithmeticMean) {
  const std::vector<RawSample> s{{0.0, 1, 2}, {0.02, 3, 4}};
  const Baseline b = calibrate(s);
  EXPECT_DOUBLE_EQ(b.x0, 2.0);
  EXPECT_DOUBLE_EQ(b.y0, 3.0);
  EXPECT_EQ(b.n_samples, 2u);
}

TEST(Calibrate, SeededGaussianStream) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> pitch(1.5, 0.2);
  std::vector<RawSample> s;
  double sum = 0.0;
  for (int i = 0; i < 250; ++i) {
    s.push_back({0.02 * i, pitch(rng), 0.0});
    sum += s.back().pitch;
  }
  const Baseline b = calibrate(s, 5.0);
  EXPECT_EQ(b.n_samples, 250u);
  EXPECT_NEAR(b.x0, sum / 250.0, 1e-12);  // independent accumulation
  EXPECT_NEAR(b.x0, 1.5, 0.05);
}

TEST(Calibrate, IgnoresSamplesPastWindow) {
  const std::vector<RawSample> s{{0.0, 1, 1}, {1.0, 3, 3}, {6.0, 100, 100}};
  const Baseline b = calibrate(s, 5.0);
  EXPECT_EQ(b.n_samples, 2u);
  EXPECT_DOUBLE_EQ(b.x0, 2.0);
}

TEST(Calibrate, EmptyThrows) {
  try {
    calibrate({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyCalibration);
  }
}

TEST(Calibrate, AllInvalidThrows) {
  const std::vector<RawSample> s{{0.0, 120.0, 0.0}};
  EXPECT_THROW(calibrate(s), Error);
}

TEST(ApplyBaseline, Examples) {
  EXPECT_EQ(apply_baseline({0.5, 2, 3}, {2, 3, 5, 1}), (SwayPoint{0.5, 0, 0}));
  EXPECT_EQ(apply_baseline({0.0, 5, -1}, {1, 1, 5, 1}), (SwayPoint{0.0, 4, -2}));
  EXPECT_EQ(apply_baseline({0.0, 0, 0}, {-1.5, 0.5, 5, 1}), (SwayPoint{0.0, 1.5, -0.5}));
}

TEST(Classify, Examples) {
  EXPECT_EQ(classify({0, 0, 0}).label, RegionLabel::A);
  EXPECT_EQ(classify({0, 0, 2.5}).label, RegionLabel::B);
  EXPECT_EQ(classify({0, 1.5, 0}).label, RegionLabel::C);
  EXPECT_EQ(classify({0, 0, -3.5}).label, RegionLabel::D);
  EXPECT_EQ(classify({0, -2.5, 0}).label, RegionLabel::E);
  EXPECT_EQ(classify({0, 3, 0}).label, RegionLabel::F);
}

TEST(Classify, ContourValuesBehindExamples) {
  // (0, 2.5): B value 0.79, (1.5, 0): B 1.049 / C 0.5903, (0, -3.5): C 1.78
  EXPECT_NEAR(contour::ellipse_b(0, 2.5), 0.790123, 1e-6);
  EXPECT_NEAR(contour::ellipse_b(1.5, 0), 1.049383, 1e-6);
  EXPECT_NEAR(contour::ellipse_c(1.5, 0), 0.590278, 1e-6);
  EXPECT_NEAR(contour::ellipse_c(0, -3.5), 1.777778, 1e-6);
}

TEST(Classify, BoundaryTies) {
  EXPECT_EQ(classify({0, 1, 0}).label, RegionLabel::A);    // on the unit circle
  EXPECT_EQ(classify({0, 0, 2.75}).label, RegionLabel::B); // on the B ellipse
  EXPECT_EQ(classify({0, 0, 3.5}).label, RegionLabel::C);  // on the C ellipse
  EXPECT_EQ(classify({0, -2, 0}).label, RegionLabel::E);   // x = -2 goes to E
  EXPECT_EQ(classify({0, 2, 0.5}).label, RegionLabel::F);  // C vertex, x = 2 goes to F
}

TEST(Classify, WarningLevels) {
  EXPECT_EQ(warning_of(RegionLabel::A), Warning::Safety);
  EXPECT_EQ(warning_of(RegionLabel::B), Warning::Low);
  EXPECT_EQ(warning_of(RegionLabel::C), Warning::Medium);
  for (auto l : {RegionLabel::D, RegionLabel::E, RegionLabel::F}) EXPECT_EQ(warning_of(l), Warning::High);
}

TEST(Classify, AgreesWithOracleOnCoarseGrid) {
  // Full 0.01 grid runs in the acceptance suite.
  for (int i = -500; i <= 500; ++i) {
    for (int j = -500; j <= 500; ++j) {
      const double x = i * 0.05;
      const double y = j * 0.05;
      const auto expected = testing::oracle_region(x, y);
      ASSERT_TRUE(expected.has_value()) << x << "," << y;
      ASSERT_EQ(classify({0, x, y}).label, *expected) << x << "," << y;
    }
  }
}

TEST(Classify, NestingOfSafeRegions) {
  for (int i = -300; i <= 300; ++i) {
    for (int j = -300; j <= 400; ++j) {
      const double x = i * 0.01, y = j * 0.01;
      const auto r = classify({0, x, y}).label;
      if (r == RegionLabel::A) {
        ASSERT_LE(contour::ellipse_b(x, y), 1.0);
        ASSERT_LE(contour::ellipse_c(x, y), 1.0);
      }
      if (r == RegionLabel::B) ASSERT_LE(contour::ellipse_c(x, y), 1.0);
    }
  }
}

TEST(Classify, SeverityMonotoneAlongRays) {
  for (int k = 0; k < 360; ++k) {
    const double theta = k * std::numbers::pi / 180.0;
    Warning prev = Warning::Safety;
    for (int step = 0; step <= 2500; ++step) {
      const double r = step * 0.01;
      const auto w = classify({0, r * std::cos(theta), r * std::sin(theta)}).warning;
      ASSERT_GE(static_cast<int>(w), static_cast<int>(prev)) << "theta=" << k << " r=" << r;
      prev = w;
    }
  }
}

TEST(Dist, Examples) {
  EXPECT_EQ(dist({0, 0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(dist({0, 3, 4}), 5.0);
  EXPECT_NEAR(dist({0, -1.2, 0.5}), 1.3, 1e-12);
}

TEST(Dist, Properties) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-30, 30);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng), y = u(rng);
    const double d = dist({0, x, y});
    ASSERT_GE(d, 0.0);
    ASSERT_GT(d, 0.0);
    ASSERT_EQ(d, dist({0, -x, -y}));
  }
  EXPECT_EQ(dist({0, 0.0, -0.0}), 0.0);
}

TEST(Classify, InvariantUnderCommonOffset) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 10000; ++i) {
    const RawSample raw{0, u(rng), u(rng)};
    const Baseline b{u(rng) * 0.2, u(rng) * 0.2, 5, 250};
    // Offsets that are exact in binary keep the subtraction exact.
    const double off_x = std::ldexp(static_cast<double>(i % 17 - 8), -2);
    const double off_y = std::ldexp(static_cast<double>(i % 13 - 6), -3);
    const RawSample shifted{0, raw.pitch + off_x, raw.roll + off_y};
    const Baseline b2{b.x0 + off_x, b.y0 + off_y, 5, 250};
    const auto p1 = apply_baseline(raw, b);
    const auto p2 = apply_baseline(shifted, b2);
    ASSERT_NEAR(p1.x, p2.x, 1e-12);
    // Away from contours the label must match exactly.
    if (std::abs(contour::ellipse_c(p1.x, p1.y) - 1) > 1e-9 && std::abs(contour::ellipse_b(p1.x, p1.y) - 1) > 1e-9 &&
        std::abs(contour::circle_a(p1.x, p1.y) - 1) > 1e-9 && std::abs(std::abs(p1.x) - 2) > 1e-9) {
      ASSERT_EQ(classify(p1), classify(p2));
    }
  }
}

TEST(Normalize, DisplayRange) {
  EXPECT_DOUBLE_EQ(normalize_display(-20), 0.0);
  EXPECT_DOUBLE_EQ(normalize_display(0), 0.5);
  EXPECT_DOUBLE_EQ(normalize_display(20), 1.0);
  EXPECT_DOUBLE_EQ(normalize_display(35), 1.0);
}

TEST(RawSample, Validity) {
  EXPECT_TRUE(is_valid({0, 10, -10}));
  EXPECT_FALSE(is_valid({-1, 0, 0}));
  EXPECT_FALSE(is_valid({0, 91, 0}));
  EXPECT_FALSE(is_valid({0, std::nan(""), 0}));
}

}  // namespace
}  // namespace abf
