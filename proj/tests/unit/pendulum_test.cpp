#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include "abf/error.hpp"
#include "abf/metrics.hpp"
#include "abf/pendulum.hpp"

namespace abf {
namespace {

constexpr Condition kOpenFloor{Eyes::Open, Surface::Floor};
constexpr Condition kClosedFloor{Eyes::Closed, Surface::Floor};

double range_of(const std::vector<RawSample>& s) {
  std::vector<SwayPoint> pts;
  for (const auto& r : s) pts.push_back(apply_baseline(r, {}));
  return trial_metrics(pts).range;
}

double stddev_pitch(const std::vector<RawSample>& s) {
  double m = 0;
  for (const auto& r : s) m += r.pitch;
  m /= static_cast<double>(s.size());
  double v = 0;
  for (const auto& r : s) v += (r.pitch - m) * (r.pitch - m);
  return std::sqrt(v / static_cast<double>(s.size()));
}

// Independent restatement of the closed-loop recurrence: stationary start,
// Euler-Maruyama per axis, warnings acted on after round(delay * rate) steps.
std::vector<RawSample> reference_subject(const SimConfig& c, double m, bool abf_on, std::size_t n) {
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const double s0 = c.sigma * std::sqrt(c.tau / 2.0) * m;
  double p = z(rng) * s0;
  double r = z(rng) * s0;
  const double dt = 1.0 / c.rate;
  const auto delay = static_cast<std::size_t>(std::lround(c.reaction_delay * c.rate));
  std::vector<Warning> heard;
  std::vector<RawSample> out;
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back({static_cast<double>(k) * dt, p, r});
    heard.push_back(classify(SwayPoint{0, p, r}).warning);
    double g = 0.0;
    // The step leaving sample k uses the warning heard for sample k - delay.
    if (abf_on && k >= delay) {
      const Warning w = heard[k - delay];
      if (w != Warning::Safety) g = c.feedback_gain[static_cast<std::size_t>(w) - 1];
    }
    const double zp = z(rng);
    const double zr = z(rng);
    const double amp = c.sigma * std::sqrt(dt) * m * (1.0 - g);
    p = std::clamp(p - p / c.tau * dt + c.drift * dt + amp * zp, -90.0, 90.0);
    r = std::clamp(r - r / c.tau * dt + c.drift * dt + amp * zr, -90.0, 90.0);
  }
  return out;
}

TEST(Pendulum, DecaysWithoutNoise) {
  SimConfig cfg;
  cfg.sigma = 1e-12;
  std::mt19937_64 rng(1);
  PendulumState s{5.0, -3.0};
  for (int i = 0; i < 500; ++i) {
    const auto n = step(s, 0.02, std::nullopt, cfg, 1.0, rng);
    ASSERT_LT(std::abs(n.pitch), std::abs(s.pitch));
    ASSERT_LT(std::abs(n.roll), std::abs(s.roll));
    s = n;
  }
  EXPECT_NEAR(s.pitch, 5.0 * std::pow(1.0 - 0.01, 500), 1e-9);
}

TEST(Pendulum, StepDrawsTwoNormals) {
  SimConfig cfg;
  std::mt19937_64 a(9), b(9);
  step({}, 0.02, std::nullopt, cfg, 1.0, a);
  std::normal_distribution<double> z(0.0, 1.0);
  z(b);
  z(b);
  EXPECT_EQ(a(), b());
}

TEST(Pendulum, WarningScalesNoise) {
  SimConfig cfg;
  cfg.tau = 1e9;
  std::mt19937_64 a(3), b(3);
  const auto free = step({}, 0.02, Warning::Safety, cfg, 1.0, a);
  const auto high = step({}, 0.02, Warning::High, cfg, 1.0, b);
  EXPECT_NEAR(high.pitch, free.pitch * 0.3, 1e-12);
}

TEST(Pendulum, MatchesReferenceRecurrence) {
  SimConfig cfg;
  for (const bool abf_on : {false, true}) {
    for (const auto& cond : kAllConditions) {
      const auto got = run_virtual_subject(cfg, cond, abf_on);
      const auto ref = reference_subject(cfg, condition_multiplier(cfg, cond), abf_on, 3000);
      ASSERT_EQ(got.size(), ref.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        ASSERT_NEAR(got[i].pitch, ref[i].pitch, 1e-12) << i;
        ASSERT_NEAR(got[i].roll, ref[i].roll, 1e-12) << i;
        ASSERT_EQ(got[i].t, ref[i].t);
      }
    }
  }
}

TEST(Pendulum, ReferenceSeedImprovesRange) {
  SimConfig cfg;  // seed 42, sigma 1, tau 2, gains {0.3, 0.5, 0.7}
  const auto off = reference_subject(cfg, 1.0, false, 3000);
  const auto on = reference_subject(cfg, 1.0, true, 3000);
  EXPECT_LT(range_of(on), range_of(off));
  EXPECT_LT(range_of(run_virtual_subject(cfg, kOpenFloor, true)), range_of(run_virtual_subject(cfg, kOpenFloor, false)));
}

TEST(Pendulum, AlwaysThreeThousandSamples) {
  for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.sigma = 0.1 * static_cast<double>(seed);
    EXPECT_EQ(run_virtual_subject(cfg, kAllConditions[3], seed % 2 == 0).size(), 3000u);
  }
}

TEST(Pendulum, DeterministicForConfig) {
  SimConfig cfg;
  cfg.seed = 1234;
  EXPECT_EQ(run_virtual_subject(cfg, kOpenFloor, true), run_virtual_subject(cfg, kOpenFloor, true));
  auto other = cfg;
  other.seed = 1235;
  EXPECT_NE(run_virtual_subject(cfg, kOpenFloor, true), run_virtual_subject(other, kOpenFloor, true));
}

TEST(Pendulum, ZeroGainIdentity) {
  SimConfig cfg;
  cfg.feedback_gain = {0, 0, 0};
  EXPECT_EQ(run_virtual_subject(cfg, kOpenFloor, true), run_virtual_subject(cfg, kOpenFloor, false));
}

TEST(Pendulum, StationaryStd) {
  SimConfig cfg;
  const double expected = cfg.sigma * std::sqrt(cfg.tau / 2.0);
  const auto run = run_virtual_subject(cfg, kOpenFloor, false, 600.0);
  EXPECT_NEAR(stddev_pitch(run) / expected, 1.0, 0.10);
}

TEST(Pendulum, EyesClosedScalesSpread) {
  SimConfig cfg;
  const double open = stddev_pitch(run_virtual_subject(cfg, kOpenFloor, false));
  const double closed = stddev_pitch(run_virtual_subject(cfg, kClosedFloor, false));
  EXPECT_NEAR(closed / open, 1.5, 0.15);
}

TEST(Pendulum, GainMonotoneInMedian) {
  std::vector<double> medians;
  for (double k : {0.0, 0.5, 1.0, 1.3}) {
    std::vector<double> ranges;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      SimConfig cfg;
      cfg.seed = seed;
      cfg.feedback_gain = {0.3 * k, 0.5 * k, 0.7 * k};
      ranges.push_back(range_of(run_virtual_subject(cfg, kOpenFloor, true)));
    }
    medians.push_back(median(ranges));
  }
  for (std::size_t i = 1; i < medians.size(); ++i) EXPECT_LE(medians[i], medians[i - 1]) << i;
}

TEST(Pendulum, DelaySteps) {
  SimConfig cfg;
  EXPECT_EQ(VirtualSubject(cfg, kOpenFloor, true).delay_steps(), 13u);
  cfg.reaction_delay = 0.0;
  EXPECT_EQ(VirtualSubject(cfg, kOpenFloor, true).delay_steps(), 1u);
}

TEST(SimConfig, Validation) {
  EXPECT_NO_THROW(validate(SimConfig{}));
  SimConfig c;
  c.sigma = 0;
  EXPECT_THROW(validate(c), Error);
  c = {};
  c.feedback_gain = {0.5, 0.3, 0.7};
  EXPECT_THROW(validate(c), Error);
  c = {};
  c.feedback_gain = {0.3, 0.5, 1.0};
  EXPECT_THROW(validate(c), Error);
  c = {};
  c.rate = 2;
  EXPECT_THROW(validate(c), Error);
  EXPECT_EQ(condition_multiplier(SimConfig{}, kAllConditions[3]), 1.5 * 1.3);
}

TEST(SimConfig, ParseGains) {
  EXPECT_EQ(parse_gains("0.1,0.2,0.3"), (std::array<double, 3>{0.1, 0.2, 0.3}));
  EXPECT_THROW(parse_gains("0.1,0.2"), Error);
  EXPECT_THROW(parse_gains("0.1,0.2,0.3,0.4"), Error);
  EXPECT_THROW(parse_gains("a,b,c"), Error);
}

}  // namespace
}  // namespace abf
