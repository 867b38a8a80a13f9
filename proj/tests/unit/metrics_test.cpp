#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include <json.hpp>

#include "abf/error.hpp"
#include "abf/metrics.hpp"

namespace abf {
namespace {

std::vector<Region> regions_of(std::size_t n, RegionLabel l = RegionLabel::A) {
  return std::vector<Region>(n, make_region(l));
}

TEST(TrialMetrics, ConstantSeries) {
  const std::vector<double> d{2, 2, 2};
  const auto m = trial_metrics(d, regions_of(3));
  EXPECT_EQ(m.range, 0.0);
  EXPECT_EQ(m.variance, 0.0);
  EXPECT_EQ(m.n, 3u);
  EXPECT_EQ(m.occupancy(RegionLabel::A), 1.0);
}

TEST(TrialMetrics, PopulationVariance) {
  const std::vector<double> d{0, 1, 2, 3, 4};
  const auto m = trial_metrics(d, regions_of(5));
  EXPECT_DOUBLE_EQ(m.range, 4.0);
  EXPECT_DOUBLE_EQ(m.variance, 2.0);
}

TEST(TrialMetrics, SeededUniform) {
  std::mt19937_64 rng(3000);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<double> d(3000);
  for (auto& v : d) v = u(rng);
  // Independent reference: naive sums.
  double s = 0, ss = 0;
  for (double v : d) s += v, ss += v * v;
  const double ref_var = ss / 3000.0 - (s / 3000.0) * (s / 3000.0);
  const auto m = trial_metrics(d, regions_of(d.size()));
  EXPECT_GE(m.range, 9.9);
  EXPECT_LE(m.range, 10.0);
  EXPECT_NEAR(m.variance, 100.0 / 12.0, 0.5);
  EXPECT_NEAR(m.variance, ref_var, 1e-9);
}

TEST(TrialMetrics, OccupancySumsToOne) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick(0, 5);
  std::vector<Region> r;
  std::vector<double> d;
  for (int i = 0; i < 997; ++i) {
    r.push_back(make_region(static_cast<RegionLabel>(pick(rng))));
    d.push_back(i);
  }
  const auto m = trial_metrics(d, r);
  double sum = 0;
  for (double f : m.region_occupancy) sum += f;
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(TrialMetrics, Errors) {
  EXPECT_THROW(trial_metrics(std::vector<double>{}, std::vector<Region>{}), Error);
  EXPECT_THROW(trial_metrics(std::vector<double>{1, 2}, regions_of(1)), Error);
}

TEST(TrialMetrics, OrderInvariantAndScaling) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> d(200);
    for (auto& v : d) v = u(rng);
    const auto m = trial_metrics(d, regions_of(d.size()));
    auto shuffled = d;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto ms = trial_metrics(shuffled, regions_of(d.size()));
    EXPECT_DOUBLE_EQ(m.range, ms.range);
    EXPECT_NEAR(m.variance, ms.variance, 1e-12);

    const double k = 0.5 + trial * 0.1;
    auto scaled = d;
    for (auto& v : scaled) v *= k;
    const auto mk = trial_metrics(scaled, regions_of(d.size()));
    EXPECT_NEAR(mk.range, k * m.range, 1e-12 * k);
    EXPECT_NEAR(mk.variance, k * k * m.variance, 1e-10 * k * k);

    std::vector<double> d2(200);
    for (auto& v : d2) v = u(rng);
    auto scaled2 = d2;
    for (auto& v : scaled2) v *= k;
    const auto p = paired_improvement(m, trial_metrics(d2, regions_of(200)));
    const auto pk = paired_improvement(mk, trial_metrics(scaled2, regions_of(200)));
    EXPECT_NEAR(p.p_range, pk.p_range, 1e-9);
    EXPECT_NEAR(p.p_variance, pk.p_variance, 1e-9);
  }
}

TEST(PairedImprovement, Examples) {
  TrialMetrics no{10, 4, 3000, {}};
  TrialMetrics with{8, 4, 3000, {}};
  const auto p = paired_improvement(no, with);
  EXPECT_NEAR(p.p_range, 20.0, 1e-12);
  EXPECT_EQ(p.p_variance, 0.0);

  EXPECT_EQ(paired_improvement(no, no), (PairedImprovement{0, 0}));
  const auto full = paired_improvement(no, TrialMetrics{0, 0, 3000, {}});
  EXPECT_EQ(full.p_range, 100.0);
  EXPECT_EQ(full.p_variance, 100.0);
}

TEST(PairedImprovement, WorseningIsNegativeAndBounded) {
  const auto p = paired_improvement({5, 2, 1, {}}, {10, 8, 1, {}});
  EXPECT_DOUBLE_EQ(p.p_range, -100.0);
  EXPECT_DOUBLE_EQ(p.p_variance, -300.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const TrialMetrics a{u(rng) + 0.01, u(rng) + 0.01, 1, {}};
    const TrialMetrics b{u(rng), u(rng), 1, {}};
    const auto q = paired_improvement(a, b);
    ASSERT_LE(q.p_range, 100.0);
    ASSERT_LE(q.p_variance, 100.0);
  }
}

TEST(PairedImprovement, DegenerateBaseline) {
  try {
    paired_improvement({0, 1, 1, {}}, {1, 1, 1, {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegenerateBaselineTrial);
  }
  EXPECT_THROW(paired_improvement({1, 0, 1, {}}, {1, 1, 1, {}}), Error);
}

TEST(Median, SingletonAndMidpoint) {
  EXPECT_EQ(median({20}), 20);
  EXPECT_EQ(median({10, 30}), 20);
  EXPECT_EQ(median({3, 1, 2}), 2);
}

TEST(Median, MatchesSortOracle) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-50, 100);
  for (int n = 1; n < 40; ++n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = u(rng);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const double oracle = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    ASSERT_EQ(median(v), oracle);
  }
}

PairMap full_pairs() {
  PairMap pairs;
  double v = 1.0;
  for (const char* s : {"o1", "o2", "o3"}) {
    for (const auto& c : kAllConditions) pairs[{s, Group::Older, c}] = {v, v + 1}, v += 1.0;
  }
  for (const char* s : {"y1", "y2"}) {
    for (const auto& c : kAllConditions) pairs[{s, Group::Younger, c}] = {v, v + 1}, v += 1.0;
  }
  return pairs;
}

TEST(GroupReport, MediansAgreeWithSortOracle) {
  const auto pairs = full_pairs();
  const auto report = group_report(pairs);
  for (const auto& c : kAllConditions) {
    for (auto g : {Group::Older, Group::Younger}) {
      std::vector<double> pr;
      for (const auto& [k, p] : pairs) {
        if (k.group == g && k.condition == c) pr.push_back(p.p_range);
      }
      std::sort(pr.begin(), pr.end());
      const double oracle = pr.size() % 2 ? pr[pr.size() / 2] : 0.5 * (pr[pr.size() / 2 - 1] + pr[pr.size() / 2]);
      EXPECT_EQ(report.cell(c, g).p_range, oracle);
    }
    std::vector<double> all;
    for (const auto& [k, p] : pairs) {
      if (k.condition == c) all.push_back(p.p_variance);
    }
    std::sort(all.begin(), all.end());
    EXPECT_EQ(report.overall(c).p_variance, all[all.size() / 2]);  // five subjects
    EXPECT_EQ(report.overall(c).n, 5u);
  }
}

TEST(GroupReport, SinglePair) {
  PairMap pairs;
  for (const auto& c : kAllConditions) pairs[{"s", Group::Older, c}] = {20, 30};
  const std::array groups{Group::Older};
  const auto r = group_report(pairs, groups);
  EXPECT_EQ(r.cell(kAllConditions[2], Group::Older).p_range, 20);
  EXPECT_EQ(r.overall(kAllConditions[2]).p_variance, 30);
}

TEST(GroupReport, MissingCellsAreListed) {
  PairMap pairs;
  pairs[{"s", Group::Older, kAllConditions[0]}] = {1, 1};
  try {
    group_report(pairs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingCondition);
    const std::string what = e.what();
    EXPECT_NE(what.find("eyes-open/floor@younger"), std::string::npos);
    EXPECT_NE(what.find("eyes-closed/foam@older"), std::string::npos);
  }
}

TEST(GroupReport, TableLayout) {
  const auto report = group_report(full_pairs());
  const std::string csv = report.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "eyes,surface,older_P_R,older_P_V,younger_P_R,younger_P_V,overall_P_R,overall_P_V");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_NE(csv.find("\nopen,floor,"), std::string::npos);
  EXPECT_NE(csv.find("\nclosed,floor,"), std::string::npos);
  EXPECT_NE(csv.find("\nopen,foam,"), std::string::npos);
  EXPECT_NE(csv.find("\nclosed,foam,"), std::string::npos);

  const auto j = nlohmann::json::parse(report.to_json());
  ASSERT_EQ(j["rows"].size(), 4u);
  for (const auto& row : j["rows"]) {
    for (const char* col : {"older", "younger", "overall"}) {
      EXPECT_TRUE(row["cells"][col].contains("P_R"));
      EXPECT_TRUE(row["cells"][col].contains("P_V"));
    }
  }
}

TEST(Dispersion, SinglePoint) {
  const std::vector<SwayPoint> pts{{0, 0, 0}};
  const auto d = dispersion_export(pts);
  ASSERT_EQ(d.points.size(), 1u);
  EXPECT_EQ(d.points[0].region, RegionLabel::A);
}

bool passes_through(const BoundaryPolyline& line, double x, double y) {
  return std::any_of(line.points.begin(), line.points.end(), [&](const auto& p) {
    return std::abs(p[0] - x) < 1e-12 && std::abs(p[1] - y) < 1e-12;
  });
}

TEST(Dispersion, BoundaryPolylines) {
  const auto lines = region_boundaries();
  const auto find = [&](const std::string& name) {
    return *std::find_if(lines.begin(), lines.end(), [&](const auto& l) { return l.name == name; });
  };
  EXPECT_TRUE(passes_through(find("A"), 1, 0));
  EXPECT_TRUE(passes_through(find("A"), 0, 1));
  EXPECT_TRUE(passes_through(find("C"), 0, 3.5));
  EXPECT_TRUE(passes_through(find("C"), 0, -2.5));
  EXPECT_TRUE(passes_through(find("B"), 0, 2.75));

  for (const auto& line : lines) {
    const std::size_t n = line.points.size();
    for (std::size_t i = 0; i + (line.closed ? 0 : 1) < n; ++i) {
      const auto& a = line.points[i];
      const auto& b = line.points[(i + 1) % n];
      ASSERT_LE(std::hypot(a[0] - b[0], a[1] - b[1]), kMaxBoundarySpacing + 1e-12) << line.name;
    }
  }
  // Ellipse vertices lie on their contour.
  for (const auto& p : find("C").points) ASSERT_NEAR(contour::ellipse_c(p[0], p[1]), 1.0, 1e-12);
}

TEST(Dispersion, JsonShape) {
  const std::vector<SwayPoint> pts{{0, 0, 0}, {0.02, 3, 0}};
  const auto j = nlohmann::json::parse(dispersion_export(pts).to_json());
  ASSERT_EQ(j["points"].size(), 2u);
  EXPECT_EQ(j["points"][1]["region"], "F");
  EXPECT_TRUE(j["boundaries"].contains("A"));
  EXPECT_TRUE(j["boundaries"]["E"]["points"].size() > 2);
  EXPECT_THROW(dispersion_export({}), Error);
}

}  // namespace
}  // namespace abf
