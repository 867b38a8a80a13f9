#include "abf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "abf/error.hpp"

namespace abf {

TrialMetrics trial_metrics(std::span<const double> dist_series, std::span<const Region> regions) {
  if (dist_series.empty()) throw Error(Errc::EmptySeries, "dist series is empty");
  if (dist_series.size() != regions.size()) {
    throw Error(Errc::InvalidArgument, "dist and region series differ in length");
  }
  const auto [lo, hi] = std::minmax_element(dist_series.begin(), dist_series.end());
  const double n = static_cast<double>(dist_series.size());

  double mean = 0.0;
  for (double d : dist_series) mean += d;
  mean /= n;
  double ss = 0.0;
  for (double d : dist_series) ss += (d - mean) * (d - mean);

  TrialMetrics m;
  m.range = *hi - *lo;
  m.variance = ss / n;
  m.n = dist_series.size();
  std::array<std::size_t, 6> counts{};
  for (const auto& r : regions) ++counts[static_cast<std::size_t>(r.label)];
  for (std::size_t i = 0; i < counts.size(); ++i) {
    m.region_occupancy[i] = static_cast<double>(counts[i]) / n;
  }
  return m;
}

TrialMetrics trial_metrics(std::span<const SwayPoint> points) {
  std::vector<double> d;
  std::vector<Region> r;
  d.reserve(points.size());
  r.reserve(points.size());
  for (const auto& p : points) {
    d.push_back(dist(p));
    r.push_back(classify(p));
  }
  return trial_metrics(d, r);
}

PairedImprovement paired_improvement(const TrialMetrics& no_abf, const TrialMetrics& abf) {
  if (no_abf.range == 0.0 || no_abf.variance == 0.0) {
    throw Error(Errc::DegenerateBaselineTrial, "no-feedback trial has zero range or variance");
  }
  return {(no_abf.range - abf.range) / no_abf.range * 100.0,
          (no_abf.variance - abf.variance) / no_abf.variance * 100.0};
}

// ---------------------------------------------------------------------------

std::size_t condition_index(const Condition& c) noexcept {
  return (c.surface == Surface::Foam ? 2 : 0) + (c.eyes == Eyes::Closed ? 1 : 0);
}

std::string_view to_string(Eyes e) noexcept { return e == Eyes::Open ? "open" : "closed"; }
std::string_view to_string(Surface s) noexcept { return s == Surface::Floor ? "floor" : "foam"; }

std::string_view to_string(Group g) noexcept {
  switch (g) {
    case Group::Older: return "older";
    case Group::Younger: return "younger";
    case Group::Unspecified: return "unspecified";
  }
  return "?";
}

std::string to_string(const Condition& c) {
  return std::string("eyes-") + std::string(to_string(c.eyes)) + "/" + std::string(to_string(c.surface));
}

Eyes parse_eyes(std::string_view text) {
  if (text == "open") return Eyes::Open;
  if (text == "closed") return Eyes::Closed;
  throw Error(Errc::InvalidArgument, "eyes must be 'open' or 'closed', got '" + std::string(text) + "'");
}

Surface parse_surface(std::string_view text) {
  if (text == "floor") return Surface::Floor;
  if (text == "foam") return Surface::Foam;
  throw Error(Errc::InvalidArgument, "surface must be 'floor' or 'foam', got '" + std::string(text) + "'");
}

Group parse_group(std::string_view text) {
  if (text == "older") return Group::Older;
  if (text == "younger") return Group::Younger;
  if (text == "unspecified") return Group::Unspecified;
  throw Error(Errc::InvalidArgument, "unknown group '" + std::string(text) + "'");
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(Errc::EmptySeries, "median of empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

const ReportCell& GroupReport::cell(const Condition& c, Group g) const {
  const auto it = std::find(groups.begin(), groups.end(), g);
  if (it == groups.end()) throw Error(Errc::InvalidArgument, "group not part of this report");
  return rows[condition_index(c)][static_cast<std::size_t>(it - groups.begin())];
}

const ReportCell& GroupReport::overall(const Condition& c) const {
  return rows[condition_index(c)].back();
}

std::string GroupReport::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "eyes,surface";
  for (auto g : groups) out << ',' << to_string(g) << "_P_R," << to_string(g) << "_P_V";
  out << ",overall_P_R,overall_P_V\n";
  for (const auto& c : kAllConditions) {
    out << to_string(c.eyes) << ',' << to_string(c.surface);
    for (const auto& cell : rows[condition_index(c)]) out << ',' << cell.p_range << ',' << cell.p_variance;
    out << '\n';
  }
  return out.str();
}

std::string GroupReport::to_json() const {
  nlohmann::json j;
  j["columns"] = nlohmann::json::array();
  for (auto g : groups) j["columns"].push_back(to_string(g));
  j["columns"].push_back("overall");
  j["rows"] = nlohmann::json::array();
  for (const auto& c : kAllConditions) {
    nlohmann::json row{{"eyes", to_string(c.eyes)}, {"surface", to_string(c.surface)}};
    const auto& cells = rows[condition_index(c)];
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::string name = i < groups.size() ? std::string(to_string(groups[i])) : "overall";
      row["cells"][name] = {{"P_R", cells[i].p_range}, {"P_V", cells[i].p_variance}, {"n", cells[i].n}};
    }
    j["rows"].push_back(std::move(row));
  }
  return j.dump(2);
}

GroupReport group_report(const PairMap& pairs, std::span<const Group> groups) {
  GroupReport report;
  report.groups.assign(groups.begin(), groups.end());
  const std::size_t columns = groups.size() + 1;

  std::array<std::vector<std::vector<double>>, 4> pr;
  std::array<std::vector<std::vector<double>>, 4> pv;
  for (std::size_t row = 0; row < 4; ++row) {
    pr[row].resize(columns);
    pv[row].resize(columns);
  }
  for (const auto& [key, value] : pairs) {
    const std::size_t row = condition_index(key.condition);
    const auto it = std::find(groups.begin(), groups.end(), key.group);
    if (it != groups.end()) {
      const auto col = static_cast<std::size_t>(it - groups.begin());
      pr[row][col].push_back(value.p_range);
      pv[row][col].push_back(value.p_variance);
    }
    pr[row].back().push_back(value.p_range);
    pv[row].back().push_back(value.p_variance);
  }

  std::string missing;
  for (const auto& c : kAllConditions) {
    const std::size_t row = condition_index(c);
    for (std::size_t col = 0; col < columns; ++col) {
      if (pr[row][col].empty()) {
        if (!missing.empty()) missing += ", ";
        missing += to_string(c) + "@" + (col < groups.size() ? std::string(to_string(groups[col])) : "overall");
        continue;
      }
      report.rows[row].push_back({median(pr[row][col]), median(pv[row][col]), pr[row][col].size()});
    }
  }
  if (!missing.empty()) throw Error(Errc::MissingCondition, missing);
  return report;
}

// ---------------------------------------------------------------------------

namespace {

BoundaryPolyline sample_ellipse(std::string name, double cx, double cy, double semi_x, double semi_y) {
  // Chord <= arc length <= max(semi) * dtheta; vertex count is a multiple of
  // four so the axis vertices are hit exactly.
  const double max_semi = std::max(semi_x, semi_y);
  std::size_t n = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi * max_semi / kMaxBoundarySpacing));
  n = (n + 3) / 4 * 4;
  BoundaryPolyline line{std::move(name), true, {}};
  line.points.reserve(n);
  const std::size_t quarter = n / 4;
  for (std::size_t i = 0; i < n; ++i) {
    double c = 0.0;
    double s = 0.0;
    if (i % quarter == 0) {
      constexpr std::array<std::array<double, 2>, 4> axis{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
      c = axis[i / quarter][0];
      s = axis[i / quarter][1];
    } else {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
      c = std::cos(theta);
      s = std::sin(theta);
    }
    line.points.push_back({cx + semi_x * c, cy + semi_y * s});
  }
  return line;
}

BoundaryPolyline sample_side_line(std::string name, double x) {
  constexpr double kHalfSpan = 20.0;
  const auto n = static_cast<std::size_t>(std::ceil(2.0 * kHalfSpan / kMaxBoundarySpacing));
  BoundaryPolyline line{std::move(name), false, {}};
  line.points.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    line.points.push_back({x, -kHalfSpan + 2.0 * kHalfSpan * static_cast<double>(i) / static_cast<double>(n)});
  }
  return line;
}

}  // namespace

std::vector<BoundaryPolyline> region_boundaries() {
  using namespace contour;
  return {
      sample_ellipse("A", 0.0, 0.0, 1.0, 1.0),
      sample_ellipse("B", 0.0, kBCenterY, kBSemiX, kBSemiY),
      sample_ellipse("C", 0.0, kBCenterY, kCSemiX, kCSemiY),
      sample_side_line("E", -kSideThreshold),
      sample_side_line("F", kSideThreshold),
  };
}

DispersionDataset dispersion_export(std::span<const SwayPoint> points) {
  if (points.empty()) throw Error(Errc::EmptySeries, "no points to export");
  DispersionDataset data;
  data.points.reserve(points.size());
  for (const auto& p : points) data.points.push_back({p.x, p.y, classify(p).label});
  data.boundaries = region_boundaries();
  return data;
}

std::string DispersionDataset::to_json() const {
  nlohmann::json j;
  j["points"] = nlohmann::json::array();
  for (const auto& p : points) {
    j["points"].push_back({{"x", p.x}, {"y", p.y}, {"region", to_string(p.region)}});
  }
  j["boundaries"] = nlohmann::json::object();
  for (const auto& b : boundaries) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& v : b.points) pts.push_back({v[0], v[1]});
    j["boundaries"][b.name] = {{"closed", b.closed}, {"points", std::move(pts)}};
  }
  return j.dump();
}

}  // namespace abf
