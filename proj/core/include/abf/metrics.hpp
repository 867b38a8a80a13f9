#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "abf/sway.hpp"

namespace abf {

struct TrialMetrics {
  double range = 0.0;     // R, degrees
  double variance = 0.0;  // V, degrees^2 (population)
  std::size_t n = 0;
  std::array<double, 6> region_occupancy{};  // indexed by RegionLabel

  double occupancy(RegionLabel label) const noexcept {
    return region_occupancy[static_cast<std::size_t>(label)];
  }

  friend bool operator==(const TrialMetrics&, const TrialMetrics&) = default;
};

struct PairedImprovement {
  double p_range = 0.0;     // P_R, percent
  double p_variance = 0.0;  // P_V, percent

  friend bool operator==(const PairedImprovement&, const PairedImprovement&) = default;
};

/// R = max - min, V = population variance, occupancy from region counts.
/// Throws EmptySeries on empty input, InvalidArgument on length mismatch.
TrialMetrics trial_metrics(std::span<const double> dist_series, std::span<const Region> regions);

/// Convenience: dist + classify each point, then trial_metrics.
TrialMetrics trial_metrics(std::span<const SwayPoint> points);

/// P = (noABF - ABF) / noABF * 100 for both R and V.
/// Throws DegenerateBaselineTrial if the no-feedback R or V is zero.
PairedImprovement paired_improvement(const TrialMetrics& no_abf, const TrialMetrics& abf);

// ---------------------------------------------------------------------------
// Protocol conditions and group reporting

enum class Eyes : std::uint8_t { Open, Closed };
enum class Surface : std::uint8_t { Floor, Foam };
enum class Group : std::uint8_t { Older, Younger, Unspecified };

struct Condition {
  Eyes eyes = Eyes::Open;
  Surface surface = Surface::Floor;

  friend auto operator<=>(const Condition&, const Condition&) = default;
};

/// Reporting order: floor/open, floor/closed, foam/open, foam/closed.
inline constexpr std::array<Condition, 4> kAllConditions{
    Condition{Eyes::Open, Surface::Floor}, Condition{Eyes::Closed, Surface::Floor},
    Condition{Eyes::Open, Surface::Foam}, Condition{Eyes::Closed, Surface::Foam}};

std::size_t condition_index(const Condition& c) noexcept;
std::string to_string(const Condition& c);
std::string_view to_string(Eyes e) noexcept;
std::string_view to_string(Surface s) noexcept;
std::string_view to_string(Group g) noexcept;
Eyes parse_eyes(std::string_view text);
Surface parse_surface(std::string_view text);
Group parse_group(std::string_view text);

struct PairKey {
  std::string subject;
  Group group = Group::Unspecified;
  Condition condition;

  friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

using PairMap = std::map<PairKey, PairedImprovement>;

struct ReportCell {
  double p_range = 0.0;
  double p_variance = 0.0;
  std::size_t n = 0;
};

struct GroupReport {
  std::vector<Group> groups;  // column order, "overall" appended implicitly
  // rows follow kAllConditions; columns are groups then overall
  std::array<std::vector<ReportCell>, 4> rows;

  const ReportCell& cell(const Condition& c, Group g) const;
  const ReportCell& overall(const Condition& c) const;

  std::string to_csv() const;
  std::string to_json() const;
};

/// Midpoint median; the input is taken by value and partially reordered.
double median(std::vector<double> values);

/// Median P_R / P_V per condition for each requested group plus a pooled
/// "overall" column. Throws MissingCondition naming every empty cell.
GroupReport group_report(const PairMap& pairs,
                         std::span<const Group> groups = std::array{Group::Older, Group::Younger});

// ---------------------------------------------------------------------------
// Dispersion export

struct ScatterEntry {
  double x = 0.0;
  double y = 0.0;
  RegionLabel region = RegionLabel::A;
};

struct BoundaryPolyline {
  std::string name;
  bool closed = false;
  std::vector<std::array<double, 2>> points;
};

struct DispersionDataset {
  std::vector<ScatterEntry> points;
  std::vector<BoundaryPolyline> boundaries;

  std::string to_json() const;
};

inline constexpr double kMaxBoundarySpacing = 0.1;  // degrees between vertices

/// Region contours as polylines (A circle, B/C ellipses, E/F side lines over
/// y in [-20, 20]) with vertex spacing <= kMaxBoundarySpacing.
std::vector<BoundaryPolyline> region_boundaries();

/// Throws EmptySeries on empty input.
DispersionDataset dispersion_export(std::span<const SwayPoint> points);

}  // namespace abf
