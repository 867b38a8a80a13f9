#include "abf/sway.hpp"

#include <algorithm>
#include <cmath>

#include "abf/error.hpp"

namespace abf {

bool is_valid(const RawSample& s) noexcept {
  return std::isfinite(s.t) && std::isfinite(s.pitch) && std::isfinite(s.roll) && s.t >= 0.0 &&
         std::abs(s.pitch) <= kMaxTiltDeg && std::abs(s.roll) <= kMaxTiltDeg;
}

std::string_view to_string(RegionLabel label) noexcept {
  static constexpr std::array<std::string_view, 6> names{"A", "B", "C", "D", "E", "F"};
  return names[static_cast<std::size_t>(label)];
}

std::string_view to_string(Warning warning) noexcept {
  switch (warning) {
    case Warning::Safety: return "Safety";
    case Warning::Low: return "Low";
    case Warning::Medium: return "Medium";
    case Warning::High: return "High";
  }
  return "?";
}

std::optional<RegionLabel> parse_region(std::string_view text) noexcept {
  for (auto label : kAllRegions) {
    if (to_string(label) == text) return label;
  }
  return std::nullopt;
}

Baseline calibrate(std::span<const RawSample> samples, double window) {
  if (samples.empty()) throw Error(Errc::EmptyCalibration, "no samples supplied");
  // Half-open window [t0, t0 + window); 1 ns slack for accumulated timestamps.
  const double t_end = samples.front().t + window - 1e-9;
  double sum_x = 0.0;
  double sum_y = 0.0;
  std::size_t n = 0;
  for (const auto& s : samples) {
    if (s.t >= t_end) break;
    if (!is_valid(s)) continue;
    sum_x += s.pitch;
    sum_y += s.roll;
    ++n;
  }
  if (n == 0) throw Error(Errc::EmptyCalibration, "no valid samples inside the calibration window");
  const double inv = 1.0 / static_cast<double>(n);
  return {sum_x * inv, sum_y * inv, window, n};
}

double dist(const SwayPoint& p) noexcept { return std::hypot(p.x, p.y); }

double normalize_display(double degrees) noexcept {
  return std::clamp((degrees + 20.0) / 40.0, 0.0, 1.0);
}

}  // namespace abf
