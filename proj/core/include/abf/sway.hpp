#pragma once

// Sway-plane geometry: calibration baseline, baseline subtraction, distance
// and the six-region severity map (A..F).
//
// All angles are in degrees. x is pitch (anterior/posterior), y is roll
// (medial/lateral).

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace abf {

struct RawSample {
  double t = 0.0;      // seconds since trial start
  double pitch = 0.0;  // degrees, AP
  double roll = 0.0;   // degrees, ML

  friend bool operator==(const RawSample&, const RawSample&) = default;
};

/// Hard sanity bound on incoming tilt angles.
inline constexpr double kMaxTiltDeg = 90.0;

/// True when the sample is finite, within +-90 deg and has t >= 0.
bool is_valid(const RawSample& s) noexcept;

struct Baseline {
  double x0 = 0.0;
  double y0 = 0.0;
  double window = 0.0;  // seconds
  std::size_t n_samples = 0;

  friend bool operator==(const Baseline&, const Baseline&) = default;
};

inline constexpr double kDefaultCalibrationWindow = 5.0;

struct SwayPoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const SwayPoint&, const SwayPoint&) = default;
};

enum class RegionLabel : std::uint8_t { A, B, C, D, E, F };
enum class Warning : std::uint8_t { Safety, Low, Medium, High };

inline constexpr std::array<RegionLabel, 6> kAllRegions{
    RegionLabel::A, RegionLabel::B, RegionLabel::C,
    RegionLabel::D, RegionLabel::E, RegionLabel::F};

struct Region {
  RegionLabel label = RegionLabel::A;
  Warning warning = Warning::Safety;

  friend bool operator==(const Region&, const Region&) = default;
};

constexpr Warning warning_of(RegionLabel label) noexcept {
  switch (label) {
    case RegionLabel::A: return Warning::Safety;
    case RegionLabel::B: return Warning::Low;
    case RegionLabel::C: return Warning::Medium;
    default: return Warning::High;
  }
}

constexpr Region make_region(RegionLabel label) noexcept { return {label, warning_of(label)}; }

std::string_view to_string(RegionLabel label) noexcept;
std::string_view to_string(Warning warning) noexcept;
std::optional<RegionLabel> parse_region(std::string_view text) noexcept;

/// Mean of the samples whose t lies in [t_first, t_first + window).
/// Throws Error(EmptyCalibration) when nothing falls inside the window.
Baseline calibrate(std::span<const RawSample> samples, double window = kDefaultCalibrationWindow);

constexpr SwayPoint apply_baseline(const RawSample& raw, const Baseline& b) noexcept {
  return {raw.t, raw.pitch - b.x0, raw.roll - b.y0};
}

// Region contours. Each "value" is <= 1 inside (closed interior).
namespace contour {
inline constexpr double kSideThreshold = 2.0;  // |x| >= 2 -> E / F

inline constexpr double kBCenterY = 0.5;
inline constexpr double kBSemiX = 1.5;
inline constexpr double kBSemiY = 2.25;
inline constexpr double kCSemiX = 2.0;
inline constexpr double kCSemiY = 3.0;

constexpr double circle_a(double x, double y) noexcept { return x * x + y * y; }

constexpr double ellipse_b(double x, double y) noexcept {
  const double u = (y - kBCenterY) / kBSemiY;
  const double v = x / kBSemiX;
  return u * u + v * v;
}

constexpr double ellipse_c(double x, double y) noexcept {
  const double u = (y - kBCenterY) / kCSemiY;
  const double v = x / kCSemiX;
  return u * u + v * v;
}
}  // namespace contour

/// Closed interiors with precedence E/F, A, B, C, D.
constexpr Region classify(const SwayPoint& p) noexcept {
  RegionLabel label;
  if (p.x <= -contour::kSideThreshold) {
    label = RegionLabel::E;
  } else if (p.x >= contour::kSideThreshold) {
    label = RegionLabel::F;
  } else if (contour::circle_a(p.x, p.y) <= 1.0) {
    label = RegionLabel::A;
  } else if (contour::ellipse_b(p.x, p.y) <= 1.0) {
    label = RegionLabel::B;
  } else if (contour::ellipse_c(p.x, p.y) <= 1.0) {
    label = RegionLabel::C;
  } else {
    label = RegionLabel::D;
  }
  return make_region(label);
}

/// Euclidean norm of the baseline-subtracted point.
double dist(const SwayPoint& p) noexcept;

/// Display normalization to [0, 1] over a +-20 deg full scale.
double normalize_display(double degrees) noexcept;

}  // namespace abf
