#pragma once

// Mapping from a sway point to the parameters of the warning sound.

#include <cstdint>
#include <optional>
#include <string_view>

#include "abf/sway.hpp"

namespace abf {

enum class NoiseSource : std::uint8_t { PinkNoise, FilteredNoise, NarrowBandNoise };

std::string_view to_string(NoiseSource s) noexcept;

struct SynthParams {
  Region region;
  double band_low = 0.0;   // Hz
  double band_high = 0.0;  // Hz
  NoiseSource source = NoiseSource::PinkNoise;
  std::optional<double> gate_period;  // seconds, present only for E/F
  double gate_duty = 0.0;             // 0.5 whenever a gate is present
  double volume_mult = 1.0;           // relative to the reference volume
  double pan = 0.0;                   // [-1, 1], -1 full left

  friend bool operator==(const SynthParams&, const SynthParams&) = default;
};

struct RenderConfig {
  double sample_rate = 48000.0;
  std::size_t block_size = 256;
  double reference_volume = 0.5;  // linear gain in (0, 1]
  double crossfade = 0.03;        // seconds, region transitions
  double param_smoothing = 0.01;  // seconds, in-region parameter ramps
  std::uint64_t rng_seed = 1;

  double block_latency() const noexcept { return static_cast<double>(block_size) / sample_rate; }
};

/// Throws InvalidArgument when a field is out of range.
void validate(const RenderConfig& cfg);

namespace audio_map {
inline constexpr double kMaxAngle = 20.0;  // full-scale angle, degrees

inline constexpr double kFullBandLow = 20.0;
inline constexpr double kFullBandHigh = 20000.0;
inline constexpr double kLowWarnLow = 128.0;
inline constexpr double kLowWarnHigh = 14263.0;
inline constexpr double kMediumWarnLow = 415.0;
inline constexpr double kMediumWarnHigh = 4390.0;
inline constexpr double kNarrowBandWidth = 800.0;

inline constexpr double kVolumeSafety = 1.0;
inline constexpr double kVolumeLow = 1.5;
inline constexpr double kVolumeMediumHigh = 3.0;

inline constexpr double kGateDuty = 0.5;
}  // namespace audio_map

/// Lower corner of the narrow warning band: 2^(8 + 4 (y + 20) / 40) Hz,
/// 256 Hz at y = -20 rising to 4096 Hz at y = +20. y is clamped to +-20.
double narrow_band_low(double y) noexcept;

/// Gate period 0.001 * 8^h seconds with h falling linearly from 2.5 at
/// |x| = 0 to 2 at |x| = 20 (64 ms there). |x| is clamped to 20.
double gate_period(double x) noexcept;

/// Stereo position for regions A..D: clamp(x / 20, -1, 1).
double pan_for(double x) noexcept;

/// Pure function of the point; `cfg` is accepted for interface symmetry with
/// the renderer but does not influence the mapping.
SynthParams map_params(const SwayPoint& p, const RenderConfig& cfg = {});

}  // namespace abf
