#include "abf/synth_params.hpp"

#include <algorithm>
#include <cmath>

#include "abf/error.hpp"

namespace abf {

std::string_view to_string(NoiseSource s) noexcept {
  switch (s) {
    case NoiseSource::PinkNoise: return "PinkNoise";
    case NoiseSource::FilteredNoise: return "FilteredNoise";
    case NoiseSource::NarrowBandNoise: return "NarrowBandNoise";
  }
  return "?";
}

void validate(const RenderConfig& cfg) {
  if (!(cfg.sample_rate >= 8000.0 && cfg.sample_rate <= 384000.0)) {
    throw Error(Errc::InvalidArgument, "sample_rate must be within [8000, 384000] Hz");
  }
  if (cfg.block_size == 0) throw Error(Errc::InvalidArgument, "block_size must be positive");
  if (!(cfg.reference_volume > 0.0 && cfg.reference_volume <= 1.0)) {
    throw Error(Errc::InvalidArgument, "reference_volume must be in (0, 1]");
  }
  if (!(cfg.crossfade >= 0.0) || !(cfg.param_smoothing >= 0.0)) {
    throw Error(Errc::InvalidArgument, "crossfade and param_smoothing must be non-negative");
  }
}

double narrow_band_low(double y) noexcept {
  const double yc = std::clamp(y, -audio_map::kMaxAngle, audio_map::kMaxAngle);
  return std::exp2(8.0 + 4.0 * (yc + 20.0) / 40.0);
}

double gate_period(double x) noexcept {
  const double ax = std::min(std::abs(x), audio_map::kMaxAngle);
  const double h = 2.5 - 0.5 * ax / audio_map::kMaxAngle;
  return 0.001 * std::pow(8.0, h);
}

double pan_for(double x) noexcept { return std::clamp(x / audio_map::kMaxAngle, -1.0, 1.0); }

SynthParams map_params(const SwayPoint& p, const RenderConfig& /*cfg*/) {
  using namespace audio_map;
  const double x = std::clamp(p.x, -kMaxAngle, kMaxAngle);
  const double y = std::clamp(p.y, -kMaxAngle, kMaxAngle);

  SynthParams out;
  out.region = classify(p);
  out.pan = pan_for(x);
  switch (out.region.label) {
    case RegionLabel::A:
      out.source = NoiseSource::PinkNoise;
      out.band_low = kFullBandLow;
      out.band_high = kFullBandHigh;
      out.volume_mult = kVolumeSafety;
      break;
    case RegionLabel::B:
      out.source = NoiseSource::FilteredNoise;
      out.band_low = kLowWarnLow;
      out.band_high = kLowWarnHigh;
      out.volume_mult = kVolumeLow;
      break;
    case RegionLabel::C:
      out.source = NoiseSource::FilteredNoise;
      out.band_low = kMediumWarnLow;
      out.band_high = kMediumWarnHigh;
      out.volume_mult = kVolumeMediumHigh;
      break;
    case RegionLabel::D:
    case RegionLabel::E:
    case RegionLabel::F:
      out.source = NoiseSource::NarrowBandNoise;
      out.band_low = narrow_band_low(y);
      out.band_high = out.band_low + kNarrowBandWidth;
      out.volume_mult = kVolumeMediumHigh;
      break;
  }
  if (out.region.label == RegionLabel::E || out.region.label == RegionLabel::F) {
    out.gate_period = gate_period(x);
    out.gate_duty = kGateDuty;
    out.pan = out.region.label == RegionLabel::E ? -1.0 : 1.0;
  }
  return out;
}

}  // namespace abf
