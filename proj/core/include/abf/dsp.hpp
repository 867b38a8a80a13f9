#pragma once

// DSP building blocks for the warning-sound synthesizer.

#include <array>
#include <cstdint>
#include <random>

namespace abf::dsp {

struct BiquadCoeffs {
  // H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

/// Transposed direct form II section.
class Biquad {
 public:
  void set(const BiquadCoeffs& c) noexcept { c_ = c; }
  const BiquadCoeffs& coeffs() const noexcept { return c_; }
  void reset() noexcept { s1_ = s2_ = 0.0; }

  double process(double x) noexcept {
    const double y = c_.b0 * x + s1_;
    s1_ = c_.b1 * x - c_.a1 * y + s2_;
    s2_ = c_.b2 * x - c_.a2 * y;
    return y;
  }

 private:
  BiquadCoeffs c_;
  double s1_ = 0.0, s2_ = 0.0;
};

/// Order of the Butterworth low-pass prototype used for band-pass designs.
/// The band-pass itself has twice this order (four second-order sections).
inline constexpr int kBandPassPrototypeOrder = 4;
inline constexpr int kBandPassSections = kBandPassPrototypeOrder;

using BandPassCoeffs = std::array<BiquadCoeffs, kBandPassSections>;

/// Butterworth band-pass via analog low-pass -> band-pass transform and the
/// bilinear transform with pre-warped corners. Unity gain at the warped
/// geometric centre; -3.01 dB at both corners.
/// Requires 0 < low_hz < high_hz < sample_rate / 2.
BandPassCoeffs design_butterworth_bandpass(double low_hz, double high_hz, double sample_rate);

/// Magnitude response of a section cascade at `freq_hz`.
double magnitude(const BandPassCoeffs& sections, double freq_hz, double sample_rate);

class BandPass {
 public:
  void design(double low_hz, double high_hz, double sample_rate) {
    const auto c = design_butterworth_bandpass(low_hz, high_hz, sample_rate);
    for (std::size_t i = 0; i < sections_.size(); ++i) sections_[i].set(c[i]);
  }
  void reset() noexcept {
    for (auto& s : sections_) s.reset();
  }
  double process(double x) noexcept {
    for (auto& s : sections_) x = s.process(x);
    return x;
  }

 private:
  std::array<Biquad, kBandPassSections> sections_;
};

/// Uniform white noise in [-1, 1) from a seeded Mersenne twister. The
/// mapping from engine output to sample is fixed here so streams are
/// reproducible across standard libraries.
class WhiteNoise {
 public:
  explicit WhiteNoise(std::uint64_t seed) : engine_(static_cast<std::mt19937::result_type>(seed ^ (seed >> 32))) {}

  double next() noexcept {
    const auto bits = static_cast<std::int32_t>(engine_() - 0x80000000u);
    return static_cast<double>(bits) * (1.0 / 2147483648.0);
  }

 private:
  std::mt19937 engine_;
};

/// -3 dB/octave shaping filter (three poles, three zeros) applied to white
/// noise. Scaled so the output RMS is about 0.1 for full-scale uniform input.
class PinkNoise {
 public:
  explicit PinkNoise(std::uint64_t seed) : white_(seed) {}

  double next() noexcept {
    const double x = white_.next();
    const double y = kB[0] * x + kB[1] * x1_ + kB[2] * x2_ + kB[3] * x3_
                     - kA[1] * y1_ - kA[2] * y2_ - kA[3] * y3_;
    x3_ = x2_; x2_ = x1_; x1_ = x;
    y3_ = y2_; y2_ = y1_; y1_ = y;
    return kOutputGain * y;
  }

  static constexpr double kOutputGain = 2.0;

 private:
  static constexpr std::array<double, 4> kB{0.049922035, -0.095993537, 0.050612699, -0.004408786};
  static constexpr std::array<double, 4> kA{1.0, -2.494956002, 2.017265875, -0.522189400};

  WhiteNoise white_;
  double x1_ = 0, x2_ = 0, x3_ = 0;
  double y1_ = 0, y2_ = 0, y3_ = 0;
};

/// Equal-power pan law; pan in [-1, 1], -1 is full left.
struct PanGains {
  double left;
  double right;
};
PanGains equal_power_pan(double pan) noexcept;

/// Linear below `knee`, tanh-compressed above so |y| < 1.
double soft_clip(double x) noexcept;

}  // namespace abf::dsp
