#include "abf/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "abf/error.hpp"

namespace abf::dsp {

namespace {

using cplx = std::complex<double>;

cplx bilinear(cplx s, double fs2) { return (fs2 + s) / (fs2 - s); }

// Section with zeros at z = +1 and z = -1 and a conjugate pole pair.
BiquadCoeffs section_from_pole(cplx pole_z) {
  BiquadCoeffs c;
  c.b0 = 1.0;
  c.b1 = 0.0;
  c.b2 = -1.0;
  c.a1 = -2.0 * pole_z.real();
  c.a2 = std::norm(pole_z);
  return c;
}

cplx response(const BiquadCoeffs& c, double omega) {
  const cplx z1 = std::polar(1.0, -omega);
  const cplx z2 = z1 * z1;
  return (c.b0 + c.b1 * z1 + c.b2 * z2) / (1.0 + c.a1 * z1 + c.a2 * z2);
}

}  // namespace

BandPassCoeffs design_butterworth_bandpass(double low_hz, double high_hz, double sample_rate) {
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < 0.5 * sample_rate)) {
    throw Error(Errc::InvalidBand, "band-pass corners must satisfy 0 < low < high < Nyquist");
  }
  const double fs2 = 2.0 * sample_rate;
  const double w_lo = fs2 * std::tan(std::numbers::pi * low_hz / sample_rate);
  const double w_hi = fs2 * std::tan(std::numbers::pi * high_hz / sample_rate);
  const double bw = w_hi - w_lo;
  const double w0_sq = w_lo * w_hi;

  constexpr int n = kBandPassPrototypeOrder;
  BandPassCoeffs out;
  std::size_t k = 0;
  // Prototype poles in the upper half plane; each maps to two band-pass
  // poles whose conjugates come from the mirrored prototype pole.
  for (int i = 0; i < n / 2; ++i) {
    const double angle = std::numbers::pi * (2.0 * i + n + 1) / (2.0 * n);
    const cplx proto = std::polar(1.0, angle);
    const cplx half = proto * bw * 0.5;
    const cplx root = std::sqrt(half * half - w0_sq);
    for (const cplx s : {half + root, half - root}) {
      // Keep the representative with positive imaginary part.
      const cplx s_up = s.imag() >= 0.0 ? s : std::conj(s);
      out[k++] = section_from_pole(bilinear(s_up, fs2));
    }
  }

  const double omega0 = 2.0 * std::atan(std::sqrt(w0_sq) / fs2);
  for (auto& c : out) {
    const double g = 1.0 / std::abs(response(c, omega0));
    c.b0 *= g;
    c.b1 *= g;
    c.b2 *= g;
  }
  return out;
}

double magnitude(const BandPassCoeffs& sections, double freq_hz, double sample_rate) {
  const double omega = 2.0 * std::numbers::pi * freq_hz / sample_rate;
  cplx h = 1.0;
  for (const auto& c : sections) h *= response(c, omega);
  return std::abs(h);
}

PanGains equal_power_pan(double pan) noexcept {
  const double theta = (std::clamp(pan, -1.0, 1.0) + 1.0) * 0.25 * std::numbers::pi;
  return {std::cos(theta), std::sin(theta)};
}

double soft_clip(double x) noexcept {
  constexpr double knee = 0.8;
  constexpr double headroom = 1.0 - knee;
  const double a = std::abs(x);
  if (a <= knee) return x;
  return std::copysign(knee + headroom * std::tanh((a - knee) / headroom), x);
}

}  // namespace abf::dsp
