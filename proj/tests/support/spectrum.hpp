#pragma once

// Test-only spectral oracles (FFTW based) used to check rendered audio
// independently of the synthesizer.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

namespace abf::testing {

/// |X(f)|^2 for a real signal, one-sided, bins k * fs / n.
inline std::vector<double> power_spectrum(std::span<const float> x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> in(x.begin(), x.end());
  std::vector<fftw_complex> out(static_cast<std::size_t>(n / 2 + 1));
  fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.data(), out.data(), FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  std::vector<double> p(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) p[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
  return p;
}

/// Fraction of spectral energy with lo <= f <= hi.
inline double band_energy_fraction(std::span<const float> x, double fs, double lo, double hi) {
  const auto p = power_spectrum(x);
  const double df = fs / static_cast<double>(x.size());
  double in = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double f = static_cast<double>(k) * df;
    total += p[k];
    if (f >= lo && f <= hi) in += p[k];
  }
  return in / total;
}

/// Welch PSD (Hann window, 50 % overlap); returns {freqs, psd}.
inline std::pair<std::vector<double>, std::vector<double>> welch(std::span<const float> x, double fs,
                                                                 std::size_t segment) {
  std::vector<double> window(segment);
  for (std::size_t i = 0; i < segment; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(segment));
  }
  std::vector<double> psd(segment / 2 + 1, 0.0);
  std::size_t count = 0;
  std::vector<float> seg(segment);
  for (std::size_t start = 0; start + segment <= x.size(); start += segment / 2) {
    double mean = 0.0;
    for (std::size_t i = 0; i < segment; ++i) mean += x[start + i];
    mean /= static_cast<double>(segment);
    for (std::size_t i = 0; i < segment; ++i) seg[i] = static_cast<float>((x[start + i] - mean) * window[i]);
    const auto p = power_spectrum(seg);
    for (std::size_t k = 0; k < psd.size(); ++k) psd[k] += p[k];
    ++count;
  }
  std::vector<double> freqs(psd.size());
  for (std::size_t k = 0; k < psd.size(); ++k) {
    freqs[k] = static_cast<double>(k) * fs / static_cast<double>(segment);
    psd[k] /= static_cast<double>(count);
  }
  return {freqs, psd};
}

/// Least-squares slope of 10 log10(PSD) against log2(f) over [lo, hi]: dB per octave.
inline double psd_slope_db_per_octave(std::span<const float> x, double fs, double lo, double hi,
                                      std::size_t segment = 8192) {
  const auto [f, p] = welch(x, fs, segment);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double n = 0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (f[k] < lo || f[k] > hi || p[k] <= 0.0) continue;
    const double u = std::log2(f[k]);
    const double v = 10.0 * std::log10(p[k]);
    sx += u;
    sy += v;
    sxx += u * u;
    sxy += u * v;
    n += 1.0;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double rms(std::span<const float> x) {
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

/// Period (seconds) of the strongest amplitude modulation with period in
/// [min_period, max_period]: |x| smoothed over 1 ms, autocorrelated.
inline double envelope_period(std::span<const float> x, double fs, double min_period, double max_period) {
  const std::size_t smooth = static_cast<std::size_t>(fs * 0.001);
  std::vector<double> env(x.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += std::abs(x[i]);
    if (i >= smooth) acc -= std::abs(x[i - smooth]);
    env[i] = acc / static_cast<double>(smooth);
  }
  const double mean = std::accumulate(env.begin(), env.end(), 0.0) / static_cast<double>(env.size());
  for (double& v : env) v -= mean;

  const auto lag_lo = static_cast<std::size_t>(min_period * fs);
  const auto lag_hi = static_cast<std::size_t>(max_period * fs);
  std::size_t best_lag = lag_lo;
  double best = -1e300;
  for (std::size_t lag = lag_lo; lag <= lag_hi && lag < env.size(); ++lag) {
    double c = 0.0;
    for (std::size_t i = 0; i + lag < env.size(); ++i) c += env[i] * env[i + lag];
    c /= static_cast<double>(env.size() - lag);
    if (c > best) {
      best = c;
      best_lag = lag;
    }
  }
  return static_cast<double>(best_lag) / fs;
}

}  // namespace abf::testing
