#include "abf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "abf/error.hpp"

namespace abf {

namespace {
// Corner-frequency changes are applied by re-designing the filter at this
// frame interval.
constexpr std::size_t kRedesignInterval = 32;

double one_pole_coeff(double seconds, double rate) {
  if (seconds <= 0.0) return 1.0;
  // ~99% settled after `seconds`.
  return 1.0 - std::exp(-4.6 / (seconds * rate));
}
}  // namespace

Synth::Synth(const RenderConfig& cfg) : cfg_(cfg), pink_(cfg.rng_seed) {
  validate(cfg_);
  ramp_coeff_ = one_pole_coeff(cfg_.param_smoothing, cfg_.sample_rate);
  freq_coeff_ = one_pole_coeff(cfg_.param_smoothing, cfg_.sample_rate / kRedesignInterval);
}

SynthParams Synth::sanitize(const SynthParams& p) {
  SynthParams out = p;
  if (out.source == NoiseSource::PinkNoise) return out;
  const double limit = 0.45 * cfg_.sample_rate;
  if (out.band_high > limit || out.band_low >= limit) {
    warnings_.push_back("InvalidBand: corners [" + std::to_string(p.band_low) + ", " +
                        std::to_string(p.band_high) + "] Hz clamped to 0.45 * sample_rate");
    out.band_high = std::min(out.band_high, limit);
    out.band_low = std::min(out.band_low, 0.5 * out.band_high);
  }
  return out;
}

void Synth::redesign(Voice& v, double low_hz, double high_hz) {
  v.filter.design(low_hz, high_hz, cfg_.sample_rate);
  v.low_hz = low_hz;
  v.high_hz = high_hz;
  v.since_design = 0;
}

void Synth::start_voice(Voice& v, const SynthParams& p) {
  v = Voice{};
  v.active = true;
  v.target = p;
  if (p.source != NoiseSource::PinkNoise) redesign(v, p.band_low, p.band_high);
  const auto pan = dsp::equal_power_pan(p.pan);
  const double amp = cfg_.reference_volume * p.volume_mult;
  v.gain_l = amp * pan.left;
  v.gain_r = amp * pan.right;
  v.gate_phase = 0.0;
}

void Synth::set_params(const SynthParams& raw) {
  const SynthParams p = sanitize(raw);
  Voice& cur = voices_[0];
  if (!cur.active) {
    start_voice(cur, p);
    return;
  }
  if (cur.target.region.label == p.region.label) {
    cur.target = p;
    return;
  }
  voices_[1] = std::move(cur);
  start_voice(voices_[0], p);
  fade_total_ = static_cast<std::size_t>(std::lround(cfg_.crossfade * cfg_.sample_rate));
  fade_pos_ = 0;
  if (fade_total_ == 0) voices_[1].active = false;
}

void Synth::set_reference_volume(double volume) {
  RenderConfig next = cfg_;
  next.reference_volume = volume;
  validate(next);
  cfg_.reference_volume = volume;
}

void Synth::step_smoothing(Voice& v) {
  const auto pan = dsp::equal_power_pan(v.target.pan);
  const double amp = cfg_.reference_volume * v.target.volume_mult;
  v.gain_l += ramp_coeff_ * (amp * pan.left - v.gain_l);
  v.gain_r += ramp_coeff_ * (amp * pan.right - v.gain_r);

  if (v.target.source == NoiseSource::PinkNoise) return;
  if (++v.since_design < kRedesignInterval) return;
  v.since_design = 0;
  if (v.low_hz == v.target.band_low && v.high_hz == v.target.band_high) return;
  // Geometric glide of both corners toward the target.
  const double lo = v.low_hz * std::pow(v.target.band_low / v.low_hz, freq_coeff_);
  const double hi = v.high_hz * std::pow(v.target.band_high / v.high_hz, freq_coeff_);
  const bool settled = std::abs(lo - v.target.band_low) < 0.01 && std::abs(hi - v.target.band_high) < 0.01;
  redesign(v, settled ? v.target.band_low : lo, settled ? v.target.band_high : hi);
}

double Synth::voice_sample(Voice& v, double source, double& out_l, double& out_r) {
  step_smoothing(v);
  double s = v.target.source == NoiseSource::PinkNoise ? source : v.filter.process(source);
  if (v.target.gate_period) {
    const double frac = v.gate_phase - std::floor(v.gate_phase);
    if (frac >= v.target.gate_duty) s = 0.0;
    v.gate_phase += 1.0 / (*v.target.gate_period * cfg_.sample_rate);
  }
  out_l = s * v.gain_l;
  out_r = s * v.gain_r;
  return s;
}

void Synth::render(std::span<float> left, std::span<float> right) {
  const std::size_t n = std::min(left.size(), right.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double src = pink_.next();
    double l = 0.0;
    double r = 0.0;
    if (voices_[0].active) {
      double cl = 0.0;
      double cr = 0.0;
      voice_sample(voices_[0], src, cl, cr);
      if (voices_[1].active) {
        double ol = 0.0;
        double orr = 0.0;
        voice_sample(voices_[1], src, ol, orr);
        const double phase = 0.5 * std::numbers::pi * static_cast<double>(fade_pos_) /
                             static_cast<double>(fade_total_);
        const double fade_in = std::sin(phase);
        const double fade_out = std::cos(phase);
        cl = cl * fade_in + ol * fade_out;
        cr = cr * fade_in + orr * fade_out;
        if (++fade_pos_ >= fade_total_) voices_[1].active = false;
      }
      l = cl;
      r = cr;
    }
    left[i] = static_cast<float>(dsp::soft_clip(l));
    right[i] = static_cast<float>(dsp::soft_clip(r));
  }
}

StereoBuffer render_block(const SynthParams& params, std::size_t frames, Synth& state) {
  state.set_params(params);
  StereoBuffer out;
  out.resize(frames);
  state.render(out.left, out.right);
  return out;
}

RenderResult render_trial(std::span<const SwayPoint> points, const RenderConfig& cfg) {
  RenderResult result;
  if (points.empty()) return result;

  const double t0 = points.front().t;
  const double interval = points.size() > 1
                              ? (points.back().t - t0) / static_cast<double>(points.size() - 1)
                              : 0.02;
  const double duration = interval * static_cast<double>(points.size());
  const auto total = static_cast<std::size_t>(std::llround(duration * cfg.sample_rate));
  result.audio.resize(total);

  Synth synth(cfg);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < points.size() && pos < total; ++i) {
    const SynthParams params = map_params(points[i], cfg);
    if (result.timeline.empty() || !(result.timeline.back().params == params)) {
      result.timeline.push_back({points[i].t, params});
    }
    synth.set_params(params);
    const std::size_t end =
        i + 1 < points.size()
            ? std::min(total, static_cast<std::size_t>(std::llround((points[i + 1].t - t0) * cfg.sample_rate)))
            : total;
    while (pos < end) {
      const std::size_t n = std::min(cfg.block_size, end - pos);
      synth.render(std::span(result.audio.left).subspan(pos, n), std::span(result.audio.right).subspan(pos, n));
      pos += n;
    }
  }
  return result;
}

std::string timeline_to_json(std::span<const TimelineEntry> timeline) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : timeline) {
    const auto& p = e.params;
    nlohmann::json item{{"t", e.t},
                        {"region", to_string(p.region.label)},
                        {"warning", to_string(p.region.warning)},
                        {"source", to_string(p.source)},
                        {"band_low", p.band_low},
                        {"band_high", p.band_high},
                        {"volume_mult", p.volume_mult},
                        {"pan", p.pan},
                        {"gate_duty", p.gate_duty}};
    item["gate_period"] = p.gate_period ? nlohmann::json(*p.gate_period) : nlohmann::json(nullptr);
    j.push_back(std::move(item));
  }
  return j.dump(2);
}

}  // namespace abf
