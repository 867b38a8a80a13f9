#pragma once

// Block renderer for the biofeedback sound. One Synth owns all DSP state and
// is meant to be driven from a single (real-time) thread.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "abf/dsp.hpp"
#include "abf/synth_params.hpp"

namespace abf {

struct StereoBuffer {
  std::vector<float> left;
  std::vector<float> right;

  std::size_t frames() const noexcept { return left.size(); }
  void resize(std::size_t n) {
    left.resize(n);
    right.resize(n);
  }
  friend bool operator==(const StereoBuffer&, const StereoBuffer&) = default;
};

class Synth {
 public:
  explicit Synth(const RenderConfig& cfg);

  /// Takes effect at the next rendered frame. A region change starts a
  /// crossfade; other changes ramp over cfg.param_smoothing.
  void set_params(const SynthParams& params);

  /// Renders frames.size() stereo frames into the two spans.
  void render(std::span<float> left, std::span<float> right);

  /// Gains glide to the new reference over cfg.param_smoothing.
  void set_reference_volume(double volume);

  const RenderConfig& config() const noexcept { return cfg_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  bool has_params() const noexcept { return voices_[0].active; }

 private:
  struct Voice {
    bool active = false;
    SynthParams target;
    dsp::BandPass filter;
    double low_hz = 0.0;  // currently designed corners
    double high_hz = 0.0;
    double gain_l = 0.0;
    double gain_r = 0.0;
    double gate_phase = 0.0;  // cycles, fractional part used
    std::size_t since_design = 0;
  };

  void start_voice(Voice& v, const SynthParams& p);
  void redesign(Voice& v, double low_hz, double high_hz);
  SynthParams sanitize(const SynthParams& p);
  double voice_sample(Voice& v, double source, double& out_l, double& out_r);
  void step_smoothing(Voice& v);

  RenderConfig cfg_;
  dsp::PinkNoise pink_;
  std::array<Voice, 2> voices_;  // [0] current, [1] fading out
  std::size_t fade_total_ = 0;
  std::size_t fade_pos_ = 0;
  double ramp_coeff_ = 1.0;  // per-sample one-pole coefficient
  double freq_coeff_ = 1.0;  // per-redesign-interval coefficient
  std::vector<std::string> warnings_;
};

/// Renders `frames` frames of `params` with persistent state.
StereoBuffer render_block(const SynthParams& params, std::size_t frames, Synth& state);

struct TimelineEntry {
  double t = 0.0;
  SynthParams params;
};

struct RenderResult {
  StereoBuffer audio;
  std::vector<TimelineEntry> timeline;
};

/// Offline render: params are taken from each sway sample and held until the
/// next one. The buffer covers (n * sample interval) seconds where the
/// interval is inferred from the point timestamps.
RenderResult render_trial(std::span<const SwayPoint> points, const RenderConfig& cfg);

std::string timeline_to_json(std::span<const TimelineEntry> timeline);

}  // namespace abf
