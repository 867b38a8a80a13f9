#pragma once

// Synthetic subject: per-axis mean-reverting random walk standing in for an
// inverted-pendulum sway signal, optionally responsive to audio warnings.

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <vector>

#include "abf/metrics.hpp"
#include "abf/sway.hpp"

namespace abf {

struct SimConfig {
  std::uint64_t seed = 42;
  double sigma = 1.0;  // degrees / sqrt(s)
  double tau = 2.0;    // seconds
  double drift = 0.0;  // degrees / s
  /// Noise reduction when hearing a warning, indexed Low, Medium, High.
  std::array<double, 3> feedback_gain{0.3, 0.5, 0.7};
  double eyes_closed_multiplier = 1.5;
  double foam_multiplier = 1.3;
  double reaction_delay = 0.25;  // seconds between a warning and its effect
  double rate = 50.0;            // Hz

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// Throws InvalidArgument on sigma <= 0, tau <= 0, gains outside [0, 1),
/// decreasing gains, multipliers < 1 or a rate outside [4, 1000] Hz.
void validate(const SimConfig& cfg);

double condition_multiplier(const SimConfig& cfg, const Condition& condition) noexcept;

/// Parses "low,med,high" gain triples.
std::array<double, 3> parse_gains(std::string_view text);

struct PendulumState {
  double pitch = 0.0;
  double roll = 0.0;
};

/// One Euler-Maruyama step on both axes:
///   v <- v + (-v / tau + drift) dt + sigma sqrt(dt) N(0,1) m
/// with the stochastic term scaled by (1 - gain[warning]) when `warning` is
/// Low or above. Draws exactly two normals (pitch first) per call.
PendulumState step(const PendulumState& state, double dt, std::optional<Warning> warning,
                   const SimConfig& cfg, double multiplier, std::mt19937_64& rng);

/// Streaming virtual subject with delayed warning feedback.
class VirtualSubject {
 public:
  VirtualSubject(const SimConfig& cfg, const Condition& condition, bool feedback);

  /// Current sample (t = index / rate), then advances the state.
  RawSample next();

  /// Warning produced by the live classifier for the most recent sample.
  /// Takes effect reaction_delay later. Ignored when feedback is off.
  void observe(Warning warning);

  bool feedback() const noexcept { return feedback_; }
  std::size_t delay_steps() const noexcept { return delay_steps_; }

 private:
  SimConfig cfg_;
  double multiplier_;
  bool feedback_;
  double dt_;
  std::size_t delay_steps_;
  std::mt19937_64 rng_;
  PendulumState state_;
  std::size_t index_ = 0;
  std::deque<Warning> pending_;  // warnings for samples not yet acted upon
  std::optional<Warning> active_;
};

/// Runs a closed (abf_on) or open loop trial of `duration` seconds and
/// returns rate * duration samples. Warnings come from classify() applied
/// to the baseline-subtracted sample.
std::vector<RawSample> run_virtual_subject(const SimConfig& cfg, const Condition& condition, bool abf_on,
                                           double duration = 60.0, const Baseline& baseline = {});

}  // namespace abf
