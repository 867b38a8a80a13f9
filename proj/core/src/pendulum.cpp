#include "abf/pendulum.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "abf/error.hpp"

namespace abf {

void validate(const SimConfig& cfg) {
  if (!(cfg.sigma > 0.0)) throw Error(Errc::InvalidArgument, "sim sigma must be positive");
  if (!(cfg.tau > 0.0)) throw Error(Errc::InvalidArgument, "sim tau must be positive");
  for (double g : cfg.feedback_gain) {
    if (!(g >= 0.0 && g < 1.0)) throw Error(Errc::InvalidArgument, "feedback gains must be in [0, 1)");
  }
  if (!std::is_sorted(cfg.feedback_gain.begin(), cfg.feedback_gain.end())) {
    throw Error(Errc::InvalidArgument, "feedback gains must not decrease with warning level");
  }
  if (!(cfg.eyes_closed_multiplier >= 1.0 && cfg.foam_multiplier >= 1.0)) {
    throw Error(Errc::InvalidArgument, "condition multipliers must be >= 1");
  }
  if (!(cfg.reaction_delay >= 0.0)) throw Error(Errc::InvalidArgument, "reaction_delay must be >= 0");
  if (!(cfg.rate >= 4.0 && cfg.rate <= 1000.0)) throw Error(Errc::InvalidArgument, "sim rate must be in [4, 1000] Hz");
}

double condition_multiplier(const SimConfig& cfg, const Condition& condition) noexcept {
  double m = 1.0;
  if (condition.eyes == Eyes::Closed) m *= cfg.eyes_closed_multiplier;
  if (condition.surface == Surface::Foam) m *= cfg.foam_multiplier;
  return m;
}

std::array<double, 3> parse_gains(std::string_view text) {
  std::array<double, 3> gains{};
  std::size_t i = 0;
  while (true) {
    const auto comma = text.find(',');
    const std::string_view part = text.substr(0, comma);
    if (i >= 3) throw Error(Errc::InvalidArgument, "expected exactly three gains");
    const auto res = std::from_chars(part.data(), part.data() + part.size(), gains[i]);
    if (res.ec != std::errc{} || res.ptr != part.data() + part.size()) {
      throw Error(Errc::InvalidArgument, "bad gain value '" + std::string(part) + "'");
    }
    ++i;
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (i != 3) throw Error(Errc::InvalidArgument, "expected exactly three gains");
  return gains;
}

PendulumState step(const PendulumState& state, double dt, std::optional<Warning> warning,
                   const SimConfig& cfg, double multiplier, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double n_pitch = normal(rng);
  const double n_roll = normal(rng);

  double scale = cfg.sigma * std::sqrt(dt) * multiplier;
  if (warning && *warning != Warning::Safety) {
    scale *= 1.0 - cfg.feedback_gain[static_cast<std::size_t>(*warning) - 1];
  }
  auto advance = [&](double v, double noise) {
    const double next = v + (-v / cfg.tau + cfg.drift) * dt + scale * noise;
    return std::clamp(next, -kMaxTiltDeg, kMaxTiltDeg);
  };
  return {advance(state.pitch, n_pitch), advance(state.roll, n_roll)};
}

VirtualSubject::VirtualSubject(const SimConfig& cfg, const Condition& condition, bool feedback)
    : cfg_(cfg),
      multiplier_(condition_multiplier(cfg, condition)),
      feedback_(feedback),
      dt_(1.0 / cfg.rate),
      delay_steps_(static_cast<std::size_t>(std::max(1L, std::lround(cfg.reaction_delay * cfg.rate)))),
      rng_(cfg.seed) {
  validate(cfg_);
  // Start from the stationary distribution of the open-loop process.
  const double stationary = cfg_.sigma * std::sqrt(cfg_.tau / 2.0) * multiplier_;
  std::normal_distribution<double> normal(0.0, stationary);
  state_.pitch = normal(rng_);
  state_.roll = normal(rng_);
}

RawSample VirtualSubject::next() {
  RawSample out{static_cast<double>(index_) * dt_, state_.pitch, state_.roll};
  if (feedback_ && pending_.size() >= delay_steps_) {
    active_ = pending_.front();
    pending_.pop_front();
  }
  state_ = step(state_, dt_, feedback_ ? active_ : std::nullopt, cfg_, multiplier_, rng_);
  ++index_;
  return out;
}

void VirtualSubject::observe(Warning warning) {
  if (feedback_) pending_.push_back(warning);
}

std::vector<RawSample> run_virtual_subject(const SimConfig& cfg, const Condition& condition, bool abf_on,
                                           double duration, const Baseline& baseline) {
  VirtualSubject subject(cfg, condition, abf_on);
  const auto n = static_cast<std::size_t>(std::llround(duration * cfg.rate));
  std::vector<RawSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(subject.next());
    if (abf_on) subject.observe(classify(apply_baseline(out.back(), baseline)).warning);
  }
  return out;
}

}  // namespace abf
