#include "abf/controller.hpp"

#include <algorithm>

#include "abf/error.hpp"

namespace abf {

using nlohmann::json;

void TelemetrySubscription::offer(const TelemetryFrame& frame) {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    if (frames_.size() >= capacity_) {
      frames_.pop_front();
      ++skipped_;
    }
    frames_.push_back(frame);
  }
  cv_.notify_one();
}

std::optional<TelemetryFrame> TelemetrySubscription::pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, timeout, [&] { return !frames_.empty() || closed_; });
  if (frames_.empty()) return std::nullopt;
  TelemetryFrame f = std::move(frames_.front());
  frames_.pop_front();
  return f;
}

void TelemetrySubscription::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool TelemetrySubscription::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

std::size_t TelemetrySubscription::skipped() const {
  std::lock_guard lock(mutex_);
  return skipped_;
}

std::shared_ptr<TelemetrySubscription> TelemetryHub::subscribe(std::size_t capacity) {
  auto sub = std::make_shared<TelemetrySubscription>(capacity);
  std::lock_guard lock(mutex_);
  subs_.push_back(sub);
  return sub;
}

void TelemetryHub::publish(const TelemetryFrame& frame) {
  std::lock_guard lock(mutex_);
  std::erase_if(subs_, [](const auto& w) { return w.expired(); });
  for (const auto& w : subs_) {
    if (auto s = w.lock()) s->offer(frame);
  }
}

void TelemetryHub::close_all() {
  std::lock_guard lock(mutex_);
  for (const auto& w : subs_) {
    if (auto s = w.lock()) s->close();
  }
}

std::size_t TelemetryHub::subscribers() const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(std::count_if(subs_.begin(), subs_.end(), [](const auto& w) { return !w.expired(); }));
}

json to_json(const SynthParams& p) {
  json j{{"region", to_string(p.region.label)},
         {"warning", to_string(p.region.warning)},
         {"source", to_string(p.source)},
         {"band_low", p.band_low},
         {"band_high", p.band_high},
         {"volume_mult", p.volume_mult},
         {"pan", p.pan},
         {"gate_duty", p.gate_duty}};
  j["gate_period"] = p.gate_period ? json(*p.gate_period) : json(nullptr);
  return j;
}

json to_json(const TelemetryFrame& f) {
  json j{{"t", f.t},
         {"x", f.x},
         {"y", f.y},
         {"x_norm", f.x_norm},
         {"y_norm", f.y_norm},
         {"region", to_string(f.region.label)},
         {"warning", to_string(f.region.warning)},
         {"dist", f.dist},
         {"trial_state", f.trial_state}};
  j["params"] = f.params ? to_json(*f.params) : json(nullptr);
  return j;
}

std::string_view to_string(EngineState s) noexcept {
  switch (s) {
    case EngineState::Idle: return "idle";
    case EngineState::Calibrating: return "calibrating";
    case EngineState::Ready: return "ready";
    case EngineState::Running: return "running";
  }
  return "?";
}

// ---------------------------------------------------------------------------

SessionController::SessionController(ControllerConfig cfg, LiveAudioEngine* audio)
    : cfg_(std::move(cfg)), audio_(audio), volume_(cfg_.trial.render.reference_volume) {
  if (!cfg_.factory) throw Error(Errc::InvalidArgument, "controller needs a source factory");
  if (cfg_.store_dir) store_.emplace(*cfg_.store_dir);
}

SessionController::~SessionController() {
  abort_.store(true);
  join_worker();
  hub_.close_all();
}

void SessionController::join_worker() {
  if (worker_.joinable()) worker_.join();
}

void SessionController::calibrate() {
  std::lock_guard command(command_mutex_);
  std::unique_lock lock(mutex_);
  if (state_ == EngineState::Calibrating || state_ == EngineState::Running) {
    throw Error(Errc::StateConflict, std::string("cannot calibrate while ") + std::string(to_string(state_)));
  }
  const EngineState previous = state_;
  state_ = EngineState::Calibrating;
  lock.unlock();
  join_worker();
  worker_ = std::jthread([this, previous] {
    try {
      auto source = cfg_.factory({kAllConditions[0], false, true});
      const Baseline b = calibrate_subject(*source, cfg_.calibration_window);
      std::lock_guard guard(mutex_);
      baseline_ = b;
      state_ = EngineState::Ready;
      last_error_.clear();
    } catch (const std::exception& e) {
      std::lock_guard guard(mutex_);
      state_ = previous;
      last_error_ = e.what();
    }
    idle_cv_.notify_all();
  });
}

void SessionController::start_trial(const Condition& condition, bool abf_on) {
  std::lock_guard command(command_mutex_);
  std::unique_lock lock(mutex_);
  if (state_ == EngineState::Calibrating || state_ == EngineState::Running) {
    throw Error(Errc::StateConflict, std::string("cannot start a trial while ") + std::string(to_string(state_)));
  }
  if (!baseline_) throw Error(Errc::CalibrationMissing, "calibrate the subject before starting a trial");
  state_ = EngineState::Running;
  abort_.store(false);
  const Baseline baseline = *baseline_;
  const double offset = telemetry_clock_;
  TrialOptions opts = cfg_.trial;
  opts.render.reference_volume = volume_;
  lock.unlock();

  join_worker();
  worker_ = std::jthread([this, condition, abf_on, baseline, offset, opts]() mutable {
    opts.abort = &abort_;
    opts.params_sink = abf_on ? audio_ : nullptr;
    double last_t = offset;
    opts.telemetry = [this, offset, &last_t](const TelemetryFrame& f) {
      TelemetryFrame out = f;
      out.t = offset + f.t;
      last_t = out.t;
      hub_.publish(out);
    };
    try {
      auto source = cfg_.factory({condition, abf_on, false});
      TrialRecord rec = run_trial(*source, cfg_.subject, baseline, condition, abf_on, opts);
      if (audio_) audio_->silence();
      if (store_) store_->append(rec);
      std::lock_guard guard(mutex_);
      trials_.push_back(std::move(rec));
      last_error_.clear();
    } catch (const std::exception& e) {
      if (audio_) audio_->silence();
      std::lock_guard guard(mutex_);
      last_error_ = e.what();
    }
    {
      std::lock_guard guard(mutex_);
      telemetry_clock_ = last_t + 1.0 / opts.rate;
      state_ = EngineState::Ready;
    }
    idle_cv_.notify_all();
  });
}

bool SessionController::stop_trial() {
  std::lock_guard command(command_mutex_);
  std::lock_guard lock(mutex_);
  if (state_ != EngineState::Running) return false;
  abort_.store(true, std::memory_order_release);
  return true;
}

void SessionController::set_volume(double reference_volume) {
  if (!(reference_volume > 0.0 && reference_volume <= 1.0)) {
    throw Error(Errc::InvalidArgument, "reference_volume must be in (0, 1]");
  }
  std::lock_guard command(command_mutex_);
  std::lock_guard lock(mutex_);
  volume_ = reference_volume;
  if (audio_) audio_->set_reference_volume(reference_volume);
}

EngineState SessionController::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

double SessionController::volume() const {
  std::lock_guard lock(mutex_);
  return volume_;
}

std::optional<Baseline> SessionController::baseline() const {
  std::lock_guard lock(mutex_);
  return baseline_;
}

json SessionController::state_json() const {
  std::lock_guard lock(mutex_);
  json j{{"state", to_string(state_)},
         {"subject", cfg_.subject.id},
         {"group", to_string(cfg_.subject.group)},
         {"reference_volume", volume_},
         {"trials", trials_.size()},
         {"protocol_complete", protocol_complete(trials_)}};
  j["baseline"] = baseline_ ? json{{"x0", baseline_->x0}, {"y0", baseline_->y0}, {"n_samples", baseline_->n_samples}}
                            : json(nullptr);
  j["last_error"] = last_error_.empty() ? json(nullptr) : json(last_error_);
  return j;
}

std::vector<TrialRecord> SessionController::trials() const {
  std::lock_guard lock(mutex_);
  return trials_;
}

std::optional<TrialRecord> SessionController::find_trial(const std::string& id) const {
  std::lock_guard lock(mutex_);
  for (const auto& r : trials_) {
    if (r.id == id) return r;
  }
  return std::nullopt;
}

GroupReport SessionController::report() const {
  std::lock_guard lock(mutex_);
  PairMap pairs;
  for (const auto& [condition, imp] : pair_improvements(trials_)) {
    pairs[{cfg_.subject.id, cfg_.subject.group, condition}] = imp;
  }
  std::vector<Group> groups;
  if (cfg_.subject.group != Group::Unspecified) groups.push_back(cfg_.subject.group);
  return group_report(pairs, groups);
}

void SessionController::wait_idle() const {
  std::unique_lock lock(mutex_);
  idle_cv_.wait(lock, [&] { return state_ != EngineState::Calibrating && state_ != EngineState::Running; });
}

}  // namespace abf
