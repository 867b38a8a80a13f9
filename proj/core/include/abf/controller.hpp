#pragma once

// Operator-facing state machine: calibrate, start/stop trials, volume, and a
// telemetry fan-out. Commands are serialized on one mutex; trials run on a
// worker thread.

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "abf/session.hpp"
#include "abf/trial_store.hpp"

namespace abf {

class TelemetrySubscription {
 public:
  explicit TelemetrySubscription(std::size_t capacity) : capacity_(capacity) {}

  /// Never blocks on the consumer: a full queue drops its oldest frame.
  void offer(const TelemetryFrame& frame);
  /// Waits up to `timeout` for a frame; nullopt on timeout or close.
  std::optional<TelemetryFrame> pop(std::chrono::milliseconds timeout);
  void close();
  bool closed() const;
  std::size_t skipped() const;

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<TelemetryFrame> frames_;
  std::size_t skipped_ = 0;
  bool closed_ = false;
};

class TelemetryHub {
 public:
  std::shared_ptr<TelemetrySubscription> subscribe(std::size_t capacity = 4096);
  void publish(const TelemetryFrame& frame);
  void close_all();
  std::size_t subscribers() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::weak_ptr<TelemetrySubscription>> subs_;
};

nlohmann::json to_json(const TelemetryFrame& f);
nlohmann::json to_json(const SynthParams& p);

enum class EngineState : std::uint8_t { Idle, Calibrating, Ready, Running };
std::string_view to_string(EngineState s) noexcept;

struct ControllerConfig {
  SubjectInfo subject{"subject", Group::Unspecified};
  SourceFactory factory;
  TrialOptions trial;  // abort / telemetry / params_sink are managed by the controller
  double calibration_window = kDefaultCalibrationWindow;
  std::optional<std::filesystem::path> store_dir;
};

class SessionController {
 public:
  /// `audio` (optional) receives params during feedback trials and volume
  /// changes.
  SessionController(ControllerConfig cfg, LiveAudioEngine* audio = nullptr);
  ~SessionController();

  SessionController(const SessionController&) = delete;
  SessionController& operator=(const SessionController&) = delete;

  /// Starts calibration on the worker. Throws StateConflict while
  /// calibrating or running.
  void calibrate();
  /// Throws CalibrationMissing without a baseline, StateConflict while
  /// calibrating or running.
  void start_trial(const Condition& condition, bool abf_on);
  /// Idempotent. Returns true if a running trial was asked to stop.
  bool stop_trial();
  /// Throws InvalidArgument outside (0, 1].
  void set_volume(double reference_volume);

  EngineState state() const;
  double volume() const;
  std::optional<Baseline> baseline() const;
  nlohmann::json state_json() const;

  std::vector<TrialRecord> trials() const;
  std::optional<TrialRecord> find_trial(const std::string& id) const;
  /// Group report over this controller's completed trials.
  GroupReport report() const;

  TelemetryHub& telemetry() noexcept { return hub_; }

  /// Blocks until no calibration or trial is in progress.
  void wait_idle() const;

 private:
  void join_worker();

  ControllerConfig cfg_;
  LiveAudioEngine* audio_;
  std::optional<TrialStore> store_;
  TelemetryHub hub_;

  std::mutex command_mutex_;  // one command at a time
  mutable std::mutex mutex_;
  mutable std::condition_variable idle_cv_;
  EngineState state_ = EngineState::Idle;
  std::optional<Baseline> baseline_;
  double volume_;
  std::vector<TrialRecord> trials_;
  std::string last_error_;
  double telemetry_clock_ = 0.0;  // continues across trials

  std::atomic<bool> abort_{false};
  std::jthread worker_;
};

}  // namespace abf
