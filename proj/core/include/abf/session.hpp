#pragma once

// Trial and protocol orchestration: calibrate, run 60 s trials through the
// control path (baseline -> classify -> map_params), and pair the no-feedback
// and feedback arms per condition.

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "abf/ingest.hpp"
#include "abf/live_audio.hpp"
#include "abf/metrics.hpp"
#include "abf/synth_params.hpp"

namespace abf {

inline constexpr int kTrialSchemaVersion = 1;
inline constexpr double kTrialDuration = 60.0;
inline constexpr double kNominalRate = 50.0;

struct SubjectInfo {
  std::string id;
  Group group = Group::Unspecified;
};

enum class TrialStatus : std::uint8_t { Complete, Aborted, Incomplete };
std::string_view to_string(TrialStatus s) noexcept;

struct TrialRecord {
  std::string id;
  std::string subject_id;
  Group group = Group::Unspecified;
  Condition condition;
  bool abf_on = false;
  Baseline baseline;
  std::vector<SwayPoint> samples;
  TrialMetrics metrics;
  double reference_volume = 0.5;
  std::string started_at;  // ISO 8601 UTC
  std::string source;
  TrialStatus status = TrialStatus::Complete;
  std::size_t gaps = 0;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// One telemetry frame per regularized sample.
struct TelemetryFrame {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double x_norm = 0.5;
  double y_norm = 0.5;
  Region region;
  double dist = 0.0;
  std::optional<SynthParams> params;
  std::string trial_state;
};

/// Baseline-subtract, classify and (when feedback is on) map to SynthParams.
/// This is the per-sample control path.
struct ControlOutput {
  SwayPoint point;
  Region region;
  double dist = 0.0;
  std::optional<SynthParams> params;
};
ControlOutput control_step(const RawSample& raw, const Baseline& baseline, bool abf_on, const RenderConfig& render);

struct TrialOptions {
  double duration = kTrialDuration;
  double rate = kNominalRate;
  DropoutPolicy dropout_policy = DropoutPolicy::HoldLast;
  RenderConfig render;
  ParamsSink* params_sink = nullptr;
  std::function<void(const TelemetryFrame&)> telemetry;
  const std::atomic<bool>* abort = nullptr;
};

/// Reads calibration samples (window seconds) from the source and averages
/// them. Throws EmptyCalibration.
Baseline calibrate_subject(SampleSource& source, double window = kDefaultCalibrationWindow);

/// Runs one trial of options.duration seconds. Throws CalibrationMissing
/// without a baseline. A source that ends early yields status Incomplete;
/// an abort request yields status Aborted.
TrialRecord run_trial(SampleSource& source, const SubjectInfo& subject, const std::optional<Baseline>& baseline,
                      const Condition& condition, bool abf_on, const TrialOptions& options);

std::string make_trial_id(const SubjectInfo& subject, const Condition& condition, bool abf_on);

// ---------------------------------------------------------------------------

struct SourceRequest {
  Condition condition;
  bool abf_on = false;
  bool calibration = false;
};

using SourceFactory = std::function<std::unique_ptr<SampleSource>(const SourceRequest&)>;

class TrialStore;

struct ProtocolOptions {
  TrialOptions trial;
  double calibration_window = kDefaultCalibrationWindow;
  bool shuffle = false;
  std::uint64_t shuffle_seed = 0;
  /// Operator confirmation before each trial (surface / eyes change). A
  /// false return pauses the protocol.
  std::function<bool(const Condition&, bool abf_on)> confirm;
  TrialStore* store = nullptr;
};

struct ProtocolResult {
  Baseline baseline;
  std::vector<TrialRecord> records;
  std::map<Condition, PairedImprovement> improvements;
  bool complete = false;
};

/// The eight (condition, feedback) cells in run order: per condition the
/// no-feedback arm first, or a seeded shuffle.
std::vector<std::pair<Condition, bool>> protocol_order(bool shuffle, std::uint64_t seed);

/// Runs or resumes the eight-trial protocol. Cells that already have a
/// complete record in options.store are not re-run.
ProtocolResult run_protocol(const SubjectInfo& subject, const SourceFactory& factory, const ProtocolOptions& options);

/// A protocol is complete iff all eight cells have a Complete record.
bool protocol_complete(std::span<const TrialRecord> records);

/// Pairs the latest complete no-feedback / feedback records per condition.
std::map<Condition, PairedImprovement> pair_improvements(std::span<const TrialRecord> records);

/// Source factory for the virtual subject: the no-feedback and feedback arms
/// of a condition share a seed, calibration uses eyes-open/floor.
SourceFactory sim_source_factory(const SourceConfig& base);

}  // namespace abf
