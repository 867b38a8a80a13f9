#include "abf/session.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <random>

#include "abf/error.hpp"
#include "abf/trial_store.hpp"

namespace abf {

std::string_view to_string(TrialStatus s) noexcept {
  switch (s) {
    case TrialStatus::Complete: return "complete";
    case TrialStatus::Aborted: return "aborted";
    case TrialStatus::Incomplete: return "incomplete";
  }
  return "?";
}

namespace {

std::string utc_now_iso() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

ControlOutput control_step(const RawSample& raw, const Baseline& baseline, bool abf_on, const RenderConfig& render) {
  ControlOutput out;
  out.point = apply_baseline(raw, baseline);
  out.region = classify(out.point);
  out.dist = dist(out.point);
  if (abf_on) out.params = map_params(out.point, render);
  return out;
}

std::string make_trial_id(const SubjectInfo& subject, const Condition& condition, bool abf_on) {
  const auto stamp = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
  return subject.id + "_" + std::string(to_string(condition.surface)) + "_" + std::string(to_string(condition.eyes)) +
         (abf_on ? "_abf_" : "_noabf_") + std::to_string(stamp);
}

Baseline calibrate_subject(SampleSource& source, double window) {
  std::vector<RawSample> samples;
  while (auto s = source.next()) {
    if (!samples.empty() && s->t >= samples.front().t + window - 1e-9) break;
    samples.push_back(*s);
  }
  return calibrate(samples, window);
}

TrialRecord run_trial(SampleSource& source, const SubjectInfo& subject, const std::optional<Baseline>& baseline,
                      const Condition& condition, bool abf_on, const TrialOptions& options) {
  if (!baseline) throw Error(Errc::CalibrationMissing, "subject '" + subject.id + "' has no baseline");

  TrialRecord rec;
  rec.id = make_trial_id(subject, condition, abf_on);
  rec.subject_id = subject.id;
  rec.group = subject.group;
  rec.condition = condition;
  rec.abf_on = abf_on;
  rec.baseline = *baseline;
  rec.reference_volume = options.render.reference_volume;
  rec.started_at = utc_now_iso();
  rec.source = source.describe();

  const auto target = static_cast<std::size_t>(std::llround(options.duration * options.rate));
  rec.samples.reserve(target);
  Regularizer regularizer(options.rate, options.dropout_policy);
  std::vector<RawSample> ready;
  std::optional<double> first_t;

  auto consume = [&](const RawSample& s) {
    if (!first_t) first_t = s.t;
    RawSample rel = s;
    rel.t -= *first_t;
    const ControlOutput c = control_step(rel, *baseline, abf_on, options.render);
    rec.samples.push_back(c.point);
    if (abf_on) {
      if (options.params_sink) options.params_sink->push(c.point.t, *c.params);
      source.feedback(c.region.warning);
    }
    if (options.telemetry) {
      TelemetryFrame f;
      f.t = c.point.t;
      f.x = c.point.x;
      f.y = c.point.y;
      f.x_norm = normalize_display(c.point.x);
      f.y_norm = normalize_display(c.point.y);
      f.region = c.region;
      f.dist = c.dist;
      f.params = c.params;
      f.trial_state = "running";
      options.telemetry(f);
    }
  };

  bool source_ended = false;
  while (rec.samples.size() < target) {
    if (options.abort && options.abort->load(std::memory_order_acquire)) {
      rec.status = TrialStatus::Aborted;
      break;
    }
    ready.clear();
    if (auto raw = source.next()) {
      regularizer.push(*raw, ready);
    } else {
      regularizer.finish(ready);
      source_ended = true;
    }
    for (const auto& s : ready) {
      if (rec.samples.size() >= target) break;
      consume(s);
    }
    if (source_ended) break;
  }
  if (rec.status == TrialStatus::Complete && rec.samples.size() < target) rec.status = TrialStatus::Incomplete;
  rec.gaps = regularizer.gaps();
  if (!rec.samples.empty()) rec.metrics = trial_metrics(rec.samples);
  return rec;
}

// ---------------------------------------------------------------------------

std::vector<std::pair<Condition, bool>> protocol_order(bool shuffle, std::uint64_t seed) {
  std::vector<std::pair<Condition, bool>> order;
  for (const auto& c : kAllConditions) {
    order.emplace_back(c, false);
    order.emplace_back(c, true);
  }
  if (shuffle) {
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  return order;
}

bool protocol_complete(std::span<const TrialRecord> records) {
  std::array<bool, 8> done{};
  for (const auto& r : records) {
    if (r.status == TrialStatus::Complete) done[condition_index(r.condition) * 2 + (r.abf_on ? 1 : 0)] = true;
  }
  return std::all_of(done.begin(), done.end(), [](bool b) { return b; });
}

std::map<Condition, PairedImprovement> pair_improvements(std::span<const TrialRecord> records) {
  std::map<Condition, PairedImprovement> out;
  for (const auto& c : kAllConditions) {
    const TrialRecord* no_abf = nullptr;
    const TrialRecord* abf = nullptr;
    for (const auto& r : records) {
      if (r.status != TrialStatus::Complete || !(r.condition == c)) continue;
      (r.abf_on ? abf : no_abf) = &r;
    }
    if (no_abf && abf) out[c] = paired_improvement(no_abf->metrics, abf->metrics);
  }
  return out;
}

ProtocolResult run_protocol(const SubjectInfo& subject, const SourceFactory& factory, const ProtocolOptions& options) {
  ProtocolResult result;
  std::vector<TrialRecord> existing;
  if (options.store && std::filesystem::exists(options.store->path_for(subject.id))) {
    existing = options.store->load(subject.id);
  }

  const auto prior = std::find_if(existing.rbegin(), existing.rend(),
                                  [](const TrialRecord& r) { return r.status == TrialStatus::Complete; });
  if (prior != existing.rend()) {
    result.baseline = prior->baseline;
  } else {
    auto source = factory({kAllConditions[0], false, true});
    result.baseline = calibrate_subject(*source, options.calibration_window);
  }

  for (const auto& [condition, abf_on] : protocol_order(options.shuffle, options.shuffle_seed)) {
    const auto done = std::find_if(existing.rbegin(), existing.rend(), [&](const TrialRecord& r) {
      return r.status == TrialStatus::Complete && r.condition == condition && r.abf_on == abf_on;
    });
    if (done != existing.rend()) {
      result.records.push_back(*done);
      continue;
    }
    if (options.confirm && !options.confirm(condition, abf_on)) break;

    auto source = factory({condition, abf_on, false});
    TrialRecord rec = run_trial(*source, subject, result.baseline, condition, abf_on, options.trial);
    if (options.store) options.store->append(rec);
    const bool ok = rec.status == TrialStatus::Complete;
    result.records.push_back(std::move(rec));
    if (!ok) break;
  }

  result.improvements = pair_improvements(result.records);
  result.complete = protocol_complete(result.records);
  return result;
}

SourceFactory sim_source_factory(const SourceConfig& base) {
  return [base](const SourceRequest& req) -> std::unique_ptr<SampleSource> {
    SourceConfig cfg = base;
    cfg.kind = SourceKind::Sim;
    if (req.calibration) {
      cfg.condition = kAllConditions[0];
      cfg.feedback = false;
      cfg.duration = kDefaultCalibrationWindow;
    } else {
      cfg.condition = req.condition;
      cfg.feedback = req.abf_on;
      // Both arms of a condition see the same noise realization.
      cfg.sim.seed = base.sim.seed + 1 + condition_index(req.condition);
    }
    return open_source(cfg);
  };
}

}  // namespace abf
