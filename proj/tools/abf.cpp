// abf: command-line front end for calibration, trials, protocols, reports,
// offline rendering and the control gateway.
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "abf/error.hpp"
#include "abf/ingest.hpp"
#include "abf/live_audio.hpp"
#include "abf/metrics.hpp"
#include "abf/session.hpp"
#include "abf/synth.hpp"
#include "abf/trial_store.hpp"
#include "abf/wav.hpp"

#ifdef ABF_WITH_GATEWAY
#include "abf/controller.hpp"
#include "abf/gateway.hpp"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace abf {
namespace {

// `[sim]`, `[source]`, `[render]` and `[subject]` config sections map onto the
// prefixed long option names (e.g. `[sim] seed` -> `--sim-seed`).
class SectionedConfig : public CLI::ConfigINI {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigINI::from_config(input);
    for (auto& item : items) {
      if (item.parents.size() == 1 && kFlat.contains(item.parents[0])) {
        item.name = item.parents[0] + "-" + item.name;
        item.parents.clear();
      }
    }
    return items;
  }

 private:
  inline static const std::set<std::string> kFlat{"sim", "source", "render", "subject"};
};

struct Options {
  // source
  std::string replay;
  std::string replay_dir;
  std::string listen;
  bool sim = false;
  double rate = kNominalRate;
  std::string policy = "hold";
  bool realtime = false;
  bool fast = false;
  double speed = 1.0;
  double udp_timeout = 2.0;
  SimConfig sim_cfg;
  std::string gains;
  // subject / store
  std::string subject = "subject";
  std::string group = "unspecified";
  std::string store = "trials";
  // audio
  RenderConfig render;
  std::string audio = "none";
  bool headless = false;
};

SourceConfig base_source(const Options& o, bool realtime_default) {
  // Live audio only makes sense against the wall clock.
  realtime_default = realtime_default || o.audio == "pcm";
  SourceConfig cfg;
  cfg.sample_rate = o.rate;
  cfg.dropout_policy = o.policy == "interpolate" ? DropoutPolicy::Interpolate : DropoutPolicy::HoldLast;
  cfg.realtime = o.realtime || (realtime_default && !o.fast);
  cfg.speed = o.speed;
  cfg.udp_timeout = o.udp_timeout;
  cfg.sim = o.sim_cfg;
  if (!o.gains.empty()) cfg.sim.feedback_gain = parse_gains(o.gains);
  cfg.sim.rate = o.rate;
  if (!o.listen.empty()) {
    cfg.kind = SourceKind::Udp;
    cfg.location = o.listen;
  } else if (!o.replay.empty() || !o.replay_dir.empty()) {
    cfg.kind = SourceKind::Replay;
    cfg.location = o.replay;
  } else {
    cfg.kind = SourceKind::Sim;
  }
  return cfg;
}

std::string replay_name(const SourceRequest& req) {
  if (req.calibration) return "calibration.csv";
  return std::string(to_string(req.condition.eyes)) + "-" + std::string(to_string(req.condition.surface)) + "-" +
         (req.abf_on ? "abf" : "noabf") + ".csv";
}

SourceFactory make_factory(const Options& o, bool realtime_default) {
  const SourceConfig base = base_source(o, realtime_default);
  if (base.kind == SourceKind::Sim) return sim_source_factory(base);
  if (!o.replay_dir.empty()) {
    return [base, dir = o.replay_dir](const SourceRequest& req) {
      SourceConfig cfg = base;
      cfg.location = (fs::path(dir) / replay_name(req)).string();
      return open_source(cfg);
    };
  }
  return [base](const SourceRequest&) { return open_source(base); };
}

SubjectInfo subject_of(const Options& o) { return {o.subject, parse_group(o.group)}; }

Condition condition_of(const std::string& eyes, const std::string& surface) {
  return {parse_eyes(eyes), parse_surface(surface)};
}

std::unique_ptr<LiveAudioEngine> make_audio(const Options& o) {
  if (o.audio != "pcm") return nullptr;
  auto engine = std::make_unique<LiveAudioEngine>(o.render, std::make_unique<PcmStreamSink>(stdout));
  engine->start();
  return engine;
}

// With PCM on stdout, reports go to stderr.
std::ostream& report_stream(const Options& o) { return o.audio == "pcm" ? std::cerr : std::cout; }

json occupancy_json(const TrialMetrics& m) {
  json j = json::object();
  for (auto label : kAllRegions) j[std::string(to_string(label))] = m.occupancy(label);
  return j;
}

json trial_summary(const TrialRecord& r) {
  return {{"id", r.id},
          {"subject", r.subject_id},
          {"condition", to_string(r.condition)},
          {"abf_on", r.abf_on},
          {"status", to_string(r.status)},
          {"n", r.samples.size()},
          {"gaps", r.gaps},
          {"R", r.metrics.range},
          {"V", r.metrics.variance},
          {"region_occupancy", occupancy_json(r.metrics)},
          {"source", r.source}};
}

json baseline_json(const Baseline& b) {
  return {{"x0", b.x0}, {"y0", b.y0}, {"window", b.window}, {"n_samples", b.n_samples}};
}

std::atomic<bool> g_abort{false};

extern "C" void on_interrupt(int) { g_abort.store(true); }

// ---------------------------------------------------------------------------

int cmd_calibrate(const Options& o, double window) {
  TrialStore store(o.store);
  auto source = make_factory(o, false)({kAllConditions[0], false, true});
  const Baseline b = calibrate_subject(*source, window);
  store.save_baseline(o.subject, b);
  std::cout << json{{"subject", o.subject}, {"baseline", baseline_json(b)}}.dump(2) << '\n';
  return 0;
}

int cmd_trial(const Options& o, const Condition& condition, bool abf_on, double duration) {
  TrialStore store(o.store);
  const auto baseline = store.load_baseline(o.subject);
  if (!baseline) {
    throw Error(Errc::CalibrationMissing, "no baseline for '" + o.subject + "'; run `abf calibrate` first");
  }
  auto audio = make_audio(o);
  TrialOptions opt;
  opt.duration = duration;
  opt.rate = o.rate;
  opt.dropout_policy = base_source(o, false).dropout_policy;
  opt.render = o.render;
  opt.params_sink = abf_on ? audio.get() : nullptr;
  opt.abort = &g_abort;
  std::signal(SIGINT, on_interrupt);

  auto source = make_factory(o, false)({condition, abf_on, false});
  const TrialRecord rec = run_trial(*source, subject_of(o), baseline, condition, abf_on, opt);
  if (audio) audio->stop();
  store.append(rec);
  report_stream(o) << trial_summary(rec).dump(2) << '\n';
  return rec.status == TrialStatus::Complete ? 0 : 3;
}

int cmd_protocol(const Options& o, bool shuffle, std::uint64_t shuffle_seed, bool yes, double window) {
  TrialStore store(o.store);
  auto audio = make_audio(o);
  ProtocolOptions opt;
  opt.trial.rate = o.rate;
  opt.trial.dropout_policy = base_source(o, false).dropout_policy;
  opt.trial.render = o.render;
  opt.trial.params_sink = audio.get();
  opt.trial.abort = &g_abort;
  opt.calibration_window = window;
  opt.shuffle = shuffle;
  opt.shuffle_seed = shuffle_seed;
  opt.store = &store;
  if (!yes) {
    opt.confirm = [](const Condition& c, bool abf_on) {
      std::cerr << "Next: " << to_string(c) << (abf_on ? " with" : " without")
                << " feedback. Press Enter to start, q to pause: " << std::flush;
      std::string line;
      if (!std::getline(std::cin, line)) return false;
      return line.empty() || (line[0] != 'q' && line[0] != 'Q');
    };
  }
  std::signal(SIGINT, on_interrupt);
  const auto result = run_protocol(subject_of(o), make_factory(o, false), opt);
  if (audio) audio->stop();

  json out{{"subject", o.subject}, {"complete", result.complete}, {"baseline", baseline_json(result.baseline)}};
  out["trials"] = json::array();
  for (const auto& r : result.records) out["trials"].push_back(trial_summary(r));
  out["improvements"] = json::object();
  for (const auto& [c, p] : result.improvements) out["improvements"][to_string(c)] = {{"P_R", p.p_range}, {"P_V", p.p_variance}};
  report_stream(o) << out.dump(2) << '\n';
  return result.complete ? 0 : 3;
}

int cmd_report(const Options& o, const std::vector<std::string>& subjects, const std::vector<std::string>& group_names,
               const std::string& format, const std::string& out_path) {
  TrialStore store(o.store);
  PairMap pairs;
  std::set<Group> present;
  for (const auto& id : subjects.empty() ? store.subjects() : subjects) {
    const auto records = store.load(id);
    if (records.empty()) continue;
    const Group g = records.back().group;
    for (const auto& [c, p] : pair_improvements(records)) {
      pairs[{id, g, c}] = p;
      if (g != Group::Unspecified) present.insert(g);
    }
  }
  std::vector<Group> groups;
  if (!group_names.empty()) {
    for (const auto& name : group_names) groups.push_back(parse_group(name));
  } else {
    groups.assign(present.begin(), present.end());
  }
  const auto report = group_report(pairs, groups);
  const std::string text = format == "json" ? report.to_json() + "\n" : report.to_csv();
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream(out_path) << text;
  }
  return 0;
}

std::vector<SwayPoint> to_points(std::span<const RawSample> raw, const Baseline& b) {
  std::vector<SwayPoint> pts;
  pts.reserve(raw.size());
  for (const auto& s : raw) pts.push_back(apply_baseline(s, b));
  return pts;
}

int cmd_render(const Options& o, const std::string& csv, const std::string& trial_id, double x0, double y0,
               const std::string& out, std::string timeline, bool pcm16) {
  std::vector<SwayPoint> pts;
  if (!trial_id.empty()) {
    TrialStore store(o.store);
    for (const auto& r : store.load(o.subject)) {
      if (r.id == trial_id) pts = r.samples;
    }
    if (pts.empty()) throw Error(Errc::InvalidArgument, "trial '" + trial_id + "' not found for " + o.subject);
  } else {
    pts = to_points(read_csv(csv), Baseline{x0, y0, 0.0, 0});
  }
  const auto result = render_trial(pts, o.render);
  write_wav(out, result.audio, o.render.sample_rate, pcm16 ? WavFormat::Pcm16 : WavFormat::Float32);
  if (timeline.empty()) timeline = fs::path(out).replace_extension(".timeline.json").string();
  std::ofstream(timeline) << timeline_to_json(result.timeline) << '\n';
  std::cout << json{{"wav", out},
                    {"timeline", timeline},
                    {"frames", result.audio.frames()},
                    {"seconds", static_cast<double>(result.audio.frames()) / o.render.sample_rate},
                    {"segments", result.timeline.size()}}
                   .dump(2)
            << '\n';
  return 0;
}

int cmd_analyze(const std::vector<std::string>& files, double x0, double y0) {
  json out = json::array();
  int mismatches = 0;
  for (const auto& file : files) {
    if (fs::path(file).extension() == ".jsonl") {
      for (const auto& r : load_jsonl(file)) {
        const auto recomputed = trial_metrics(r.samples);
        const bool match = recomputed == r.metrics;
        mismatches += match ? 0 : 1;
        auto j = trial_summary(r);
        j["file"] = file;
        j["metrics_match"] = match;
        out.push_back(std::move(j));
      }
    } else {
      const auto pts = to_points(read_csv(file), Baseline{x0, y0, 0.0, 0});
      const auto m = trial_metrics(pts);
      out.push_back({{"file", file}, {"n", m.n}, {"R", m.range}, {"V", m.variance}, {"region_occupancy", occupancy_json(m)}});
    }
  }
  std::cout << out.dump(2) << '\n';
  return mismatches == 0 ? 0 : 4;
}

#ifdef ABF_WITH_GATEWAY
int cmd_serve(const Options& o, const std::string& http, double window, bool persist) {
  if (o.headless) throw Error(Errc::InvalidArgument, "serve exposes the gateway; drop --headless");
  const auto [host, port] = parse_bind_address(http);

  // Block termination signals before any thread starts so sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto audio = make_audio(o);
  ControllerConfig cfg;
  cfg.subject = subject_of(o);
  cfg.factory = make_factory(o, true);
  cfg.trial.rate = o.rate;
  cfg.trial.dropout_policy = base_source(o, true).dropout_policy;
  cfg.trial.render = o.render;
  cfg.calibration_window = window;
  if (persist) cfg.store_dir = o.store;
  SessionController controller(cfg, audio.get());
  Gateway gateway(controller, host, port);
  gateway.start();
  std::cerr << "abf gateway listening on http://" << host << ':' << gateway.port() << " ("
            << base_source(o, true).summary() << ")\n";

  int sig = 0;
  sigwait(&signals, &sig);
  std::cerr << "shutting down\n";
  controller.stop_trial();
  gateway.stop();
  controller.wait_idle();
  if (audio) audio->stop();
  return 0;
}
#endif

}  // namespace
}  // namespace abf

int main(int argc, char** argv) {
  using namespace abf;
  CLI::App app{"Audio-biofeedback balance engine: calibration, trials, reports, rendering and gateway"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML file; [sim], [source], [render], [subject] sections map to prefixed options");
  app.config_formatter(std::make_shared<SectionedConfig>());

  Options o;
  auto* src = app.add_option_group("Source");
  auto* replay = src->add_option("--replay,--source-replay", o.replay, "Replay a t_s,pitch_deg,roll_deg CSV");
  auto* replay_dir = src->add_option("--replay-dir,--source-replay-dir", o.replay_dir,
                                     "Protocol replay directory (calibration.csv, <eyes>-<surface>-<abf|noabf>.csv)");
  auto* listen = src->add_option("--listen,--source-listen", o.listen, "Receive UDP datagrams on host:port");
  auto* sim = src->add_flag("--sim", o.sim, "Virtual subject (default)");
  replay->excludes(listen)->excludes(sim)->excludes(replay_dir);
  replay_dir->excludes(listen)->excludes(sim);
  listen->excludes(sim);
  src->add_option("--rate,--source-rate", o.rate, "Regularized sample rate, Hz")->capture_default_str();
  src->add_option("--policy,--source-policy", o.policy, "Dropout fill policy")
      ->check(CLI::IsMember({"hold", "interpolate"}))
      ->capture_default_str();
  auto* rt = src->add_flag("--realtime", o.realtime, "Pace replay / sim against the wall clock");
  src->add_flag("--fast", o.fast, "Run replay / sim as fast as possible")->excludes(rt);
  src->add_option("--speed,--source-speed", o.speed, "Wall-clock speed-up when pacing")->capture_default_str();
  src->add_option("--udp-timeout,--source-udp-timeout", o.udp_timeout, "Seconds of UDP silence that end a stream")
      ->capture_default_str();

  auto* simg = app.add_option_group("Virtual subject");
  simg->add_option("--seed,--sim-seed", o.sim_cfg.seed)->capture_default_str();
  simg->add_option("--gains,--sim-gains", o.gains, "Noise reduction per warning level: low,medium,high (default 0.3,0.5,0.7)");
  simg->add_option("--sigma,--sim-sigma", o.sim_cfg.sigma, "deg/sqrt(s)")->capture_default_str();
  simg->add_option("--tau,--sim-tau", o.sim_cfg.tau, "Mean-reversion time, s")->capture_default_str();
  simg->add_option("--drift,--sim-drift", o.sim_cfg.drift, "deg/s")->capture_default_str();
  simg->add_option("--reaction-delay,--sim-reaction-delay", o.sim_cfg.reaction_delay, "s")->capture_default_str();
  simg->add_option("--eyes-closed-mult,--sim-eyes-closed-multiplier", o.sim_cfg.eyes_closed_multiplier)
      ->capture_default_str();
  simg->add_option("--foam-mult,--sim-foam-multiplier", o.sim_cfg.foam_multiplier)->capture_default_str();

  auto* subj = app.add_option_group("Subject");
  subj->add_option("--subject,--subject-id", o.subject)->capture_default_str();
  subj->add_option("--group,--subject-group", o.group)
      ->check(CLI::IsMember({"older", "younger", "unspecified"}))
      ->capture_default_str();
  subj->add_option("--store,--subject-store", o.store, "Trial store directory")->capture_default_str();

  auto* rnd = app.add_option_group("Render");
  rnd->add_option("--sample-rate,--render-sample-rate", o.render.sample_rate)->capture_default_str();
  rnd->add_option("--block-size,--render-block-size", o.render.block_size)->capture_default_str();
  rnd->add_option("--volume,--render-reference-volume", o.render.reference_volume, "Reference volume in (0, 1]")
      ->capture_default_str();
  rnd->add_option("--crossfade,--render-crossfade", o.render.crossfade, "Region crossfade, s")->capture_default_str();
  rnd->add_option("--smoothing,--render-param-smoothing", o.render.param_smoothing, "Parameter ramp, s")
      ->capture_default_str();
  rnd->add_option("--render-seed,--render-rng-seed", o.render.rng_seed)->capture_default_str();
  rnd->add_option("--audio,--render-audio", o.audio, "Live output: none, or pcm (s16le stereo on stdout)")
      ->check(CLI::IsMember({"none", "pcm"}))
      ->capture_default_str();
  app.add_flag("--headless", o.headless, "Never start the network gateway");

  double window = kDefaultCalibrationWindow;

  auto* calibrate = app.add_subcommand("calibrate", "Average a quiet-stance window into the subject baseline");
  calibrate->add_option("--window", window, "Seconds")->capture_default_str();

  std::string eyes = "open", surface = "floor", abf = "on";
  double duration = kTrialDuration;
  auto* trial = app.add_subcommand("trial", "Run one trial and append it to the store");
  trial->add_option("--eyes", eyes)->check(CLI::IsMember({"open", "closed"}))->capture_default_str();
  trial->add_option("--surface", surface)->check(CLI::IsMember({"floor", "foam"}))->capture_default_str();
  trial->add_option("--abf", abf, "Audio feedback")->check(CLI::IsMember({"on", "off"}))->capture_default_str();
  trial->add_option("--duration", duration, "Seconds")->capture_default_str();

  bool shuffle = false, yes = false;
  std::uint64_t shuffle_seed = 0;
  auto* protocol = app.add_subcommand("protocol", "Run or resume the eight-trial protocol");
  protocol->add_flag("--shuffle", shuffle, "Seeded random trial order");
  protocol->add_option("--shuffle-seed", shuffle_seed)->capture_default_str();
  protocol->add_flag("--yes,-y", yes, "Do not wait for operator confirmation");
  protocol->add_option("--window", window, "Calibration seconds")->capture_default_str();

  std::vector<std::string> subjects, groups;
  std::string format = "csv", out_path;
  auto* report = app.add_subcommand("report", "Median P_R / P_V per condition and group");
  report->add_option("--subjects", subjects, "Subject ids (default: all in store)")->delimiter(',');
  report->add_option("--groups", groups, "Group columns (default: groups present)")->delimiter(',');
  report->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  report->add_option("--out", out_path, "Write to file instead of stdout");

  std::string csv, trial_id, wav_out, timeline;
  double x0 = 0.0, y0 = 0.0;
  bool pcm16 = false;
  auto* render = app.add_subcommand("render", "Offline render of a sway series to WAV plus a JSON params timeline");
  auto* in_csv = render->add_option("--csv", csv, "Raw sample CSV")->check(CLI::ExistingFile);
  auto* in_trial = render->add_option("--trial", trial_id, "Trial id from the store (with --subject)");
  in_csv->excludes(in_trial);
  render->add_option("--x0", x0, "Baseline pitch for --csv")->capture_default_str();
  render->add_option("--y0", y0, "Baseline roll for --csv")->capture_default_str();
  render->add_option("--out,-o", wav_out, "WAV path")->required();
  render->add_option("--timeline", timeline, "Timeline JSON path (default <out>.timeline.json)");
  render->add_flag("--pcm16", pcm16, "16-bit PCM instead of 32-bit float");

  std::vector<std::string> files;
  auto* analyze = app.add_subcommand("analyze", "Recompute metrics from CSV samples or stored .jsonl trials");
  analyze->add_option("files", files)->required()->check(CLI::ExistingFile);
  analyze->add_option("--x0", x0, "Baseline pitch for CSV input")->capture_default_str();
  analyze->add_option("--y0", y0, "Baseline roll for CSV input")->capture_default_str();

#ifdef ABF_WITH_GATEWAY
  std::string http = "127.0.0.1:8787";
  bool persist = false;
  auto* serve = app.add_subcommand("serve", "Run the engine behind the HTTP/WebSocket gateway");
  serve->add_option("--http", http, "Bind address host:port")->capture_default_str();
  serve->add_option("--window", window, "Calibration seconds")->capture_default_str();
  serve->add_flag("--persist", persist, "Append finished trials to --store");
#endif

  CLI11_PARSE(app, argc, argv);

  try {
    validate(o.render);
    if (*calibrate) return cmd_calibrate(o, window);
    if (*trial) return cmd_trial(o, condition_of(eyes, surface), abf == "on", duration);
    if (*protocol) return cmd_protocol(o, shuffle, shuffle_seed, yes, window);
    if (*report) return cmd_report(o, subjects, groups, format, out_path);
    if (*render) {
      if (csv.empty() && trial_id.empty()) throw Error(Errc::InvalidArgument, "render needs --csv or --trial");
      return cmd_render(o, csv, trial_id, x0, y0, wav_out, timeline, pcm16);
    }
    if (*analyze) return cmd_analyze(files, x0, y0);
#ifdef ABF_WITH_GATEWAY
    if (*serve) return cmd_serve(o, http, window, persist);
#endif
  } catch (const Error& e) {
    std::cerr << "abf: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "abf: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
