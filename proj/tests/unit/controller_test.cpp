#include <gtest/gtest.h>

#include <thread>

#include "abf/controller.hpp"
#include "abf/error.hpp"

namespace abf {
namespace {

constexpr Condition kOpenFloor{Eyes::Open, Surface::Floor};

ControllerConfig sim_config(bool realtime = false, double speed = 1.0) {
  SourceConfig base;
  base.kind = SourceKind::Sim;
  base.realtime = realtime;
  base.speed = speed;
  ControllerConfig cfg;
  cfg.subject = {"c01", Group::Older};
  cfg.factory = sim_source_factory(base);
  return cfg;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::Io;
}

TEST(Controller, VolumeEcho) {
  SessionController c(sim_config());
  c.set_volume(0.5);
  EXPECT_EQ(c.volume(), 0.5);
  EXPECT_EQ(c.state_json()["reference_volume"], 0.5);
  EXPECT_EQ(code_of([&] { c.set_volume(0.0); }), Errc::InvalidArgument);
  EXPECT_EQ(code_of([&] { c.set_volume(1.5); }), Errc::InvalidArgument);
  EXPECT_EQ(c.volume(), 0.5);
}

TEST(Controller, TrialNeedsCalibration) {
  SessionController c(sim_config());
  EXPECT_EQ(code_of([&] { c.start_trial(kOpenFloor, true); }), Errc::CalibrationMissing);
  EXPECT_EQ(c.state(), EngineState::Idle);
}

TEST(Controller, CalibrateThenTrial) {
  SessionController c(sim_config());
  c.calibrate();
  c.wait_idle();
  EXPECT_EQ(c.state(), EngineState::Ready);
  ASSERT_TRUE(c.baseline());
  EXPECT_EQ(c.baseline()->n_samples, 250u);

  c.set_volume(0.25);
  c.start_trial(kOpenFloor, false);
  c.wait_idle();
  ASSERT_EQ(c.trials().size(), 1u);
  const auto rec = c.trials()[0];
  EXPECT_EQ(rec.samples.size(), 3000u);
  EXPECT_EQ(rec.reference_volume, 0.25);
  EXPECT_EQ(rec.baseline, *c.baseline());
  EXPECT_TRUE(c.find_trial(rec.id));
  EXPECT_FALSE(c.find_trial("nope"));
  EXPECT_EQ(c.state_json()["trials"], 1);
}

TEST(Controller, StopIsIdempotent) {
  SessionController c(sim_config(true, 5.0));
  EXPECT_FALSE(c.stop_trial());
  EXPECT_EQ(c.state(), EngineState::Idle);
  c.calibrate();
  c.wait_idle();
  c.start_trial(kOpenFloor, true);
  EXPECT_EQ(c.state(), EngineState::Running);
  EXPECT_EQ(code_of([&] { c.start_trial(kOpenFloor, false); }), Errc::StateConflict);
  EXPECT_EQ(code_of([&] { c.calibrate(); }), Errc::StateConflict);
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  EXPECT_TRUE(c.stop_trial());
  c.wait_idle();
  EXPECT_EQ(c.state(), EngineState::Ready);
  EXPECT_FALSE(c.stop_trial());
  EXPECT_FALSE(c.stop_trial());
  EXPECT_EQ(c.state(), EngineState::Ready);
  ASSERT_EQ(c.trials().size(), 1u);
  EXPECT_EQ(c.trials()[0].status, TrialStatus::Aborted);
}

TEST(Controller, TelemetryClockContinuesAcrossTrials) {
  SessionController c(sim_config());
  auto sub = c.telemetry().subscribe(10000);
  c.calibrate();
  c.wait_idle();
  c.start_trial(kOpenFloor, false);
  c.wait_idle();
  c.start_trial(kOpenFloor, true);
  c.wait_idle();
  std::size_t n = 0;
  double last = -1.0;
  std::size_t with_params = 0;
  while (auto f = sub->pop(std::chrono::milliseconds(50))) {
    ASSERT_GT(f->t, last);
    last = f->t;
    with_params += f->params.has_value();
    ++n;
  }
  EXPECT_EQ(n, 6000u);
  EXPECT_EQ(with_params, 3000u);
  EXPECT_EQ(sub->skipped(), 0u);
}

TEST(Controller, ReportNeedsPairs) {
  SessionController c(sim_config());
  EXPECT_EQ(code_of([&] { c.report(); }), Errc::MissingCondition);
}

TEST(Telemetry, SlowConsumerSkipsOldest) {
  TelemetryHub hub;
  auto slow = hub.subscribe(3);
  auto fast = hub.subscribe(100);
  for (int i = 0; i < 10; ++i) {
    TelemetryFrame f;
    f.t = i;
    hub.publish(f);
  }
  EXPECT_EQ(slow->skipped(), 7u);
  EXPECT_EQ(slow->pop(std::chrono::milliseconds(1))->t, 7.0);
  EXPECT_EQ(fast->skipped(), 0u);
  EXPECT_EQ(hub.subscribers(), 2u);
  slow.reset();
  hub.publish({});
  EXPECT_EQ(hub.subscribers(), 1u);
  hub.close_all();
  EXPECT_TRUE(fast->closed());
}

TEST(Telemetry, FrameJson) {
  TelemetryFrame f;
  f.t = 1.5;
  f.x = 3;
  f.y = 0;
  f.region = make_region(RegionLabel::F);
  f.params = map_params({0, 3, 0});
  f.trial_state = "running";
  const auto j = to_json(f);
  EXPECT_EQ(j["region"], "F");
  EXPECT_EQ(j["t"], 1.5);
  EXPECT_TRUE(j["params"].is_object());
  EXPECT_EQ(j["trial_state"], "running");
}

}  // namespace
}  // namespace abf
