#pragma once

// Real-time playback path. A control thread publishes SynthParams through a
// lock-free ring; the render thread owns the Synth and never waits on the
// control side.

#include <atomic>
#include <cstdio>
#include <memory>
#include <span>
#include <thread>
#include <vector>

#include "abf/spsc_ring.hpp"
#include "abf/synth.hpp"

namespace abf {

/// Receives the parameter stream produced by the session loop.
class ParamsSink {
 public:
  virtual ~ParamsSink() = default;
  virtual void push(double t, const SynthParams& params) = 0;
};

/// Records every distinct parameter set (offline / tests).
class TimelineRecorder final : public ParamsSink {
 public:
  void push(double t, const SynthParams& params) override {
    if (timeline_.empty() || !(timeline_.back().params == params)) timeline_.push_back({t, params});
    ++pushes_;
  }
  const std::vector<TimelineEntry>& timeline() const noexcept { return timeline_; }
  std::size_t pushes() const noexcept { return pushes_; }

 private:
  std::vector<TimelineEntry> timeline_;
  std::size_t pushes_ = 0;
};

/// Destination for rendered interleaved stereo float blocks.
class AudioSink {
 public:
  virtual ~AudioSink() = default;
  virtual void write(std::span<const float> interleaved) = 0;
  /// True if write() itself blocks at the device rate; otherwise the engine
  /// paces blocks against the wall clock.
  virtual bool paces_itself() const noexcept { return false; }
};

/// Writes signed 16-bit little-endian interleaved PCM to a stdio stream,
/// e.g. stdout piped into `aplay -f S16_LE -c 2 -r 48000`.
class PcmStreamSink final : public AudioSink {
 public:
  explicit PcmStreamSink(std::FILE* out) : out_(out) {}
  void write(std::span<const float> interleaved) override;

 private:
  std::FILE* out_;
  std::vector<std::int16_t> scratch_;
};

/// Discards audio; counts frames.
class NullSink final : public AudioSink {
 public:
  void write(std::span<const float> interleaved) override { frames_ += interleaved.size() / 2; }
  std::size_t frames() const noexcept { return frames_; }

 private:
  std::atomic<std::size_t> frames_{0};
};

class LiveAudioEngine final : public ParamsSink {
 public:
  LiveAudioEngine(const RenderConfig& cfg, std::unique_ptr<AudioSink> sink);
  ~LiveAudioEngine() override;

  LiveAudioEngine(const LiveAudioEngine&) = delete;
  LiveAudioEngine& operator=(const LiveAudioEngine&) = delete;

  void start();
  void stop();

  /// Non-blocking; drops the update if the ring is full.
  void push(double t, const SynthParams& params) override;
  /// Return to silence (control arm, trial end).
  void silence() noexcept { silence_requested_.store(true, std::memory_order_release); }
  void set_reference_volume(double v) noexcept { reference_volume_.store(v, std::memory_order_release); }

  std::size_t dropped_updates() const noexcept { return dropped_.load(std::memory_order_relaxed); }
  std::size_t blocks_rendered() const noexcept { return blocks_.load(std::memory_order_relaxed); }

 private:
  void run(std::stop_token stop);

  RenderConfig cfg_;
  std::unique_ptr<AudioSink> sink_;
  SpscRing<SynthParams, 64> ring_;
  std::atomic<bool> silence_requested_{false};
  std::atomic<double> reference_volume_;
  std::atomic<std::size_t> dropped_{0};
  std::atomic<std::size_t> blocks_{0};
  std::jthread thread_;
};

}  // namespace abf
