#include "abf/live_audio.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace abf {

void PcmStreamSink::write(std::span<const float> interleaved) {
  scratch_.resize(interleaved.size());
  std::transform(interleaved.begin(), interleaved.end(), scratch_.begin(), [](float s) {
    return static_cast<std::int16_t>(std::lround(std::clamp(s, -1.0f, 1.0f) * 32767.0f));
  });
  std::fwrite(scratch_.data(), sizeof(std::int16_t), scratch_.size(), out_);
  std::fflush(out_);
}

LiveAudioEngine::LiveAudioEngine(const RenderConfig& cfg, std::unique_ptr<AudioSink> sink)
    : cfg_(cfg), sink_(std::move(sink)), reference_volume_(cfg.reference_volume) {
  validate(cfg_);
}

LiveAudioEngine::~LiveAudioEngine() { stop(); }

void LiveAudioEngine::start() {
  if (thread_.joinable()) return;
  thread_ = std::jthread([this](std::stop_token st) { run(st); });
}

void LiveAudioEngine::stop() {
  if (!thread_.joinable()) return;
  thread_.request_stop();
  thread_.join();
}

void LiveAudioEngine::push(double /*t*/, const SynthParams& params) {
  silence_requested_.store(false, std::memory_order_release);
  if (!ring_.push(params)) dropped_.fetch_add(1, std::memory_order_relaxed);
}

void LiveAudioEngine::run(std::stop_token stop) {
  using clock = std::chrono::steady_clock;
  RenderConfig cfg = cfg_;
  auto synth = std::make_unique<Synth>(cfg);
  std::vector<float> left(cfg.block_size), right(cfg.block_size), interleaved(2 * cfg.block_size);
  const auto block_duration = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(cfg.block_latency()));
  auto deadline = clock::now();

  while (!stop.stop_requested()) {
    if (silence_requested_.exchange(false, std::memory_order_acq_rel)) {
      synth = std::make_unique<Synth>(cfg);
    }
    if (const double wanted = reference_volume_.load(std::memory_order_acquire); wanted != cfg.reference_volume) {
      cfg.reference_volume = wanted;
      synth->set_reference_volume(wanted);
    }
    if (auto p = ring_.pop_latest()) synth->set_params(*p);

    if (synth->has_params()) {
      synth->render(left, right);
    } else {
      std::fill(left.begin(), left.end(), 0.0f);
      std::fill(right.begin(), right.end(), 0.0f);
    }
    for (std::size_t i = 0; i < cfg.block_size; ++i) {
      interleaved[2 * i] = left[i];
      interleaved[2 * i + 1] = right[i];
    }
    sink_->write(interleaved);
    blocks_.fetch_add(1, std::memory_order_relaxed);

    if (!sink_->paces_itself()) {
      deadline += block_duration;
      std::this_thread::sleep_until(deadline);
    }
  }
}

}  // namespace abf
