#pragma once

// Sample sources (CSV replay, UDP datagrams, virtual subject) and fixed-rate
// regularization.

#include <array>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "abf/pendulum.hpp"
#include "abf/sway.hpp"

namespace abf {

enum class SourceKind : std::uint8_t { Replay, Udp, Sim };
enum class DropoutPolicy : std::uint8_t { HoldLast, Interpolate };

std::string_view to_string(SourceKind k) noexcept;
std::string_view to_string(DropoutPolicy p) noexcept;

struct SourceConfig {
  SourceKind kind = SourceKind::Sim;
  std::string location;  // CSV path, or "host:port" / "port" for UDP
  double sample_rate = 50.0;
  DropoutPolicy dropout_policy = DropoutPolicy::HoldLast;
  bool realtime = false;  // pace replay / sim against the wall clock
  double speed = 1.0;     // wall-clock speed-up when realtime
  bool reclock = false;   // replay: replace timestamps with index / rate
  double udp_timeout = 2.0;  // seconds of silence before a UDP source ends

  // Sim-only
  SimConfig sim;
  Condition condition;
  bool feedback = false;
  double duration = 60.0;

  std::string summary() const;
};

/// Throws InvalidArgument for a rate outside [4, 1000] Hz and
/// SourceUnavailable for a missing replay file.
void validate(const SourceConfig& cfg);

struct SourceStats {
  std::size_t delivered = 0;
  std::size_t malformed = 0;
  std::size_t out_of_order = 0;
  std::size_t dropped = 0;  // queue overflow
};

/// Pull-based sample stream. next() returns nullopt when the stream ends.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::optional<RawSample> next() = 0;
  /// Live classifier output for the most recently delivered sample.
  virtual void feedback(Warning) {}
  virtual SourceStats stats() const = 0;
  virtual std::string describe() const = 0;
};

/// Replays `t_s,pitch_deg,roll_deg` CSV. The whole file is parsed on open;
/// a bad row throws MalformedRecord naming its line.
class CsvReplaySource final : public SampleSource {
 public:
  explicit CsvReplaySource(const SourceConfig& cfg);
  std::optional<RawSample> next() override;
  SourceStats stats() const override { return stats_; }
  std::string describe() const override;
  std::size_t size() const noexcept { return samples_.size(); }

 private:
  SourceConfig cfg_;
  std::vector<RawSample> samples_;
  std::size_t pos_ = 0;
  SourceStats stats_;
  std::chrono::steady_clock::time_point start_;
};

std::vector<RawSample> parse_csv(std::istream& in, const std::string& origin = "<stream>");
std::vector<RawSample> read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, std::span<const RawSample> samples);

// UDP wire format: little-endian u32 sequence, u64 timestamp_micros,
// f32 pitch_deg, f32 roll_deg.
inline constexpr std::size_t kDatagramSize = 20;

struct Datagram {
  std::uint32_t sequence = 0;
  std::uint64_t timestamp_micros = 0;
  float pitch_deg = 0.0f;
  float roll_deg = 0.0f;

  friend bool operator==(const Datagram&, const Datagram&) = default;
};

std::array<std::uint8_t, kDatagramSize> encode_datagram(const Datagram& d) noexcept;
/// nullopt on wrong size or non-finite / out-of-range angles.
std::optional<Datagram> decode_datagram(std::span<const std::uint8_t> bytes) noexcept;

class UdpSource final : public SampleSource {
 public:
  /// Binds immediately; throws SourceUnavailable on failure.
  explicit UdpSource(const SourceConfig& cfg);
  ~UdpSource() override;
  UdpSource(const UdpSource&) = delete;
  UdpSource& operator=(const UdpSource&) = delete;

  std::optional<RawSample> next() override;
  SourceStats stats() const override { return stats_; }
  std::string describe() const override;
  std::uint16_t port() const noexcept { return port_; }

 private:
  SourceConfig cfg_;
  int fd_ = -1;
  std::uint16_t port_ = 0;
  std::optional<std::uint32_t> last_sequence_;
  std::optional<std::uint64_t> first_timestamp_;
  SourceStats stats_;
};

/// Virtual subject source. With cfg.feedback the session's classifier
/// output is fed back through feedback().
class SimSource final : public SampleSource {
 public:
  explicit SimSource(const SourceConfig& cfg);
  std::optional<RawSample> next() override;
  void feedback(Warning w) override { subject_.observe(w); }
  SourceStats stats() const override { return stats_; }
  std::string describe() const override;

 private:
  SourceConfig cfg_;
  VirtualSubject subject_;
  std::size_t remaining_;
  SourceStats stats_;
  std::chrono::steady_clock::time_point start_;
};

std::unique_ptr<SampleSource> open_source(const SourceConfig& cfg);

/// Thread-safe bounded FIFO; push() drops the oldest element when full.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(T value) {
    {
      std::lock_guard lock(mutex_);
      if (items_.size() >= capacity_) {
        items_.pop_front();
        ++dropped_;
      }
      items_.push_back(std::move(value));
    }
    cv_.notify_one();
  }

  /// Blocks until an item is available or the queue is closed and empty.
  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    return v;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  std::size_t dropped() const {
    std::lock_guard lock(mutex_);
    return dropped_;
  }
  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<T> items_;
  std::size_t dropped_ = 0;
  bool closed_ = false;
};

/// Runs another source on its own thread, publishing into a BoundedQueue
/// holding one second of samples. Feedback is not forwarded.
class ThreadedSource final : public SampleSource {
 public:
  ThreadedSource(std::unique_ptr<SampleSource> inner, double sample_rate);
  ~ThreadedSource() override;

  std::optional<RawSample> next() override { return queue_.pop(); }
  SourceStats stats() const override;
  std::string describe() const override;

 private:
  std::unique_ptr<SampleSource> inner_;
  BoundedQueue<RawSample> queue_;
  mutable std::mutex stats_mutex_;
  SourceStats inner_stats_;
  std::jthread thread_;
};

// ---------------------------------------------------------------------------
// Regularization

/// Resamples a non-decreasing stream onto t0 + k / rate. A grid point with an
/// input sample within half a period takes that sample (its own timestamp if
/// it lies within 1 ns of the grid); otherwise it is a gap and is filled by
/// the policy. Streaming: outputs are emitted once determinable.
class Regularizer {
 public:
  Regularizer(double rate, DropoutPolicy policy);

  void push(const RawSample& s, std::vector<RawSample>& out);
  void finish(std::vector<RawSample>& out);

  std::size_t gaps() const noexcept { return gaps_; }
  std::size_t emitted() const noexcept { return index_; }

 private:
  double grid_time(std::size_t k) const noexcept;
  RawSample resolve(double g, bool final_pass);
  void prune(double g);

  double rate_;
  double half_;
  DropoutPolicy policy_;
  std::optional<double> t0_;
  std::size_t index_ = 0;
  std::size_t gaps_ = 0;
  std::deque<RawSample> window_;
};

struct RegularizeResult {
  std::vector<RawSample> samples;
  std::size_t gaps = 0;
};

RegularizeResult regularize(std::span<const RawSample> input, double rate, DropoutPolicy policy);

}  // namespace abf
