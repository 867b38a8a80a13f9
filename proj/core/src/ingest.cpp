#include "abf/ingest.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "abf/error.hpp"

namespace abf {

std::string_view to_string(SourceKind k) noexcept {
  switch (k) {
    case SourceKind::Replay: return "replay";
    case SourceKind::Udp: return "udp";
    case SourceKind::Sim: return "sim";
  }
  return "?";
}

std::string_view to_string(DropoutPolicy p) noexcept {
  return p == DropoutPolicy::HoldLast ? "hold-last" : "interpolate";
}

std::string SourceConfig::summary() const {
  std::ostringstream out;
  out << to_string(kind);
  if (kind == SourceKind::Sim) {
    out << " seed=" << sim.seed << " sigma=" << sim.sigma << " tau=" << sim.tau << " gains=" << sim.feedback_gain[0]
        << ',' << sim.feedback_gain[1] << ',' << sim.feedback_gain[2] << " feedback=" << (feedback ? "on" : "off");
  } else {
    out << ' ' << location;
  }
  out << " rate=" << sample_rate << " policy=" << to_string(dropout_policy);
  return out.str();
}

void validate(const SourceConfig& cfg) {
  if (!(cfg.sample_rate >= 4.0 && cfg.sample_rate <= 1000.0)) {
    throw Error(Errc::InvalidArgument, "sample_rate must be within [4, 1000] Hz");
  }
  if (cfg.realtime && !(cfg.speed > 0.0)) throw Error(Errc::InvalidArgument, "speed must be positive");
  if (cfg.kind == SourceKind::Replay && !std::filesystem::is_regular_file(cfg.location)) {
    throw Error(Errc::SourceUnavailable, "replay file '" + cfg.location + "' does not exist");
  }
  if (cfg.kind == SourceKind::Sim) validate(cfg.sim);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr std::string_view kCsvHeader = "t_s,pitch_deg,roll_deg";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size() && !s.empty();
}

[[noreturn]] void malformed(const std::string& origin, std::size_t line, const std::string& why) {
  throw Error(Errc::MalformedRecord, origin + ":" + std::to_string(line) + ": " + why);
}

}  // namespace

std::vector<RawSample> parse_csv(std::istream& in, const std::string& origin) {
  std::vector<RawSample> out;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    if (!header_seen) {
      if (row != kCsvHeader) malformed(origin, line_no, "expected header '" + std::string(kCsvHeader) + "'");
      header_seen = true;
      continue;
    }
    std::array<double, 3> v{};
    std::string_view rest = row;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto comma = rest.find(',');
      if ((i < 2) == (comma == std::string_view::npos)) malformed(origin, line_no, "expected 3 fields");
      if (!parse_double(rest.substr(0, comma), v[i])) malformed(origin, line_no, "not a number");
      if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
    }
    const RawSample s{v[0], v[1], v[2]};
    if (!is_valid(s)) malformed(origin, line_no, "sample out of range");
    if (!out.empty() && s.t < out.back().t) malformed(origin, line_no, "timestamp decreases");
    out.push_back(s);
  }
  if (!header_seen) malformed(origin, line_no, "missing header");
  return out;
}

std::vector<RawSample> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::SourceUnavailable, "cannot open " + path.string());
  return parse_csv(in, path.string());
}

void write_csv(const std::filesystem::path& path, std::span<const RawSample> samples) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
  out.precision(17);
  out << kCsvHeader << '\n';
  for (const auto& s : samples) out << s.t << ',' << s.pitch << ',' << s.roll << '\n';
}

CsvReplaySource::CsvReplaySource(const SourceConfig& cfg) : cfg_(cfg) {
  validate(cfg_);
  samples_ = read_csv(cfg_.location);
  if (cfg_.reclock) {
    for (std::size_t i = 0; i < samples_.size(); ++i) samples_[i].t = static_cast<double>(i) / cfg_.sample_rate;
  }
}

std::optional<RawSample> CsvReplaySource::next() {
  if (pos_ >= samples_.size()) return std::nullopt;
  if (pos_ == 0) start_ = std::chrono::steady_clock::now();
  const RawSample s = samples_[pos_++];
  if (cfg_.realtime) {
    const auto offset = std::chrono::duration<double>((s.t - samples_.front().t) / cfg_.speed);
    std::this_thread::sleep_until(start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(offset));
  }
  ++stats_.delivered;
  return s;
}

std::string CsvReplaySource::describe() const { return cfg_.summary(); }

// ---------------------------------------------------------------------------
// UDP

static_assert(std::endian::native == std::endian::little, "datagram codec assumes a little-endian host");

std::array<std::uint8_t, kDatagramSize> encode_datagram(const Datagram& d) noexcept {
  std::array<std::uint8_t, kDatagramSize> out{};
  std::memcpy(out.data(), &d.sequence, 4);
  std::memcpy(out.data() + 4, &d.timestamp_micros, 8);
  std::memcpy(out.data() + 12, &d.pitch_deg, 4);
  std::memcpy(out.data() + 16, &d.roll_deg, 4);
  return out;
}

std::optional<Datagram> decode_datagram(std::span<const std::uint8_t> bytes) noexcept {
  if (bytes.size() != kDatagramSize) return std::nullopt;
  Datagram d;
  std::memcpy(&d.sequence, bytes.data(), 4);
  std::memcpy(&d.timestamp_micros, bytes.data() + 4, 8);
  std::memcpy(&d.pitch_deg, bytes.data() + 12, 4);
  std::memcpy(&d.roll_deg, bytes.data() + 16, 4);
  if (!std::isfinite(d.pitch_deg) || !std::isfinite(d.roll_deg) || std::abs(d.pitch_deg) > kMaxTiltDeg ||
      std::abs(d.roll_deg) > kMaxTiltDeg) {
    return std::nullopt;
  }
  return d;
}

UdpSource::UdpSource(const SourceConfig& cfg) : cfg_(cfg) {
  validate(cfg_);
  std::string host = "0.0.0.0";
  std::string port_text = cfg_.location;
  if (const auto colon = cfg_.location.rfind(':'); colon != std::string::npos) {
    host = cfg_.location.substr(0, colon);
    port_text = cfg_.location.substr(colon + 1);
  }
  unsigned port = 0;
  const auto res = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (res.ec != std::errc{} || port > 65535) {
    throw Error(Errc::SourceUnavailable, "bad UDP address '" + cfg_.location + "'");
  }

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw Error(Errc::SourceUnavailable, "bad UDP host '" + host + "'");
  }
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw Error(Errc::SourceUnavailable, std::string("socket: ") + std::strerror(errno));
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd_);
    throw Error(Errc::SourceUnavailable, "bind " + cfg_.location + ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

UdpSource::~UdpSource() {
  if (fd_ >= 0) ::close(fd_);
}

std::optional<RawSample> UdpSource::next() {
  std::array<std::uint8_t, 512> buf{};
  const int timeout_ms = static_cast<int>(cfg_.udp_timeout * 1000.0);
  while (true) {
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, timeout_ms);
    if (ready == 0) return std::nullopt;
    if (ready < 0) {
      if (errno == EINTR) continue;
      return std::nullopt;
    }
    const auto n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      return std::nullopt;
    }
    const auto d = decode_datagram(std::span(buf.data(), static_cast<std::size_t>(n)));
    if (!d) {
      ++stats_.malformed;
      continue;
    }
    if ((last_sequence_ && d->sequence <= *last_sequence_) ||
        (first_timestamp_ && d->timestamp_micros < *first_timestamp_)) {
      ++stats_.out_of_order;
      continue;
    }
    last_sequence_ = d->sequence;
    if (!first_timestamp_) first_timestamp_ = d->timestamp_micros;
    ++stats_.delivered;
    return RawSample{static_cast<double>(d->timestamp_micros - *first_timestamp_) * 1e-6, d->pitch_deg,
                     d->roll_deg};
  }
}

std::string UdpSource::describe() const {
  const auto colon = cfg_.location.rfind(':');
  const std::string host = colon == std::string::npos ? "0.0.0.0" : cfg_.location.substr(0, colon);
  return "udp " + host + ":" + std::to_string(port_);
}

// ---------------------------------------------------------------------------
// Sim

SimSource::SimSource(const SourceConfig& cfg)
    : cfg_(cfg),
      subject_((validate(cfg), cfg.sim), cfg.condition, cfg.feedback),
      remaining_(static_cast<std::size_t>(std::llround(cfg.duration * cfg.sim.rate))) {}

std::optional<RawSample> SimSource::next() {
  if (remaining_ == 0) return std::nullopt;
  if (stats_.delivered == 0) start_ = std::chrono::steady_clock::now();
  --remaining_;
  const RawSample s = subject_.next();
  if (cfg_.realtime) {
    const auto offset = std::chrono::duration<double>(s.t / cfg_.speed);
    std::this_thread::sleep_until(start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(offset));
  }
  ++stats_.delivered;
  return s;
}

std::string SimSource::describe() const { return cfg_.summary(); }

// ---------------------------------------------------------------------------

std::unique_ptr<SampleSource> open_source(const SourceConfig& cfg) {
  validate(cfg);
  switch (cfg.kind) {
    case SourceKind::Replay: {
      auto src = std::make_unique<CsvReplaySource>(cfg);
      if (!cfg.realtime) return src;
      return std::make_unique<ThreadedSource>(std::move(src), cfg.sample_rate);
    }
    case SourceKind::Udp:
      return std::make_unique<ThreadedSource>(std::make_unique<UdpSource>(cfg), cfg.sample_rate);
    case SourceKind::Sim:
      // Closed-loop sim must stay in lock-step with the classifier.
      return std::make_unique<SimSource>(cfg);
  }
  throw Error(Errc::InvalidArgument, "unknown source kind");
}

ThreadedSource::ThreadedSource(std::unique_ptr<SampleSource> inner, double sample_rate)
    : inner_(std::move(inner)),
      queue_(static_cast<std::size_t>(std::max(1.0, std::ceil(sample_rate)))) {
  thread_ = std::jthread([this](std::stop_token st) {
    while (!st.stop_requested()) {
      auto s = inner_->next();
      {
        std::lock_guard lock(stats_mutex_);
        inner_stats_ = inner_->stats();
      }
      if (!s) break;
      queue_.push(*s);
    }
    queue_.close();
  });
}

ThreadedSource::~ThreadedSource() {
  thread_.request_stop();
  queue_.close();
}

SourceStats ThreadedSource::stats() const {
  std::lock_guard lock(stats_mutex_);
  SourceStats s = inner_stats_;
  s.dropped = queue_.dropped();
  return s;
}

std::string ThreadedSource::describe() const { return inner_->describe(); }

// ---------------------------------------------------------------------------
// Regularization

Regularizer::Regularizer(double rate, DropoutPolicy policy) : rate_(rate), half_(0.5 / rate), policy_(policy) {
  if (!(rate > 0.0)) throw Error(Errc::InvalidArgument, "rate must be positive");
}

double Regularizer::grid_time(std::size_t k) const noexcept { return *t0_ + static_cast<double>(k) / rate_; }

namespace {
constexpr double kSnapTolerance = 1e-9;

RawSample lerp(const RawSample& a, const RawSample& b, double t) {
  if (b.t <= a.t) return {t, a.pitch, a.roll};
  const double w = (t - a.t) / (b.t - a.t);
  return {t, a.pitch + w * (b.pitch - a.pitch), a.roll + w * (b.roll - a.roll)};
}
}  // namespace

RawSample Regularizer::resolve(double g, bool /*final_pass*/) {
  const RawSample* nearest = nullptr;
  const RawSample* before = nullptr;  // latest with t <= g
  const RawSample* after = nullptr;   // earliest with t >= g
  for (const auto& s : window_) {
    const double d = s.t - g;
    if (d >= -half_ && d < half_ && (!nearest || std::abs(d) < std::abs(nearest->t - g))) nearest = &s;
    if (s.t <= g) before = &s;
    if (s.t >= g && !after) after = &s;
  }

  if (nearest) {
    const double t = std::abs(nearest->t - g) <= kSnapTolerance ? nearest->t : g;
    if (policy_ == DropoutPolicy::HoldLast || t == nearest->t || !before || !after) {
      return {t, nearest->pitch, nearest->roll};
    }
    return lerp(*before, *after, t);
  }

  ++gaps_;
  if (!before) before = &window_.front();
  if (policy_ == DropoutPolicy::Interpolate && after) return lerp(*before, *after, g);
  return {g, before->pitch, before->roll};
}

void Regularizer::prune(double g) {
  while (window_.size() >= 2 && window_[1].t < g - half_) window_.pop_front();
}

void Regularizer::push(const RawSample& s, std::vector<RawSample>& out) {
  if (!t0_) t0_ = s.t;
  if (!window_.empty() && s.t < window_.back().t) {
    throw Error(Errc::InvalidArgument, "regularize: timestamps must be non-decreasing");
  }
  window_.push_back(s);
  while (s.t >= grid_time(index_) + half_) {
    out.push_back(resolve(grid_time(index_), false));
    ++index_;
    prune(grid_time(index_));
  }
  // A sample sitting on the grid is final as soon as it arrives, which keeps
  // closed-loop sources in lock-step with the consumer.
  if (std::abs(s.t - grid_time(index_)) <= kSnapTolerance) {
    out.push_back(resolve(grid_time(index_), false));
    ++index_;
    prune(grid_time(index_));
  }
}

void Regularizer::finish(std::vector<RawSample>& out) {
  if (window_.empty()) return;
  const double last = window_.back().t;
  while (grid_time(index_) - half_ <= last) {
    out.push_back(resolve(grid_time(index_), true));
    ++index_;
    prune(grid_time(index_));
  }
}

RegularizeResult regularize(std::span<const RawSample> input, double rate, DropoutPolicy policy) {
  Regularizer reg(rate, policy);
  RegularizeResult result;
  result.samples.reserve(input.size());
  for (const auto& s : input) reg.push(s, result.samples);
  reg.finish(result.samples);
  result.gaps = reg.gaps();
  return result;
}

}  // namespace abf
