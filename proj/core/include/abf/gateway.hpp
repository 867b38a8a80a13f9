#pragma once

// HTTP + WebSocket control/telemetry surface for the operator console.
//
//   GET  /ws/telemetry            WebSocket, one JSON text frame per sample
//   GET  /state                   engine state, reference volume, baseline
//   POST /calibrate               start calibration
//   POST /trial/start             {"condition":{"eyes","surface"},"abf_on"}
//   POST /trial/stop              idempotent
//   PUT  /volume                  {"reference_volume": v}
//   GET  /trials                  trial summaries
//   GET  /report                  median P_R / P_V table
//   GET  /dispersion[/{trial_id}] scatter points + region polylines

#include <cstdint>
#include <memory>
#include <string>

#include "abf/controller.hpp"

namespace abf {

struct HttpResponse {
  int status = 200;
  std::string body;  // JSON
};

/// Routes one request against the controller; used by Gateway and usable
/// without a socket.
HttpResponse handle_request(SessionController& controller, std::string_view method, std::string_view target,
                            std::string_view body);

class Gateway {
 public:
  /// Binds immediately; throws Error(Io) if the address is unavailable.
  /// Port 0 picks an ephemeral port.
  Gateway(SessionController& controller, const std::string& host, std::uint16_t port);
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  void start();
  void stop();
  std::uint16_t port() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Splits "host:port".
std::pair<std::string, std::uint16_t> parse_bind_address(std::string_view text);

}  // namespace abf
