#include "abf/gateway.hpp"

#include <sys/socket.h>

#include <atomic>
#include <charconv>
#include <list>
#include <mutex>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "abf/error.hpp"

namespace abf {

namespace beast = boost::beast;
namespace http = boost::beast::http;
namespace websocket = boost::beast::websocket;
namespace asio = boost::asio;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

HttpResponse error_response(int status, std::string_view code, std::string_view reason) {
  return {status, json{{"error", code}, {"reason", reason}}.dump()};
}

HttpResponse from_error(const Error& e) {
  int status = 400;
  switch (e.code()) {
    case Errc::CalibrationMissing:
    case Errc::StateConflict:
    case Errc::MissingCondition:
    case Errc::DegenerateBaselineTrial:
      status = 409;
      break;
    case Errc::Io:
    case Errc::SourceUnavailable:
      status = 503;
      break;
    default:
      status = 400;
  }
  return error_response(status, to_string(e.code()), e.what());
}

json trial_summary(const TrialRecord& r) {
  return {{"id", r.id},
          {"subject", r.subject_id},
          {"condition", {{"eyes", to_string(r.condition.eyes)}, {"surface", to_string(r.condition.surface)}}},
          {"abf_on", r.abf_on},
          {"status", to_string(r.status)},
          {"n", r.samples.size()},
          {"R", r.metrics.range},
          {"V", r.metrics.variance},
          {"started_at", r.started_at}};
}

}  // namespace

HttpResponse handle_request(SessionController& controller, std::string_view method, std::string_view target,
                            std::string_view body) {
  const std::string_view path = target.substr(0, target.find('?'));
  try {
    if (method == "GET" && path == "/state") return {200, controller.state_json().dump()};

    if (method == "POST" && path == "/calibrate") {
      controller.calibrate();
      return {202, json{{"state", to_string(controller.state())}}.dump()};
    }

    if (method == "POST" && path == "/trial/start") {
      Condition condition;
      bool abf_on = false;
      try {
        const json j = json::parse(body);
        condition.eyes = parse_eyes(j.at("condition").at("eyes").get<std::string>());
        condition.surface = parse_surface(j.at("condition").at("surface").get<std::string>());
        abf_on = j.at("abf_on").get<bool>();
      } catch (const json::exception& e) {
        return error_response(400, "InvalidArgument", e.what());
      }
      controller.start_trial(condition, abf_on);
      return {202, json{{"state", to_string(controller.state())}}.dump()};
    }

    if (method == "POST" && path == "/trial/stop") {
      const bool stopped = controller.stop_trial();
      return {200, json{{"stopped", stopped}, {"state", to_string(controller.state())}}.dump()};
    }

    if (method == "PUT" && path == "/volume") {
      double v = 0.0;
      try {
        v = json::parse(body).at("reference_volume").get<double>();
      } catch (const json::exception& e) {
        return error_response(400, "InvalidArgument", e.what());
      }
      controller.set_volume(v);
      return {200, json{{"reference_volume", controller.volume()}}.dump()};
    }

    if (method == "GET" && path == "/trials") {
      json arr = json::array();
      for (const auto& r : controller.trials()) arr.push_back(trial_summary(r));
      return {200, arr.dump()};
    }

    if (method == "GET" && path == "/report") return {200, controller.report().to_json()};

    if (method == "GET" && path == "/dispersion") {
      DispersionDataset data;
      data.boundaries = region_boundaries();
      return {200, data.to_json()};
    }

    constexpr std::string_view kDispersionPrefix = "/dispersion/";
    if (method == "GET" && path.starts_with(kDispersionPrefix)) {
      const std::string id(path.substr(kDispersionPrefix.size()));
      const auto rec = controller.find_trial(id);
      if (!rec) return error_response(404, "NotFound", "unknown trial '" + id + "'");
      if (rec->samples.empty()) return error_response(409, "EmptySeries", "trial has no samples");
      return {200, dispersion_export(rec->samples).to_json()};
    }
  } catch (const Error& e) {
    return from_error(e);
  }
  return error_response(404, "NotFound", std::string(method) + " " + std::string(path));
}

std::pair<std::string, std::uint16_t> parse_bind_address(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos) throw Error(Errc::InvalidArgument, "bind address must be host:port");
  unsigned port = 0;
  const auto digits = text.substr(colon + 1);
  const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (res.ec != std::errc{} || res.ptr != digits.data() + digits.size() || port > 65535) {
    throw Error(Errc::InvalidArgument, "bad port in '" + std::string(text) + "'");
  }
  return {std::string(text.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

// ---------------------------------------------------------------------------

struct Gateway::Impl {
  SessionController& controller;
  asio::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::atomic<bool> stopping{false};
  std::jthread accept_thread;

  std::mutex sessions_mutex;
  struct Session {
    std::shared_ptr<tcp::socket> socket;
    std::shared_ptr<std::atomic<bool>> done;
    std::jthread thread;
  };
  std::list<Session> sessions;

  explicit Impl(SessionController& c) : controller(c) {}

  void accept_loop() {
    while (!stopping.load()) {
      auto socket = std::make_shared<tcp::socket>(ioc);
      beast::error_code ec;
      acceptor.accept(*socket, ec);
      if (ec) {
        if (stopping.load()) break;
        continue;
      }
      std::lock_guard lock(sessions_mutex);
      reap_finished();
      auto done = std::make_shared<std::atomic<bool>>(false);
      sessions.push_back({socket, done, std::jthread([this, socket, done] {
                            serve(*socket);
                            done->store(true);
                          })});
    }
  }

  // Called with sessions_mutex held.
  void reap_finished() {
    for (auto it = sessions.begin(); it != sessions.end();) {
      if (it->done->load()) {
        if (it->thread.joinable()) it->thread.join();
        it = sessions.erase(it);
      } else {
        ++it;
      }
    }
  }

  template <typename Body>
  static void set_common(http::response<Body>& res, unsigned version, bool keep_alive) {
    res.version(version);
    res.set(http::field::server, "abf-gateway");
    res.set(http::field::content_type, "application/json");
    res.set(http::field::access_control_allow_origin, "*");
    res.keep_alive(keep_alive);
  }

  void serve(tcp::socket& socket) {
    beast::error_code ec;
    beast::flat_buffer buffer;
    while (!stopping.load()) {
      http::request<http::string_body> req;
      http::read(socket, buffer, req, ec);
      if (ec) break;

      if (websocket::is_upgrade(req)) {
        if (req.target() == "/ws/telemetry") serve_telemetry(socket, std::move(req));
        break;
      }

      http::response<http::string_body> res;
      if (req.method() == http::verb::options) {
        res.result(http::status::no_content);
        res.set(http::field::access_control_allow_methods, "GET, POST, PUT, OPTIONS");
        res.set(http::field::access_control_allow_headers, "Content-Type");
      } else {
        const auto method = req.method_string();
        const auto target = req.target();
        const auto out = handle_request(controller, std::string_view(method.data(), method.size()),
                                        std::string_view(target.data(), target.size()), req.body());
        res.result(static_cast<http::status>(out.status));
        res.body() = out.body;
      }
      set_common(res, req.version(), req.keep_alive());
      res.prepare_payload();
      http::write(socket, res, ec);
      if (ec || !req.keep_alive()) break;
    }
    socket.shutdown(tcp::socket::shutdown_both, ec);
    socket.close(ec);
  }

  void serve_telemetry(tcp::socket& socket, http::request<http::string_body> req) {
    websocket::stream<tcp::socket&> ws(socket);
    beast::error_code ec;
    ws.accept(req, ec);
    if (ec) return;
    ws.text(true);
    auto sub = controller.telemetry().subscribe();
    while (!stopping.load() && !sub->closed()) {
      auto frame = sub->pop(std::chrono::milliseconds(100));
      if (!frame) continue;
      ws.write(asio::buffer(to_json(*frame).dump()), ec);
      if (ec) break;
    }
    if (!ec) ws.close(websocket::close_code::going_away, ec);
  }
};

Gateway::Gateway(SessionController& controller, const std::string& host, std::uint16_t port)
    : impl_(std::make_unique<Impl>(controller)) {
  beast::error_code ec;
  const auto address = asio::ip::make_address(host, ec);
  if (ec) throw Error(Errc::InvalidArgument, "bad bind host '" + host + "'");
  const tcp::endpoint endpoint(address, port);
  impl_->acceptor.open(endpoint.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(endpoint, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw Error(Errc::Io, "cannot listen on " + host + ":" + std::to_string(port) + ": " + ec.message());
}

Gateway::~Gateway() { stop(); }

void Gateway::start() {
  if (impl_->accept_thread.joinable()) return;
  impl_->accept_thread = std::jthread([this] { impl_->accept_loop(); });
}

void Gateway::stop() {
  if (impl_->stopping.exchange(true)) return;
  // Unblock the accept call and every session read/write.
  ::shutdown(impl_->acceptor.native_handle(), SHUT_RDWR);
  beast::error_code ec;
  impl_->acceptor.close(ec);
  if (impl_->accept_thread.joinable()) impl_->accept_thread.join();
  std::lock_guard lock(impl_->sessions_mutex);
  for (auto& session : impl_->sessions) {
    if (!session.done->load()) ::shutdown(session.socket->native_handle(), SHUT_RDWR);
  }
  for (auto& session : impl_->sessions) {
    if (session.thread.joinable()) session.thread.join();
  }
  impl_->sessions.clear();
}

std::uint16_t Gateway::port() const noexcept { return impl_->acceptor.local_endpoint().port(); }

}  // namespace abf
