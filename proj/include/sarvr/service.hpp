#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "sarvr/engine.hpp"

namespace httplib {
class Server;
}

namespace sarvr::service {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  /// 0 picks a free port.
  std::uint16_t port = 8080;
  /// Required as "Authorization: Bearer <token>" when non-empty.
  std::string token;
};

/// HTTP status for an engine error.
int http_status(ErrorCode code);

/// REST and event-stream front end for an Engine.
///
///   POST /sessions                      201 {"id"}
///   GET  /sessions/{id}
///   POST /sessions/{id}/connect|start|pause|end|inject|tick
///   GET  /sessions/{id}/events          text/event-stream; ?cursor=n, Last-Event-ID, ?follow=0
///   GET  /wand-ports
class Service {
 public:
  Service(engine::Engine& engine, ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and serves on a background thread. Throws IoFailure.
  void start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();
  std::uint16_t port() const { return port_; }

 private:
  void bind();
  void routes();

  engine::Engine& engine_;
  ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::uint16_t port_ = 0;
};

}  // namespace sarvr::service
