#include "sarvr/service.hpp"

#include <httplib.h>

namespace sarvr::service {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidChart:
    case ErrorCode::InvalidCanvas:
    case ErrorCode::InvalidVocabulary:
    case ErrorCode::UnsupportedAdapter:
    case ErrorCode::UnknownWord: return 422;
    case ErrorCode::BadAddress:
    case ErrorCode::ParseError:
    case ErrorCode::BadMagic:
    case ErrorCode::BadCrc:
    case ErrorCode::UnknownKind:
    case ErrorCode::ShortFrame:
    case ErrorCode::BadField:
    case ErrorCode::NonUnitQuaternion: return 400;
    case ErrorCode::ConnectFailed:
    case ErrorCode::AuthFailed:
    case ErrorCode::Disconnected:
    case ErrorCode::AdapterMismatch:
    case ErrorCode::UploadFailed: return 502;
    case ErrorCode::IllegalTransition:
    case ErrorCode::ActivityNotRunning:
    case ErrorCode::ClockRegression: return 409;
    case ErrorCode::NotFound: return 404;
    default: return 500;
  }
}

namespace {

constexpr const char* kJson = "application/json";

void reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace), kJson);
}

void reply_error(httplib::Response& res, const Error& e) {
  reply(res, http_status(e.code()), {{"error", to_string(e.code())}, {"detail", e.detail()}});
}

nlohmann::json body_of(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  auto j = nlohmann::json::parse(req.body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ParseError, "request body is not JSON");
  return j;
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      reply_error(res, e);
    } catch (const nlohmann::json::exception& e) {
      reply(res, 400, {{"error", "ParseError"}, {"detail", e.what()}});
    }
  };
}

std::uint64_t cursor_of(const httplib::Request& req) {
  std::string raw;
  if (req.has_param("cursor")) raw = req.get_param_value("cursor");
  else if (req.has_header("Last-Event-ID")) raw = req.get_header_value("Last-Event-ID");
  if (raw.empty()) return 0;
  auto v = parse_int(raw);
  if (!v || *v < 0) throw Error(ErrorCode::ParseError, "bad cursor '" + raw + "'");
  return static_cast<std::uint64_t>(*v);
}

}  // namespace

Service::Service(engine::Engine& engine, ServiceOptions options)
    : engine_(engine), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  routes();
}

Service::~Service() { stop(); }

void Service::routes() {
  auto& s = *server_;
  auto& eng = engine_;

  if (!options_.token.empty()) {
    const std::string expected = "Bearer " + options_.token;
    s.set_pre_routing_handler([expected](const httplib::Request& req, httplib::Response& res) {
      if (req.get_header_value("Authorization") == expected) return httplib::Server::HandlerResponse::Unhandled;
      reply(res, 401, {{"error", "Unauthorized"}, {"detail", "missing or wrong bearer token"}});
      return httplib::Server::HandlerResponse::Handled;
    });
  }

  s.Post("/sessions", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
           reply(res, 201, {{"id", eng.create_session(body_of(req))}});
         }));
  s.Get(R"(/sessions/([^/]+))", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
          reply(res, 200, eng.view(req.matches[1]));
        }));
  s.Post(R"(/sessions/([^/]+)/connect)", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
           reply(res, 200, eng.connect(req.matches[1], body_of(req)));
         }));
  s.Post(R"(/sessions/([^/]+)/start)", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
           reply(res, 200, eng.start(req.matches[1]));
         }));
  s.Post(R"(/sessions/([^/]+)/pause)", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
           reply(res, 200, eng.pause(req.matches[1]));
         }));
  s.Post(R"(/sessions/([^/]+)/end)", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
           reply(res, 200, eng.end(req.matches[1]));
         }));
  s.Post(R"(/sessions/([^/]+)/inject)", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
           eng.inject(req.matches[1], body_of(req));
           reply(res, 202, {{"accepted", true}});
         }));
  s.Post(R"(/sessions/([^/]+)/tick)", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
           reply(res, 200, eng.tick(req.matches[1], body_of(req)));
         }));
  s.Get("/wand-ports", guarded([&eng](const httplib::Request&, httplib::Response& res) {
          reply(res, 200, eng.wand_ports());
        }));

  s.Get(R"(/sessions/([^/]+)/events)", guarded([&eng](const httplib::Request& req, httplib::Response& res) {
          const std::string id = req.matches[1];
          const std::uint64_t cursor = cursor_of(req);
          const bool follow = !(req.has_param("follow") && req.get_param_value("follow") == "0");
          eng.finished(id);  // 404 before committing to a stream

          if (!follow) {
            std::string body;
            for (const auto& e : eng.events(id, cursor)) body += engine::to_sse(e);
            res.status = 200;
            res.set_header("Cache-Control", "no-cache");
            res.set_content(body, "text/event-stream");
            return;
          }

          auto position = std::make_shared<std::uint64_t>(cursor);
          res.set_header("Cache-Control", "no-cache");
          res.set_chunked_content_provider("text/event-stream", [&eng, id, position](std::size_t, httplib::DataSink& sink) {
            try {
              const bool done = eng.finished(id);
              auto batch = eng.events(id, *position, std::chrono::milliseconds(done ? 0 : 500));
              for (const auto& e : batch) {
                const std::string chunk = engine::to_sse(e);
                if (!sink.write(chunk.data(), chunk.size())) return false;
                *position = e.seq;
              }
              if (done && batch.empty()) {
                const std::string tail = "event: end\ndata: {}\n\n";
                sink.write(tail.data(), tail.size());
                sink.done();
                return true;
              }
              if (batch.empty()) {
                const std::string keepalive = ": keepalive\n\n";
                if (!sink.write(keepalive.data(), keepalive.size())) return false;
              }
              return true;
            } catch (const Error&) {
              return false;
            }
          });
        }));

  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(nlohmann::json{{"error", res.status == 404 ? "NotFound" : "HttpError"}, {"status", res.status}}.dump(),
                      kJson);
    }
  });
}

void Service::bind() {
  if (options_.port == 0) {
    const int p = server_->bind_to_any_port(options_.host);
    if (p <= 0) throw Error(ErrorCode::IoFailure, "cannot bind " + options_.host);
    port_ = static_cast<std::uint16_t>(p);
  } else {
    if (!server_->bind_to_port(options_.host, options_.port)) {
      throw Error(ErrorCode::IoFailure, "cannot bind " + options_.host + ":" + std::to_string(options_.port));
    }
    port_ = options_.port;
  }
}

void Service::start() {
  bind();
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void Service::run() {
  bind();
  server_->listen_after_bind();
}

void Service::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace sarvr::service
