#include "sarvr/robot_adapters.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include <httplib.h>

namespace sarvr {

bool is_dotted_ipv4(std::string_view text) {
  int groups = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto dot = text.find('.', pos);
    auto part = text.substr(pos, dot == std::string_view::npos ? std::string_view::npos : dot - pos);
    if (part.empty() || part.size() > 3) return false;
    int value = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc{} || ptr != part.data() + part.size() || value > 255) return false;
    ++groups;
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  return groups == 4;
}

void RobotAdapter::require_kind(const RobotCommand& command) const {
  if (command.adapter_kind != kind()) {
    throw Error(ErrorCode::AdapterMismatch, std::string(to_string(command.adapter_kind)) + " command on " +
                                                std::string(to_string(kind())) + " adapter");
  }
}

bool SimulatedAdapter::connected() const {
  std::lock_guard lock(mu_);
  return connected_;
}

Ack SimulatedAdapter::dispatch(const RobotCommand& command) {
  require_kind(command);
  std::lock_guard lock(mu_);
  if (!connected_) throw Error(ErrorCode::Disconnected, "simulated robot is gone");
  transcript_.push_back(command);
  return {"recorded #" + std::to_string(transcript_.size())};
}

void SimulatedAdapter::close() { disconnect(); }

std::vector<RobotCommand> SimulatedAdapter::transcript() const {
  std::lock_guard lock(mu_);
  return transcript_;
}

void SimulatedAdapter::disconnect() {
  std::lock_guard lock(mu_);
  connected_ = false;
}

Ack AvatarAdapter::dispatch(const RobotCommand& command) {
  require_kind(command);
  std::lock_guard lock(mu_);
  bubbles_.push_back(command.speech_text.value_or(""));
  return {"bubble"};
}

std::vector<std::string> AvatarAdapter::bubbles() const {
  std::lock_guard lock(mu_);
  return bubbles_;
}

// --- humanoid TCP -----------------------------------------------------------

std::string encode_json_frame(const nlohmann::json& j) {
  const std::string body = j.dump();
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string out;
  out.reserve(body.size() + 4);
  out.push_back(static_cast<char>((n >> 24) & 0xFF));
  out.push_back(static_cast<char>((n >> 16) & 0xFF));
  out.push_back(static_cast<char>((n >> 8) & 0xFF));
  out.push_back(static_cast<char>(n & 0xFF));
  out += body;
  return out;
}

bool write_all(int fd, std::string_view bytes) {
  while (!bytes.empty()) {
    ssize_t n = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

namespace {

bool read_exact(int fd, char* buf, std::size_t len, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::size_t got = 0;
  while (got < len) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return false;
    pollfd p{fd, POLLIN, 0};
    int rc = ::poll(&p, 1, static_cast<int>(left.count()));
    if (rc < 0 && errno == EINTR) continue;
    if (rc <= 0) return false;
    ssize_t n = ::recv(fd, buf + got, len - got, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    got += static_cast<std::size_t>(n);
  }
  return true;
}

constexpr std::uint32_t kMaxFrame = 1u << 20;

}  // namespace

std::optional<nlohmann::json> read_json_frame(int fd, std::chrono::milliseconds timeout) {
  unsigned char hdr[4];
  if (!read_exact(fd, reinterpret_cast<char*>(hdr), 4, timeout)) return std::nullopt;
  const std::uint32_t n = (std::uint32_t{hdr[0]} << 24) | (std::uint32_t{hdr[1]} << 16) |
                          (std::uint32_t{hdr[2]} << 8) | std::uint32_t{hdr[3]};
  if (n > kMaxFrame) return std::nullopt;
  std::string body(n, '\0');
  if (n > 0 && !read_exact(fd, body.data(), n, timeout)) return std::nullopt;
  auto parsed = nlohmann::json::parse(body, nullptr, false);
  if (parsed.is_discarded()) return std::nullopt;
  return parsed;
}

HumanoidAdapter::HumanoidAdapter(const AdapterConfig& config) : timeout_(config.timeout) {
  if (!is_dotted_ipv4(config.address)) throw Error(ErrorCode::BadAddress, "'" + config.address + "' is not dotted IPv4");

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(config.port);
  if (::inet_pton(AF_INET, config.address.c_str(), &addr.sin_addr) != 1) {
    throw Error(ErrorCode::BadAddress, config.address);
  }

  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw Error(ErrorCode::ConnectFailed, std::strerror(errno));
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  if (rc < 0 && errno != EINPROGRESS) {
    std::string why = std::strerror(errno);
    ::close(fd);
    throw Error(ErrorCode::ConnectFailed, why);
  }
  if (rc < 0) {
    pollfd p{fd, POLLOUT, 0};
    rc = ::poll(&p, 1, static_cast<int>(timeout_.count()));
    int err = 0;
    socklen_t len = sizeof(err);
    if (rc > 0) ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (rc <= 0 || err != 0) {
      ::close(fd);
      throw Error(ErrorCode::ConnectFailed, rc <= 0 ? "connect timed out" : std::strerror(err));
    }
  }
  ::fcntl(fd, F_SETFL, flags);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

  if (!write_all(fd, encode_json_frame({{"type", "hello"}, {"client", "sarvr"}, {"version", 1}}))) {
    ::close(fd);
    throw Error(ErrorCode::ConnectFailed, "hello not sent");
  }
  auto reply = read_json_frame(fd, timeout_);
  if (!reply || !reply->is_object() || reply->value("type", "") != "hello" || reply->value("version", 0) != 1) {
    ::close(fd);
    throw Error(ErrorCode::ConnectFailed, "handshake mismatch");
  }
  robot_name_ = reply->value("robot", "");
  fd_ = fd;
}

HumanoidAdapter::~HumanoidAdapter() { close(); }

void HumanoidAdapter::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Ack HumanoidAdapter::dispatch(const RobotCommand& command) {
  require_kind(command);
  if (fd_ < 0) throw Error(ErrorCode::Disconnected, "humanoid socket closed");
  nlohmann::json msg{{"type", "command"}, {"behavior_id", command.behavior_id}};
  msg["speech_text"] = command.speech_text ? nlohmann::json(*command.speech_text) : nlohmann::json(nullptr);
  if (!write_all(fd_, encode_json_frame(msg))) {
    close();
    throw Error(ErrorCode::Disconnected, "send failed");
  }
  auto reply = read_json_frame(fd_, timeout_);
  if (!reply || reply->value("type", "") != "ack") {
    close();
    throw Error(ErrorCode::Disconnected, "no ack from humanoid");
  }
  return {reply->value("detail", "ack")};
}

// --- animal REST --------------------------------------------------------------

namespace {

httplib::Client make_client(const AdapterConfig& c) {
  httplib::Client cli(c.address, c.port);
  const auto secs = static_cast<time_t>(c.timeout.count() / 1000);
  const auto usecs = static_cast<time_t>((c.timeout.count() % 1000) * 1000);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  cli.set_bearer_token_auth(c.api_key);
  return cli;
}

}  // namespace

AnimalAdapter::AnimalAdapter(const AdapterConfig& config) : config_(config) {
  if (config_.api_key.empty()) throw Error(ErrorCode::AuthFailed, "animal robot needs an api key");
  auto cli = make_client(config_);
  auto res = cli.Get("/ping");
  if (!res) throw Error(ErrorCode::ConnectFailed, httplib::to_string(res.error()));
  if (res->status == 401 || res->status == 403) throw Error(ErrorCode::AuthFailed, "api key rejected");
  if (res->status != 200) throw Error(ErrorCode::ConnectFailed, "ping returned " + std::to_string(res->status));
  connected_ = true;
}

Ack AnimalAdapter::dispatch(const RobotCommand& command) {
  require_kind(command);
  if (!connected_) throw Error(ErrorCode::Disconnected, "animal adapter closed");
  auto cli = make_client(config_);
  auto res = cli.Post("/trick", nlohmann::json{{"name", command.behavior_id}}.dump(), "application/json");
  if (!res) {
    connected_ = false;
    throw Error(ErrorCode::Disconnected, httplib::to_string(res.error()));
  }
  if (res->status == 401 || res->status == 403) throw Error(ErrorCode::AuthFailed, "api key rejected");
  if (res->status / 100 != 2) throw Error(ErrorCode::Disconnected, "trick returned " + std::to_string(res->status));
  return {"trick " + command.behavior_id};
}

std::unique_ptr<RobotAdapter> connect(const AdapterConfig& config) {
  switch (config.kind) {
    case AdapterKind::Simulated:
      if (config.simulate_handshake_mismatch) throw Error(ErrorCode::ConnectFailed, "handshake mismatch");
      return std::make_unique<SimulatedAdapter>();
    case AdapterKind::Avatar: return std::make_unique<AvatarAdapter>();
    case AdapterKind::Humanoid: return std::make_unique<HumanoidAdapter>(config);
    case AdapterKind::Animal: return std::make_unique<AnimalAdapter>(config);
  }
  throw Error(ErrorCode::UnsupportedAdapter, "unknown adapter kind");
}

}  // namespace sarvr
