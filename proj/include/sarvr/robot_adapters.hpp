#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "sarvr/feedback.hpp"

namespace sarvr {

struct AdapterConfig {
  AdapterKind kind = AdapterKind::Simulated;
  /// Humanoid: dotted IPv4 address. Animal: host of the REST endpoint.
  std::string address;
  std::uint16_t port = 0;
  /// Animal only.
  std::string api_key;
  std::chrono::milliseconds timeout{2000};
  /// Simulated only: make the hello exchange fail.
  bool simulate_handshake_mismatch = false;
};

/// Parses "a.b.c.d" with four 0..255 groups.
bool is_dotted_ipv4(std::string_view text);

struct Ack {
  std::string detail;
};

/// A connected robot or avatar. Feedback translation is done upstream; an
/// adapter only serializes RobotCommands onto its wire format.
class RobotAdapter {
 public:
  virtual ~RobotAdapter() = default;

  virtual AdapterKind kind() const = 0;
  virtual bool connected() const = 0;
  /// Throws AdapterMismatch or Disconnected.
  virtual Ack dispatch(const RobotCommand& command) = 0;
  virtual void close() {}

 protected:
  void require_kind(const RobotCommand& command) const;
};

/// Always connects; records every command for inspection.
class SimulatedAdapter : public RobotAdapter {
 public:
  AdapterKind kind() const override { return AdapterKind::Simulated; }
  bool connected() const override;
  Ack dispatch(const RobotCommand& command) override;
  void close() override;

  std::vector<RobotCommand> transcript() const;
  /// Simulates the peer going away.
  void disconnect();

 private:
  mutable std::mutex mu_;
  std::vector<RobotCommand> transcript_;
  bool connected_ = true;
};

/// On-screen avatar: commands become speech bubbles.
class AvatarAdapter : public RobotAdapter {
 public:
  AdapterKind kind() const override { return AdapterKind::Avatar; }
  bool connected() const override { return true; }
  Ack dispatch(const RobotCommand& command) override;

  std::vector<std::string> bubbles() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> bubbles_;
};

/// Humanoid over TCP: frames are a 4-byte big-endian length followed by
/// UTF-8 JSON. Connect sends {"type":"hello","client":"sarvr","version":1}
/// and expects {"type":"hello","version":1}; each command expects
/// {"type":"ack"}.
class HumanoidAdapter : public RobotAdapter {
 public:
  /// Throws ConnectFailed.
  explicit HumanoidAdapter(const AdapterConfig& config);
  ~HumanoidAdapter() override;
  HumanoidAdapter(const HumanoidAdapter&) = delete;
  HumanoidAdapter& operator=(const HumanoidAdapter&) = delete;

  AdapterKind kind() const override { return AdapterKind::Humanoid; }
  bool connected() const override { return fd_ >= 0; }
  Ack dispatch(const RobotCommand& command) override;
  void close() override;

  std::string robot_name() const { return robot_name_; }

 private:
  int fd_ = -1;
  std::chrono::milliseconds timeout_;
  std::string robot_name_;
};

/// Animal robot over REST: GET /ping and POST /trick {"name"} with a bearer key.
class AnimalAdapter : public RobotAdapter {
 public:
  /// Throws ConnectFailed or AuthFailed.
  explicit AnimalAdapter(const AdapterConfig& config);

  AdapterKind kind() const override { return AdapterKind::Animal; }
  bool connected() const override { return connected_; }
  Ack dispatch(const RobotCommand& command) override;
  void close() override { connected_ = false; }

 private:
  AdapterConfig config_;
  bool connected_ = false;
};

/// Performs the adapter's handshake. Throws ConnectFailed, AuthFailed.
std::unique_ptr<RobotAdapter> connect(const AdapterConfig& config);

/// Length-prefixed JSON framing shared with the humanoid stub in tests.
std::string encode_json_frame(const nlohmann::json& j);
/// Reads one frame from a socket; nullopt on EOF or timeout.
std::optional<nlohmann::json> read_json_frame(int fd, std::chrono::milliseconds timeout);
bool write_all(int fd, std::string_view bytes);

}  // namespace sarvr
