#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sarvr/recorder.hpp"
#include "sarvr/session.hpp"
#include "sarvr/wand.hpp"

namespace sarvr::engine {

namespace fs = std::filesystem;

/// Simulated sensor rigs for desk-scale runs.
struct SensorSimConfig {
  bool kinect = true;
  bool e4 = true;
  double kinect_hz = 30.0;
  /// Adds a bystander at 3 m every this many frames (0 = never); the range
  /// filter must drop it.
  int bystander_every = 0;
};

struct EngineConfig {
  fs::path data_dir = "sessions";
  fs::path archive_dir = "archives";
  /// Seed vocabulary when empty.
  std::string vocabulary_path;
  /// Sessions use a virtual clock unless their body says otherwise.
  bool virtual_clock = false;
  std::chrono::milliseconds tick_interval{100};
  /// "simulated" reports both wands Ok; "udp" probes wand_ports and listens
  /// on the first port that answers.
  std::string wands = "simulated";
  std::vector<std::uint16_t> wand_ports{wand::kDefaultUdpPort, wand::kDefaultUdpPort + 1, wand::kDefaultUdpPort + 2,
                                        wand::kDefaultUdpPort + 3};
  std::chrono::milliseconds probe_window = wand::kProbeWindow;
  SensorSimConfig sensors;
  /// Where the animal robot's REST API lives; requests only carry the api key.
  std::string animal_host = "127.0.0.1";
  std::uint16_t animal_port = 0;
  recorder::UploadTarget upload = recorder::NoUpload{};
  /// Wall-clock anchor override for reproducible archive names.
  std::optional<std::int64_t> fixed_wall_clock_ms;
  std::size_t event_buffer = 100'000;

  /// Throws InvalidConfig.
  static EngineConfig from_json(const nlohmann::json& j);
  static EngineConfig load(const std::string& path);
};

/// JSON form of a wand frame: {"wand":"Red","seq":n,"t":ms,"kind":"Orientation","q":[w,x,y,z]},
/// Button {"button":"A","pressed":true}, Dial {"delta":n}, Battery {"state","level"}.
/// Throws ParseError or NonUnitQuaternion.
wand::WandFrame wand_frame_from_json(const nlohmann::json& j);
nlohmann::json to_json(const wand::WandFrame& f);

/// One performance-stream record with its position in the event stream.
struct StreamEvent {
  std::uint64_t seq = 0;
  recorder::LogRecord record;
};

std::string to_sse(const StreamEvent& e);

struct PortVerdict {
  std::uint16_t port = 0;
  std::string name;
  bool verdict = false;
  std::string note;
};

/// Probes candidate ports in parallel.
std::vector<PortVerdict> probe_wand_ports(const std::vector<std::uint16_t>& ports, std::chrono::milliseconds window);

/// In-process API; the HTTP service is a thin translation of these calls.
/// Every call is executed on the session loop thread.
class Engine {
 public:
  explicit Engine(EngineConfig config);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Returns the new session id. Throws InvalidConfig, IllegalTransition
  /// while another session is active.
  std::string create_session(const nlohmann::json& body);
  nlohmann::json view(const std::string& id);
  /// Throws BadAddress, ConnectFailed, AuthFailed, IllegalTransition.
  nlohmann::json connect(const std::string& id, const nlohmann::json& body);
  nlohmann::json start(const std::string& id);
  nlohmann::json pause(const std::string& id);
  /// Ends the activity, packages the archive and uploads it.
  nlohmann::json end(const std::string& id);
  /// {"event": {...}} | {"wand_frame": {...}} | {"wand_frame_hex": "..."},
  /// optional "at" (virtual clock). Throws IllegalTransition outside Baseline
  /// and ActivityRunning.
  void inject(const std::string& id, const nlohmann::json& body);
  /// Virtual clock: {"to": ms} or {"advance": ms}.
  nlohmann::json tick(const std::string& id, const nlohmann::json& body);

  /// Events with seq > cursor, waiting up to timeout for the first one.
  std::vector<StreamEvent> events(const std::string& id, std::uint64_t cursor,
                                  std::chrono::milliseconds wait = std::chrono::milliseconds(0));
  /// True once nothing more will be emitted for the session.
  bool finished(const std::string& id);
  nlohmann::json wand_ports();

  fs::path session_dir(const std::string& id);
  const EngineConfig& config() const { return config_; }

 private:
  struct Live;

  template <typename F>
  auto call(F&& f) -> decltype(f());
  void loop();
  Live& find(const std::string& id);
  Live* active();
  void advance_clock(Live& s, Millis to);
  void on_record(Live& s, const session::Emitted& e);
  void simulate_sensors(Live& s, Millis to);
  void start_wand_receiver(Live& s);
  nlohmann::json package(Live& s);

  EngineConfig config_;
  std::shared_ptr<const Vocabulary> vocab_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> tasks_;
  bool stopping_ = false;
  std::thread thread_;

  std::mutex events_mu_;
  std::condition_variable events_cv_;

  std::map<std::string, std::unique_ptr<Live>> sessions_;
  int next_id_ = 1;
};

}  // namespace sarvr::engine
