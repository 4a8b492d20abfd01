#include "sarvr/engine.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace sarvr::engine {

using session::LifecycleEvent;
using session::Phase;

// --- config ------------------------------------------------------------------------

EngineConfig EngineConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "engine config must be an object");
  EngineConfig c;
  try {
    c.data_dir = j.value("data_dir", c.data_dir.string());
    c.archive_dir = j.value("archive_dir", c.archive_dir.string());
    c.vocabulary_path = j.value("vocabulary", std::string());
    c.virtual_clock = j.value("clock", std::string("real")) == "virtual";
    c.tick_interval = std::chrono::milliseconds(j.value("tick_interval_ms", 100));
    c.wands = j.value("wands", c.wands);
    if (c.wands != "simulated" && c.wands != "udp") throw Error(ErrorCode::InvalidConfig, "wands: simulated|udp");
    if (j.contains("wand_ports")) c.wand_ports = j["wand_ports"].get<std::vector<std::uint16_t>>();
    c.probe_window = std::chrono::milliseconds(j.value("probe_window_ms", 500));
    if (auto s = j.find("sensors"); s != j.end()) {
      c.sensors.kinect = s->value("kinect", true);
      c.sensors.e4 = s->value("e4", true);
      c.sensors.kinect_hz = s->value("kinect_hz", 30.0);
      c.sensors.bystander_every = s->value("bystander_every", 0);
      if (!(c.sensors.kinect_hz > 0.0)) throw Error(ErrorCode::InvalidConfig, "kinect_hz must be > 0");
    }
    c.animal_host = j.value("animal_host", c.animal_host);
    c.animal_port = j.value("animal_port", std::uint16_t{0});
    if (auto u = j.find("upload"); u != j.end() && u->is_object()) {
      const std::string kind = u->value("kind", std::string("none"));
      if (kind == "local") {
        c.upload = recorder::LocalDir{u->value("path", std::string("uploads"))};
      } else if (kind == "http") {
        recorder::HttpPut put;
        put.url = u->value("url", std::string());
        put.token = u->value("token", std::string());
        c.upload = put;
      } else if (kind != "none") {
        throw Error(ErrorCode::InvalidConfig, "upload.kind: none|local|http");
      }
    }
    if (j.contains("wall_clock_ms")) c.fixed_wall_clock_ms = j["wall_clock_ms"].get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  return c;
}

EngineConfig EngineConfig::load(const std::string& path) {
  auto j = nlohmann::json::parse(recorder::read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::InvalidConfig, path + " is not JSON");
  return from_json(j);
}

// --- wand frames as JSON -----------------------------------------------------------

wand::WandFrame wand_frame_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "wand frame must be an object");
  try {
    wand::WandFrame f;
    auto color = wand_color_from_string(j.at("wand").get<std::string>());
    if (!color) throw Error(ErrorCode::ParseError, "wand must be Red or Blue");
    f.wand_id = *color;
    f.seq = j.value("seq", std::uint16_t{0});
    f.t = j.value("t", std::uint32_t{0});
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "Orientation") {
      auto q = j.at("q").get<std::vector<double>>();
      if (q.size() != 4) throw Error(ErrorCode::ParseError, "q needs 4 components");
      wand::Quaternion quat{q[0], q[1], q[2], q[3]};
      if (!wand::is_unit(quat)) throw Error(ErrorCode::NonUnitQuaternion, "norm " + std::to_string(quat.norm()));
      f.payload = wand::Orientation{quat};
    } else if (kind == "Button") {
      const std::string b = j.at("button").get<std::string>();
      if (b != "A" && b != "B") throw Error(ErrorCode::ParseError, "button must be A or B");
      f.payload = wand::Button{b == "A" ? wand::ButtonId::A : wand::ButtonId::B, j.at("pressed").get<bool>()};
    } else if (kind == "Dial") {
      f.payload = wand::Dial{j.at("delta").get<std::int16_t>()};
    } else if (kind == "Battery") {
      const std::string s = j.at("state").get<std::string>();
      wand::BatteryState st;
      if (s == "Charging") st = wand::BatteryState::Charging;
      else if (s == "NearFull") st = wand::BatteryState::NearFull;
      else if (s == "Full") st = wand::BatteryState::Full;
      else throw Error(ErrorCode::ParseError, "bad battery state");
      f.payload = wand::Battery{st, j.value("level", std::uint8_t{100})};
    } else {
      throw Error(ErrorCode::ParseError, "unknown wand frame kind '" + kind + "'");
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

nlohmann::json to_json(const wand::WandFrame& f) {
  nlohmann::json j{{"wand", to_string(f.wand_id)}, {"seq", f.seq}, {"t", f.t}};
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, wand::Orientation>) {
          j["kind"] = "Orientation";
          j["q"] = {p.q.w, p.q.x, p.q.y, p.q.z};
        } else if constexpr (std::is_same_v<P, wand::Button>) {
          j["kind"] = "Button";
          j["button"] = p.id == wand::ButtonId::A ? "A" : "B";
          j["pressed"] = p.pressed;
        } else if constexpr (std::is_same_v<P, wand::Dial>) {
          j["kind"] = "Dial";
          j["delta"] = p.delta;
        } else {
          j["kind"] = "Battery";
          j["state"] = wand::to_string(p.state);
          j["level"] = p.level;
        }
      },
      f.payload);
  return j;
}

namespace {

std::vector<std::uint8_t> from_hex(const std::string& hex) {
  if (hex.size() % 2) throw Error(ErrorCode::ParseError, "odd hex length");
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    auto nib = [&](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      if (c >= 'A' && c <= 'F') return c - 'A' + 10;
      throw Error(ErrorCode::ParseError, "bad hex digit");
    };
    out.push_back(static_cast<std::uint8_t>(nib(hex[i]) * 16 + nib(hex[i + 1])));
  }
  return out;
}

}  // namespace

std::string to_sse(const StreamEvent& e) {
  nlohmann::json data{{"seq", e.seq},
                      {"t", e.record.t},
                      {"component", e.record.component},
                      {"event", e.record.event},
                      {"payload", e.record.payload}};
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.record.component + "." + e.record.event +
         "\ndata: " + data.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n\n";
}

std::vector<PortVerdict> probe_wand_ports(const std::vector<std::uint16_t>& ports, std::chrono::milliseconds window) {
  std::vector<PortVerdict> out(ports.size());
  std::vector<std::thread> workers;
  for (std::size_t i = 0; i < ports.size(); ++i) {
    workers.emplace_back([&, i] {
      auto& v = out[i];
      v.port = ports[i];
      v.name = "udp:" + std::to_string(ports[i]);
      try {
        wand::UdpPort port(ports[i]);
        v.verdict = wand::probe_port(port, window);
      } catch (const Error& e) {
        v.note = e.detail();
      }
    });
  }
  for (auto& w : workers) w.join();
  return out;
}

// --- live session ------------------------------------------------------------------

struct Engine::Live {
  std::string id;
  bool virtual_clock = false;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
  std::int64_t wall_clock_ms = 0;
  fs::path dir;
  std::unique_ptr<recorder::SessionRecorder> recorder;
  std::unique_ptr<session::Session> session;
  std::shared_ptr<RobotAdapter> robot;
  std::unique_ptr<wand::UdpWandReceiver> receiver;

  // Guarded by Engine::events_mu_.
  std::deque<StreamEvent> events;
  std::uint64_t next_seq = 1;
  bool finished = false;

  // Sensor simulation cursor.
  std::optional<Millis> sensor_start;
  Millis sensor_until = 0;
  std::uint64_t kinect_frames = 0;
  std::map<std::pair<Side, sensors::E4Channel>, std::uint64_t> e4_samples;
  Rng sensor_rng{0};

  nlohmann::json result;

  Millis real_now() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
  }
  Millis clock() const { return virtual_clock ? session->now() : std::max(session->now(), real_now()); }
  bool recording() const {
    const Phase p = session->phase();
    return p == Phase::Baseline || p == Phase::ActivityRunning || p == Phase::Break;
  }
};

Engine::Engine(EngineConfig config) : config_(std::move(config)) {
  vocab_ = std::make_shared<const Vocabulary>(config_.vocabulary_path.empty() ? Vocabulary::seed()
                                                                              : Vocabulary::load(config_.vocabulary_path));
  thread_ = std::thread([this] { loop(); });
}

Engine::~Engine() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
  for (auto& [id, s] : sessions_) {
    if (s->receiver) s->receiver->stop();
    if (s->recorder) s->recorder->close();
  }
  {
    std::lock_guard lock(events_mu_);
    for (auto& [id, s] : sessions_) s->finished = true;
  }
  events_cv_.notify_all();
}

template <typename F>
auto Engine::call(F&& f) -> decltype(f()) {
  using R = decltype(f());
  auto task = std::make_shared<std::packaged_task<R()>>(std::forward<F>(f));
  auto fut = task->get_future();
  {
    std::lock_guard lock(mu_);
    if (stopping_) throw Error(ErrorCode::IoFailure, "engine is stopping");
    tasks_.push_back([task] { (*task)(); });
  }
  cv_.notify_one();
  return fut.get();
}

void Engine::loop() {
  std::unique_lock lock(mu_);
  while (!stopping_) {
    cv_.wait_for(lock, config_.tick_interval, [&] { return stopping_ || !tasks_.empty(); });
    while (!tasks_.empty()) {
      auto task = std::move(tasks_.front());
      tasks_.pop_front();
      lock.unlock();
      task();
      lock.lock();
    }
    if (stopping_) break;
    lock.unlock();
    if (Live* s = active(); s && !s->virtual_clock) {
      try {
        advance_clock(*s, s->real_now());
      } catch (const Error& e) {
        s->session->note("engine", "tick_error", {{"code", to_string(e.code())}, {"detail", e.detail()}},
                         s->session->now());
      }
    }
    lock.lock();
  }
}

Engine::Live& Engine::find(const std::string& id) {
  std::lock_guard lock(events_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "no session '" + id + "'");
  return *it->second;
}

Engine::Live* Engine::active() {
  std::lock_guard lock(events_mu_);
  for (auto& [id, s] : sessions_) {
    if (s->session && s->session->phase() != Phase::Packaged) return s.get();
  }
  return nullptr;
}

fs::path Engine::session_dir(const std::string& id) { return find(id).dir; }

void Engine::on_record(Live& s, const session::Emitted& e) {
  if (s.recorder && !s.recorder->closed()) {
    if (e.stream == "performance") {
      s.recorder->performance().append(e.record);
    } else {
      s.recorder->wand(e.stream == "wand_red" ? WandColor::Red : WandColor::Blue).append(e.record);
    }
  }
  if (e.stream != "performance") return;
  {
    std::lock_guard lock(events_mu_);
    s.events.push_back({s.next_seq++, e.record});
    while (s.events.size() > config_.event_buffer) s.events.pop_front();
  }
  events_cv_.notify_all();
}

std::string Engine::create_session(const nlohmann::json& body) {
  return call([&] {
    if (Live* a = active()) {
      throw Error(ErrorCode::IllegalTransition, "session " + a->id + " is still active");
    }
    auto config = session::SessionConfig::from_json(body);

    auto live = std::make_unique<Live>();
    std::string id;
    do {
      id = "s" + std::to_string(next_id_++);
    } while (fs::exists(config_.data_dir / id));
    live->id = id;
    live->virtual_clock = body.contains("clock") ? body["clock"] == "virtual" : config_.virtual_clock;
    live->wall_clock_ms = config_.fixed_wall_clock_ms.value_or(
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
            .count());
    live->dir = config_.data_dir / id;
    live->sensor_rng = Rng(config.rng_seed ^ 0x5e45f0a1u);
    live->recorder = std::make_unique<recorder::SessionRecorder>(live->dir);

    nlohmann::json meta{{"session_id", id}, {"wall_clock_epoch_ms", live->wall_clock_ms}, {"config", config.to_json()}};
    recorder::write_file(live->dir / "session.json", meta.dump(2));

    Live* raw = live.get();
    {
      std::lock_guard lock(events_mu_);
      sessions_[id] = std::move(live);
    }
    raw->session = std::make_unique<session::Session>(
        std::move(config), vocab_, [this, raw](const session::Emitted& e) { on_record(*raw, e); }, 0);
    return id;
  });
}

nlohmann::json Engine::view(const std::string& id) {
  return call([&] {
    Live& s = find(id);
    auto v = s.session->view();
    v["id"] = s.id;
    v["clock"] = s.virtual_clock ? "virtual" : "real";
    if (!s.result.is_null()) v["archive"] = s.result;
    return v;
  });
}

nlohmann::json Engine::connect(const std::string& id, const nlohmann::json& body) {
  return call([&] {
    Live& s = find(id);
    auto& sess = *s.session;
    if (sess.phase() != Phase::PreSession) {
      throw Error(ErrorCode::IllegalTransition, "connect is only possible before the session starts");
    }
    const Millis now = s.clock();
    AdapterConfig rc = sess.config().robot;
    if (body.is_object()) {
      if (body.contains("kind")) {
        auto k = adapter_kind_from_string(body["kind"].get<std::string>());
        if (!k || *k != rc.kind) throw Error(ErrorCode::InvalidConfig, "robot kind differs from the session's");
      }
      if (rc.kind == AdapterKind::Animal) {
        if (body.contains("address")) {
          throw Error(ErrorCode::BadAddress, "the animal robot is reached by api key, not address");
        }
        rc.api_key = body.value("api_key", rc.api_key);
      } else {
        rc.address = body.value("address", rc.address);
        rc.port = body.value("port", rc.port);
      }
      rc.simulate_handshake_mismatch = body.value("simulate_handshake_mismatch", rc.simulate_handshake_mismatch);
      if (body.contains("timeout_ms")) rc.timeout = std::chrono::milliseconds(body["timeout_ms"].get<int>());
    }
    if (rc.kind == AdapterKind::Animal) {
      rc.address = config_.animal_host;
      rc.port = config_.animal_port;
    }

    session::DeviceRegistry registry;
    if (config_.wands == "simulated") {
      registry["wand_left"] = registry["wand_right"] = session::DeviceStatus::ok();
    } else {
      auto verdicts = probe_wand_ports(config_.wand_ports, config_.probe_window);
      bool any = false;
      for (const auto& v : verdicts) any = any || v.verdict;
      registry["wand_left"] = registry["wand_right"] =
          any ? session::DeviceStatus::ok() : session::DeviceStatus{session::DeviceState::Missing, "no wand port"};
    }
    if (config_.sensors.kinect) registry["kinect"] = session::DeviceStatus::ok();
    if (config_.sensors.e4) registry["e4_left"] = registry["e4_right"] = session::DeviceStatus::ok();

    std::shared_ptr<RobotAdapter> adapter;
    try {
      adapter = sarvr::connect(rc);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::BadAddress) throw;
      registry["robot"] = session::DeviceStatus::fault(std::string(to_string(e.code())) + ": " + e.detail());
      sess.run_preliminary_checks(registry, now);
      throw;
    }
    s.robot = adapter;
    sess.attach_robot(adapter);
    const auto& report = sess.run_preliminary_checks(registry, now);
    if (config_.wands == "udp") start_wand_receiver(s);
    auto v = sess.view();
    v["id"] = s.id;
    v["checks_ok"] = report.all_ok();
    return v;
  });
}

void Engine::start_wand_receiver(Live& s) {
  auto verdicts = probe_wand_ports(config_.wand_ports, config_.probe_window);
  for (const auto& v : verdicts) {
    if (!v.verdict) continue;
    Live* raw = &s;
    s.receiver = std::make_unique<wand::UdpWandReceiver>(v.port, [this, raw](const wand::WandFrame& f) {
      std::lock_guard lock(mu_);
      tasks_.push_back([raw, f] {
        try {
          raw->session->wand_frame(f, raw->clock(), false);
        } catch (const Error&) {
          // Frames outside the recording phases are dropped.
        }
      });
      cv_.notify_one();
    });
    s.session->note("engine", "wand_port", {{"port", v.port}}, s.session->now());
    return;
  }
}

nlohmann::json Engine::start(const std::string& id) {
  return call([&] {
    Live& s = find(id);
    auto& sess = *s.session;
    const Millis now = s.clock();
    simulate_sensors(s, now);
    switch (sess.phase()) {
      case Phase::PreSession:
        if (!s.robot) throw Error(ErrorCode::IllegalTransition, "connect the robot before starting");
        if (!sess.checks() || !sess.checks()->all_ok()) {
          throw Error(ErrorCode::IllegalTransition, "preliminary checks have not passed");
        }
        sess.advance(LifecycleEvent::ChecksPassed, now);
        break;
      case Phase::Break: sess.advance(LifecycleEvent::StartActivity, now); break;
      default:
        throw Error(ErrorCode::IllegalTransition, "cannot start in " + std::string(to_string(sess.phase())));
    }
    if (s.recording() && !s.sensor_start) {
      s.sensor_start = now;
      s.sensor_until = now;
    }
    auto v = sess.view();
    v["id"] = s.id;
    return v;
  });
}

nlohmann::json Engine::pause(const std::string& id) {
  return call([&] {
    Live& s = find(id);
    const Millis now = s.clock();
    simulate_sensors(s, now);
    s.session->advance(LifecycleEvent::Pause, now);
    auto v = s.session->view();
    v["id"] = s.id;
    return v;
  });
}

nlohmann::json Engine::end(const std::string& id) {
  return call([&] {
    Live& s = find(id);
    const Millis now = s.clock();
    simulate_sensors(s, now);
    s.session->advance(LifecycleEvent::EndActivity, now);
    return package(s);
  });
}

nlohmann::json Engine::package(Live& s) {
  if (s.receiver) s.receiver->stop();
  if (s.robot) s.robot->close();
  s.recorder->close();
  const auto& cfg = s.session->config();
  recorder::PackageRequest req;
  req.facility_id = cfg.facility_id;
  req.participant_1 = cfg.participants[0].id;
  req.participant_2 = cfg.participants[1].id;
  req.wall_clock_epoch_ms = s.wall_clock_ms;
  req.session_dir = s.dir;
  req.streams = s.recorder->streams();
  req.streams.push_back({"config", "session.json"});
  req.out_dir = config_.archive_dir;
  req.created_at_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch()).count();
  auto pkg = recorder::package_session(req);
  s.session->advance(LifecycleEvent::PackagingDone, s.session->now());

  nlohmann::json out{{"archive", pkg.archive.string()}, {"name", pkg.archive.filename().string()}};
  try {
    auto receipt = recorder::upload(pkg.archive, config_.upload);
    out["receipt"] = {{"target", receipt.target},
                      {"location", receipt.location},
                      {"sha256", receipt.sha256},
                      {"attempts", receipt.attempts},
                      {"local_only", receipt.local_only}};
  } catch (const Error& e) {
    out["receipt"] = {{"error", to_string(e.code())}, {"detail", e.detail()}, {"local_only", true}};
  }
  s.session->note("archive", "packaged", out, s.session->now());
  s.result = out;
  {
    std::lock_guard lock(events_mu_);
    s.finished = true;
  }
  events_cv_.notify_all();
  auto v = s.session->view();
  v["id"] = s.id;
  v["archive"] = out;
  return v;
}

void Engine::inject(const std::string& id, const nlohmann::json& body) {
  call([&] {
    Live& s = find(id);
    auto& sess = *s.session;
    if (sess.phase() != Phase::Baseline && sess.phase() != Phase::ActivityRunning) {
      throw Error(ErrorCode::IllegalTransition, "inject needs Baseline or ActivityRunning, not " +
                                                    std::string(to_string(sess.phase())));
    }
    if (!body.is_object()) throw Error(ErrorCode::ParseError, "inject body must be an object");
    Millis at = s.clock();
    if (body.contains("at")) {
      if (!s.virtual_clock) throw Error(ErrorCode::ParseError, "'at' needs a virtual clock");
      at = body["at"].get<Millis>();
      if (at < sess.now()) throw Error(ErrorCode::ClockRegression, std::to_string(at) + " < " + std::to_string(sess.now()));
      advance_clock(s, at);
      if (sess.phase() != Phase::Baseline && sess.phase() != Phase::ActivityRunning) {
        throw Error(ErrorCode::IllegalTransition, "session left the running phases");
      }
    }
    if (body.contains("wand_frame")) {
      sess.wand_frame(wand_frame_from_json(body["wand_frame"]), at, true);
    } else if (body.contains("wand_frame_hex")) {
      auto bytes = from_hex(body["wand_frame_hex"].get<std::string>());
      sess.wand_frame(wand::decode_frame(bytes), at, true);
    } else if (body.contains("event")) {
      auto ev = session::parse_activity_event(sess.config().activity, body["event"], at);
      if (sess.phase() == Phase::Baseline) {
        sess.note("input", "ignored", {{"reason", "ActivityNotRunning"}, {"event", body["event"]}, {"synthetic", true}},
                  at);
      } else {
        sess.input(ev, at, true);
      }
    } else {
      throw Error(ErrorCode::ParseError, "inject needs 'event', 'wand_frame' or 'wand_frame_hex'");
    }
  });
}

nlohmann::json Engine::tick(const std::string& id, const nlohmann::json& body) {
  return call([&] {
    Live& s = find(id);
    if (!s.virtual_clock) throw Error(ErrorCode::IllegalTransition, "tick needs a virtual clock");
    Millis to = s.session->now();
    if (body.contains("to")) to = body["to"].get<Millis>();
    else if (body.contains("advance")) to += body["advance"].get<Millis>();
    advance_clock(s, to);
    auto v = s.session->view();
    v["id"] = s.id;
    return v;
  });
}

void Engine::advance_clock(Live& s, Millis to) {
  if (s.session->phase() == Phase::Packaged || s.session->phase() == Phase::PostSession) return;
  // Virtual time moves in tick_interval steps so timers fire where a real
  // clock would have fired them.
  const Millis step = std::max<Millis>(1, config_.tick_interval.count());
  Millis t = s.session->now();
  while (t < to) {
    t = std::min(to, (t / step + 1) * step);
    simulate_sensors(s, t);
    s.session->tick(t);
    if (s.recording() && !s.sensor_start) {
      s.sensor_start = t;
      s.sensor_until = t;
    }
    if (s.session->phase() == Phase::PostSession) return;
  }
}

void Engine::simulate_sensors(Live& s, Millis to) {
  if (!s.sensor_start || !s.recording() || to <= s.sensor_until) {
    if (s.sensor_start) s.sensor_until = std::max(s.sensor_until, to);
    return;
  }
  const Millis origin = *s.sensor_start;
  auto& rec = *s.recorder;
  const auto& sim = config_.sensors;

  if (sim.kinect) {
    const double period = 1000.0 / sim.kinect_hz;
    while (true) {
      const Millis t = origin + static_cast<Millis>(std::llround(static_cast<double>(s.kinect_frames) * period));
      if (t > to) break;
      if (t > s.sensor_until || s.kinect_frames == 0) {
        const double phase = static_cast<double>(t) / 1000.0;
        sensors::KinectFrame frame{s.wall_clock_ms + t, {}};
        frame.bodies.push_back(sensors::synthetic_body(1, {-0.4 + 0.03 * std::sin(phase), 0.0, 1.6}));
        frame.bodies.push_back(sensors::synthetic_body(2, {0.4 + 0.03 * std::cos(phase), 0.0, 1.6}));
        if (sim.bystander_every > 0 && s.kinect_frames % static_cast<std::uint64_t>(sim.bystander_every) == 0) {
          frame.bodies.push_back(sensors::synthetic_body(3, {0.0, 0.0, 3.0}));
        }
        auto filtered = sensors::filter_bodies(frame);
        if (auto* kept = std::get_if<sensors::KinectFrame>(&filtered)) rec.kinect_frame(*kept);
      }
      ++s.kinect_frames;
    }
  }

  if (sim.e4) {
    const double start_epoch = static_cast<double>(s.wall_clock_ms + origin) / 1000.0;
    for (Side side : {Side::Left, Side::Right}) {
      for (auto ch : sensors::kE4Channels) {
        auto& n = s.e4_samples[{side, ch}];
        const double rate = sensors::nominal_rate(ch);
        std::vector<std::vector<double>> rows;
        while (true) {
          const double t_ms = static_cast<double>(n) * 1000.0 / rate;
          if (origin + static_cast<Millis>(t_ms) > to) break;
          const double ts = t_ms / 1000.0;
          const double jitter = s.sensor_rng.uniform01() - 0.5;
          switch (ch) {
            case sensors::E4Channel::BVP:
              rows.push_back({std::round(100.0 * (40.0 * std::sin(2.0 * std::numbers::pi * 1.2 * ts) + jitter)) / 100.0});
              break;
            case sensors::E4Channel::EDA: rows.push_back({std::round(1e4 * (0.35 + 0.01 * jitter)) / 1e4}); break;
            case sensors::E4Channel::TEMP: rows.push_back({std::round(100.0 * (32.5 + 0.05 * jitter)) / 100.0}); break;
            case sensors::E4Channel::ACC:
              rows.push_back({std::round(8.0 * jitter), std::round(8.0 * (s.sensor_rng.uniform01() - 0.5)), 64.0});
              break;
            case sensors::E4Channel::HR: rows.push_back({std::round(100.0 * (72.0 + jitter)) / 100.0}); break;
          }
          ++n;
        }
        if (!rows.empty() || n == 0) rec.e4_samples(side, ch, start_epoch, rows);
      }
    }
  }
  s.sensor_until = to;
}

std::vector<StreamEvent> Engine::events(const std::string& id, std::uint64_t cursor, std::chrono::milliseconds wait) {
  Live& s = find(id);
  std::unique_lock lock(events_mu_);
  auto ready = [&] { return s.finished || (!s.events.empty() && s.events.back().seq > cursor); };
  if (wait.count() > 0) events_cv_.wait_for(lock, wait, ready);
  std::vector<StreamEvent> out;
  for (const auto& e : s.events) {
    if (e.seq > cursor) out.push_back(e);
  }
  return out;
}

bool Engine::finished(const std::string& id) {
  Live& s = find(id);
  std::lock_guard lock(events_mu_);
  return s.finished;
}

nlohmann::json Engine::wand_ports() {
  auto verdicts = probe_wand_ports(config_.wand_ports, config_.probe_window);
  nlohmann::json ports = nlohmann::json::array();
  nlohmann::json selected = nullptr;
  for (const auto& v : verdicts) {
    nlohmann::json p{{"port", v.port}, {"name", v.name}, {"verdict", v.verdict}};
    if (!v.note.empty()) p["note"] = v.note;
    ports.push_back(p);
    if (v.verdict && selected.is_null()) selected = v.port;
  }
  return {{"ports", ports}, {"selected", selected}};
}

}  // namespace sarvr::engine
