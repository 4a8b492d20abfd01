#include "sarvr/session.hpp"

#include <algorithm>
#include <set>

namespace sarvr::session {

// --- lifecycle ---------------------------------------------------------------------

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::PreSession: return "PreSession";
    case Phase::Baseline: return "Baseline";
    case Phase::ActivityRunning: return "ActivityRunning";
    case Phase::Break: return "Break";
    case Phase::PostSession: return "PostSession";
    case Phase::Packaged: return "Packaged";
  }
  return "PreSession";
}

std::string_view to_string(LifecycleEvent e) {
  switch (e) {
    case LifecycleEvent::ChecksPassed: return "ChecksPassed";
    case LifecycleEvent::BaselineElapsed: return "BaselineElapsed";
    case LifecycleEvent::StartActivity: return "StartActivity";
    case LifecycleEvent::Pause: return "Pause";
    case LifecycleEvent::BreakElapsed: return "BreakElapsed";
    case LifecycleEvent::EndActivity: return "EndActivity";
    case LifecycleEvent::PackagingDone: return "PackagingDone";
  }
  return "ChecksPassed";
}

std::optional<LifecycleEvent> lifecycle_event_from_string(std::string_view s) {
  for (auto e : kLifecycleEvents) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

std::optional<Phase> next_phase(Phase from, LifecycleEvent event) {
  using E = LifecycleEvent;
  switch (from) {
    case Phase::PreSession:
      if (event == E::ChecksPassed) return Phase::Baseline;
      break;
    case Phase::Baseline:
      if (event == E::BaselineElapsed) return Phase::ActivityRunning;
      break;
    case Phase::ActivityRunning:
      if (event == E::Pause) return Phase::Break;
      if (event == E::EndActivity) return Phase::PostSession;
      break;
    case Phase::Break:
      if (event == E::BreakElapsed || event == E::StartActivity) return Phase::ActivityRunning;
      break;
    case Phase::PostSession:
      if (event == E::PackagingDone) return Phase::Packaged;
      break;
    case Phase::Packaged: break;
  }
  return std::nullopt;
}

// --- configuration -----------------------------------------------------------------

bool adapter_allowed(ActivityKind activity, AdapterKind kind) {
  if (kind == AdapterKind::Simulated) return true;
  if (activity == ActivityKind::Spelling) return kind == AdapterKind::Animal;
  return kind == AdapterKind::Humanoid || kind == AdapterKind::Avatar;
}

ParticipantNames SessionConfig::names() const {
  return {participant(Side::Left).display_name, participant(Side::Right).display_name};
}

void SessionConfig::validate() const {
  auto bad = [](const std::string& why) { throw Error(ErrorCode::InvalidConfig, why); };
  if (facility_id.empty()) bad("facility_id is required");
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& p = participants[i];
    const Side expected = i == 0 ? Side::Left : Side::Right;
    if (p.id.empty()) bad("participant " + std::to_string(i + 1) + " needs an id");
    if (p.display_name.empty()) bad("participant " + std::to_string(i + 1) + " needs a name");
    if (p.side != expected) bad("participant " + std::to_string(i + 1) + " must sit " + std::string(to_string(expected)));
    if (p.wand_color != wand_color_for(p.side)) {
      bad(std::string(to_string(p.side)) + " participant holds the " + std::string(to_string(wand_color_for(p.side))) +
          " wand");
    }
  }
  if (participants[0].id == participants[1].id) bad("participant ids must differ");
  if (level < kTutorialLevel || level > kMaxLevel) bad("level must be 1..4, got " + std::to_string(level));
  if (!adapter_allowed(activity, robot.kind)) {
    bad(std::string(to_string(activity)) + " cannot run with a " + std::string(to_string(robot.kind)) + " robot");
  }
  if (baseline_seconds < 0) bad("baseline_seconds must be >= 0");
  if (break_seconds < 0) bad("break_seconds must be >= 0");
  if (feedback_min_gap < 0 || feedback_max_age < 0) bad("feedback timings must be >= 0");
  if (idle_window <= 0) bad("idle_window must be > 0");
  if (spelling_rounds < 1) bad("spelling_rounds must be >= 1");
  if (spelling_excess < 0 || spelling_excess > spelling::kMaxExcess) bad("spelling_excess must be 0..12");
  if (!(assignment.decay > 0.0 && assignment.decay <= 1.0)) bad("assignment decay must be in (0, 1]");
  try {
    if (chart) chart->validate();
    if (canvas) canvas->validate();
  } catch (const Error& e) {
    bad(e.what());
  }
}

namespace {

template <typename T>
T field(const nlohmann::json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad field '") + key + "'");
  }
}

AdapterConfig robot_from_json(const nlohmann::json& j) {
  AdapterConfig r;
  if (!j.is_object()) return r;
  auto kind = adapter_kind_from_string(field<std::string>(j, "kind", "Simulated"));
  if (!kind) throw Error(ErrorCode::InvalidConfig, "unknown robot kind");
  r.kind = *kind;
  r.address = field<std::string>(j, "address", "");
  r.port = field<std::uint16_t>(j, "port", 0);
  r.api_key = field<std::string>(j, "api_key", "");
  r.timeout = std::chrono::milliseconds(field<std::int64_t>(j, "timeout_ms", 2000));
  r.simulate_handshake_mismatch = field<bool>(j, "simulate_handshake_mismatch", false);
  return r;
}

nlohmann::json robot_to_json(const AdapterConfig& r) {
  nlohmann::json j{{"kind", to_string(r.kind)}, {"timeout_ms", r.timeout.count()}};
  if (!r.address.empty()) j["address"] = r.address;
  if (r.port) j["port"] = r.port;
  if (r.simulate_handshake_mismatch) j["simulate_handshake_mismatch"] = true;
  return j;
}

}  // namespace

SessionConfig SessionConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be an object");
  SessionConfig c;
  c.facility_id = field<std::string>(j, "facility_id", "");
  auto ps = j.find("participants");
  if (ps == j.end() || !ps->is_array() || ps->size() != 2) {
    throw Error(ErrorCode::InvalidConfig, "exactly two participants are required");
  }
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& pj = (*ps)[i];
    if (!pj.is_object()) throw Error(ErrorCode::InvalidConfig, "participant must be an object");
    auto& p = c.participants[i];
    p.id = field<std::string>(pj, "id", "");
    p.display_name = field<std::string>(pj, "name", field<std::string>(pj, "display_name", ""));
    p.side = i == 0 ? Side::Left : Side::Right;
    if (pj.contains("side")) {
      auto s = side_from_string(field<std::string>(pj, "side", ""));
      if (!s) throw Error(ErrorCode::InvalidConfig, "bad side");
      p.side = *s;
    }
    p.wand_color = wand_color_for(p.side);
    if (pj.contains("wand_color")) {
      auto w = wand_color_from_string(field<std::string>(pj, "wand_color", ""));
      if (!w) throw Error(ErrorCode::InvalidConfig, "bad wand_color");
      p.wand_color = *w;
    }
  }
  auto activity = activity_kind_from_string(field<std::string>(j, "activity", "Music"));
  if (!activity) throw Error(ErrorCode::InvalidConfig, "unknown activity");
  c.activity = *activity;
  c.level = field<int>(j, "level", 2);
  if (j.contains("robot")) c.robot = robot_from_json(j["robot"]);
  c.baseline_seconds = field<int>(j, "baseline_seconds", kBaselineSeconds);
  c.break_seconds = field<int>(j, "break_seconds", kBreakSeconds);
  c.rng_seed = field<std::uint64_t>(j, "rng_seed", 0);
  c.feedback_min_gap = field<Millis>(j, "feedback_min_gap_ms", 10'000);
  c.feedback_max_age = field<Millis>(j, "feedback_max_age_ms", 30'000);
  c.idle_window = field<Millis>(j, "idle_window_ms", 15'000);
  try {
    if (j.contains("chart")) c.chart = music::BeatChart::from_json(j["chart"]);
    if (j.contains("fishing")) c.fishing = fishing::LevelSpec::from_json(j["fishing"]);
    if (j.contains("canvas")) c.canvas = painting::CanvasSpec::from_json(j["canvas"]);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  if (auto a = j.find("assignment"); a != j.end() && a->is_object()) {
    auto mode = music::assignment_mode_from_string(field<std::string>(*a, "mode", "Probability"));
    if (!mode) throw Error(ErrorCode::InvalidConfig, "unknown assignment mode");
    c.assignment.mode = *mode;
    c.assignment.decay = field<double>(*a, "decay", 0.5);
  }
  c.spelling_words = field<std::vector<std::string>>(j, "spelling_words", {});
  c.spelling_rounds = field<int>(j, "spelling_rounds", 3);
  c.spelling_excess = field<int>(j, "spelling_excess", spelling::kDefaultExcess);
  c.validate();
  return c;
}

nlohmann::json SessionConfig::to_json() const {
  nlohmann::json ps = nlohmann::json::array();
  for (const auto& p : participants) {
    ps.push_back({{"id", p.id}, {"name", p.display_name}, {"side", to_string(p.side)},
                  {"wand_color", to_string(p.wand_color)}});
  }
  nlohmann::json j{{"facility_id", facility_id},
                   {"participants", ps},
                   {"activity", to_string(activity)},
                   {"level", level},
                   {"robot", robot_to_json(robot)},
                   {"baseline_seconds", baseline_seconds},
                   {"break_seconds", break_seconds},
                   {"rng_seed", rng_seed},
                   {"feedback_min_gap_ms", feedback_min_gap},
                   {"feedback_max_age_ms", feedback_max_age},
                   {"idle_window_ms", idle_window},
                   {"assignment", {{"mode", to_string(assignment.mode)}, {"decay", assignment.decay}}},
                   {"spelling_rounds", spelling_rounds},
                   {"spelling_excess", spelling_excess}};
  if (chart) j["chart"] = chart->to_json();
  if (fishing) j["fishing"] = fishing->to_json();
  if (canvas) j["canvas"] = canvas->to_json();
  if (!spelling_words.empty()) j["spelling_words"] = spelling_words;
  return j;
}

// --- checks ------------------------------------------------------------------------

std::string_view to_string(DeviceState s) {
  switch (s) {
    case DeviceState::Ok: return "Ok";
    case DeviceState::Missing: return "Missing";
    case DeviceState::Fault: return "Fault";
  }
  return "Missing";
}

bool CheckReport::all_ok() const {
  for (auto name : kDevices) {
    auto it = devices.find(std::string(name));
    if (it == devices.end() || it->second.state != DeviceState::Ok) return false;
  }
  return true;
}

nlohmann::json CheckReport::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, st] : devices) {
    j[name] = st.detail.empty() ? nlohmann::json(to_string(st.state))
                                : nlohmann::json{{"state", to_string(st.state)}, {"detail", st.detail}};
  }
  return j;
}

// --- activity inputs ---------------------------------------------------------------

namespace {

Side side_field(const nlohmann::json& j, Side fallback) {
  auto it = j.find("side");
  if (it == j.end()) return fallback;
  if (!it->is_string()) throw Error(ErrorCode::ParseError, "side must be a string");
  auto s = side_from_string(it->get<std::string>());
  if (!s) throw Error(ErrorCode::ParseError, "bad side '" + it->get<std::string>() + "'");
  return *s;
}

Point point_field(const nlohmann::json& j) {
  auto x = j.find("x");
  auto y = j.find("y");
  if (x == j.end() || y == j.end() || !x->is_number() || !y->is_number()) {
    throw Error(ErrorCode::ParseError, "move needs numeric x and y");
  }
  return {x->get<double>(), y->get<double>()};
}

template <typename T>
T required(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::ParseError, std::string("missing '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::ParseError, std::string("bad '") + key + "'");
  }
}

}  // namespace

ActivityEvent parse_activity_event(ActivityKind kind, const nlohmann::json& j, Millis t) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw Error(ErrorCode::ParseError, "activity event needs a string 'type'");
  }
  const std::string type = j["type"].get<std::string>();
  auto unknown = [&]() -> ActivityEvent {
    throw Error(ErrorCode::ParseError, "'" + type + "' is not a " + std::string(to_string(kind)) + " event");
  };
  switch (kind) {
    case ActivityKind::Music:
      if (type == "hit") return music::MusicEvent{music::Hit{side_field(j, Side::Left), t}};
      if (type == "tick") return music::MusicEvent{music::Tick{t}};
      return unknown();
    case ActivityKind::Fishing:
      if (type == "cast") return fishing::FishingEvent{fishing::CastGesture{side_field(j, fishing::kRodSide), t}};
      if (type == "move") return fishing::FishingEvent{fishing::Move{side_field(j, Side::Left), point_field(j), t}};
      if (type == "grab") return fishing::FishingEvent{fishing::Grab{side_field(j, Side::Left), t}};
      if (type == "release") return fishing::FishingEvent{fishing::Release{side_field(j, Side::Left), t}};
      if (type == "tick") return fishing::FishingEvent{fishing::Tick{t}};
      return unknown();
    case ActivityKind::Painting:
      if (type == "select_color") {
        return painting::PaintingEvent{
            painting::SelectColor{side_field(j, Side::Left), required<std::string>(j, "color"), t}};
      }
      if (type == "paint") {
        return painting::PaintingEvent{painting::Paint{side_field(j, Side::Left), required<int>(j, "segment_id"), t}};
      }
      if (type == "move") return painting::PaintingEvent{painting::Move{side_field(j, Side::Left), point_field(j), t}};
      if (type == "grab") return painting::PaintingEvent{painting::Grab{side_field(j, Side::Left), t}};
      if (type == "tick") return painting::PaintingEvent{painting::Tick{t}};
      return unknown();
    case ActivityKind::Spelling:
      if (type == "select_letter") {
        return spelling::SpellingEvent{
            spelling::SelectLetter{side_field(j, Side::Left), required<int>(j, "letter_id"), t}};
      }
      if (type == "move") return spelling::SpellingEvent{spelling::Move{side_field(j, Side::Left), point_field(j), t}};
      if (type == "grab") return spelling::SpellingEvent{spelling::Grab{side_field(j, Side::Left), t}};
      if (type == "hint") return spelling::SpellingEvent{spelling::HintRequest{t}};
      if (type == "set_excess") return spelling::SpellingEvent{spelling::SetExcess{required<int>(j, "excess_count"), t}};
      if (type == "tick") return spelling::SpellingEvent{spelling::Tick{t}};
      return unknown();
  }
  return unknown();
}

namespace {

template <typename E>
nlohmann::json sided(const char* type, const E& e) {
  return {{"type", type}, {"side", to_string(e.side)}, {"t", e.t}};
}

template <typename E>
nlohmann::json moved(const E& e) {
  auto j = sided("move", e);
  j["x"] = e.xy.x;
  j["y"] = e.xy.y;
  return j;
}

nlohmann::json ticked(Millis t) { return {{"type", "tick"}, {"t", t}}; }

}  // namespace

nlohmann::json to_json(const ActivityEvent& ev) {
  return std::visit(
      [](const auto& inner) -> nlohmann::json {
        return std::visit(
            [](const auto& e) -> nlohmann::json {
              using E = std::decay_t<decltype(e)>;
              if constexpr (std::is_same_v<E, music::Hit>) return sided("hit", e);
              else if constexpr (std::is_same_v<E, music::Spawn>) return {{"type", "spawn"}, {"t", e.t}};
              else if constexpr (std::is_same_v<E, fishing::CastGesture>) return sided("cast", e);
              else if constexpr (std::is_same_v<E, fishing::Move> || std::is_same_v<E, painting::Move> ||
                                 std::is_same_v<E, spelling::Move>) return moved(e);
              else if constexpr (std::is_same_v<E, fishing::Grab> || std::is_same_v<E, painting::Grab> ||
                                 std::is_same_v<E, spelling::Grab>) return sided("grab", e);
              else if constexpr (std::is_same_v<E, fishing::Release>) return sided("release", e);
              else if constexpr (std::is_same_v<E, painting::SelectColor>) {
                auto j = sided("select_color", e);
                j["color"] = e.color;
                return j;
              } else if constexpr (std::is_same_v<E, painting::Paint>) {
                auto j = sided("paint", e);
                j["segment_id"] = e.segment_id;
                return j;
              } else if constexpr (std::is_same_v<E, spelling::SelectLetter>) {
                auto j = sided("select_letter", e);
                j["letter_id"] = e.letter_id;
                return j;
              } else if constexpr (std::is_same_v<E, spelling::HintRequest>) {
                return {{"type", "hint"}, {"t", e.t}};
              } else if constexpr (std::is_same_v<E, spelling::SetExcess>) {
                return {{"type", "set_excess"}, {"excess_count", e.excess_count}, {"t", e.t}};
              } else {
                return ticked(e.t);
              }
            },
            inner);
      },
      ev);
}

// --- session -----------------------------------------------------------------------

Session::Session(SessionConfig config, std::shared_ptr<const Vocabulary> vocab, Sink sink, Millis now)
    : config_((config.validate(), std::move(config))),
      vocab_(std::move(vocab)),
      sink_(std::move(sink)),
      policy_(vocab_, config_.feedback_min_gap, config_.feedback_max_age),
      entered_at_(now),
      now_(now),
      activity_(make_activity()) {
  emit("session", "created",
       {{"facility_id", config_.facility_id},
        {"participants", {config_.participants[0].id, config_.participants[1].id}},
        {"activity", to_string(config_.activity)},
        {"level", config_.level},
        {"rng_seed", config_.rng_seed},
        {"phase", to_string(phase_)}});
}

Session::Activity Session::make_activity() const {
  const auto& c = config_;
  switch (c.activity) {
    case ActivityKind::Music: {
      music::MusicConfig mc;
      mc.level = c.level;
      mc.chart = c.chart ? *c.chart : music::BeatChart::regular("practice", 24, 1500, 3000, 2000);
      mc.policy = c.assignment;
      mc.idle_window = c.idle_window;
      return music::MusicActivity(std::move(mc), c.rng_seed);
    }
    case ActivityKind::Fishing:
      return fishing::FishingActivity(c.level, c.fishing ? *c.fishing : fishing::LevelSpec::for_level(c.level),
                                      c.rng_seed);
    case ActivityKind::Painting:
      return painting::PaintingActivity(c.level, c.canvas ? *c.canvas : painting::CanvasSpec::for_level(c.level),
                                        c.idle_window);
    case ActivityKind::Spelling: {
      spelling::SpellingConfig sc;
      sc.level = c.level;
      sc.rounds = c.spelling_rounds;
      sc.excess_count = c.spelling_excess;
      sc.words = c.spelling_words;
      return spelling::SpellingActivity(std::move(sc), spelling::Lexicon::builtin(), c.rng_seed);
    }
  }
  throw Error(ErrorCode::InvalidConfig, "unknown activity");
}

void Session::emit(const std::string& component, const std::string& event, nlohmann::json payload,
                   const std::string& stream) {
  if (sink_) sink_(Emitted{stream, recorder::LogRecord{now_, component, event, std::move(payload)}});
}

void Session::set_clock(Millis now) {
  if (now < now_) {
    throw Error(ErrorCode::ClockRegression, std::to_string(now) + " < " + std::to_string(now_));
  }
  now_ = now;
}

void Session::note(const std::string& component, const std::string& event, nlohmann::json payload, Millis now) {
  set_clock(now);
  emit(component, event, std::move(payload));
}

void Session::attach_robot(std::shared_ptr<RobotAdapter> robot) {
  robot_ = std::move(robot);
  if (!robot_) {
    speaker_.reset();
    return;
  }
  if (config_.activity == ActivityKind::Spelling && robot_->kind() == AdapterKind::Animal) {
    speaker_ = std::make_shared<AvatarAdapter>();
  } else {
    speaker_ = robot_;
  }
  nlohmann::json kinds = nlohmann::json::array();
  for (auto k : adapter_kinds()) kinds.push_back(to_string(k));
  emit("robot", "attached", {{"adapters", kinds}});
}

std::vector<AdapterKind> Session::adapter_kinds() const {
  std::vector<AdapterKind> out;
  if (robot_) out.push_back(robot_->kind());
  if (speaker_ && speaker_ != robot_) out.push_back(speaker_->kind());
  return out;
}

const CheckReport& Session::run_preliminary_checks(const DeviceRegistry& registry, Millis now) {
  set_clock(now);
  CheckReport report;
  for (auto name : kDevices) {
    const std::string key(name);
    auto it = registry.find(key);
    if (it != registry.end()) {
      report.devices[key] = it->second;
    } else if (key == "robot" && robot_) {
      report.devices[key] = robot_->connected() ? DeviceStatus::ok() : DeviceStatus::fault("robot not connected");
    } else {
      report.devices[key] = DeviceStatus{DeviceState::Missing, ""};
    }
  }
  checks_ = std::move(report);
  emit("session", "checks", {{"report", checks_->to_json()}, {"all_ok", checks_->all_ok()}});
  return *checks_;
}

void Session::advance(LifecycleEvent event, Millis now) {
  set_clock(now);
  auto next = next_phase(phase_, event);
  if (!next) {
    throw Error(ErrorCode::IllegalTransition, std::string(to_string(event)) + " in " + std::string(to_string(phase_)));
  }
  if (event == LifecycleEvent::ChecksPassed && !(checks_ && checks_->all_ok())) {
    throw Error(ErrorCode::IllegalTransition, "ChecksPassed without a passing check report");
  }
  enter(*next, event);
}

void Session::enter(Phase phase, LifecycleEvent cause) {
  const Phase from = phase_;
  phase_ = phase;
  entered_at_ = now_;
  emit("session", "phase", {{"from", to_string(from)}, {"to", to_string(phase)}, {"cause", to_string(cause)}});
  if (phase == Phase::ActivityRunning && !activity_started_) {
    activity_started_ = true;
    apply(std::visit([&](auto& a) { return a.start(now_); }, activity_), std::nullopt);
  }
  // A zero-length baseline elapses on entry.
  if (phase == Phase::Baseline && config_.baseline_seconds == 0) enter(Phase::ActivityRunning, LifecycleEvent::BaselineElapsed);
}

void Session::tick(Millis now) {
  set_clock(now);
  if (phase_ == Phase::Baseline && now_ - entered_at_ >= Millis{config_.baseline_seconds} * 1000) {
    enter(Phase::ActivityRunning, LifecycleEvent::BaselineElapsed);
  } else if (phase_ == Phase::Break && now_ - entered_at_ >= Millis{config_.break_seconds} * 1000) {
    enter(Phase::ActivityRunning, LifecycleEvent::BreakElapsed);
  }
  if (phase_ != Phase::ActivityRunning) return;
  switch (config_.activity) {
    case ActivityKind::Music: drive(music::MusicEvent{music::Tick{now_}}); break;
    case ActivityKind::Fishing: drive(fishing::FishingEvent{fishing::Tick{now_}}); break;
    case ActivityKind::Painting: drive(painting::PaintingEvent{painting::Tick{now_}}); break;
    case ActivityKind::Spelling: drive(spelling::SpellingEvent{spelling::Tick{now_}}); break;
  }
  poll_feedback();
}

void Session::input(const ActivityEvent& event, Millis now, bool synthetic) {
  set_clock(now);
  if (phase_ != Phase::ActivityRunning) {
    throw Error(ErrorCode::ActivityNotRunning, "session is in " + std::string(to_string(phase_)));
  }
  auto payload = to_json(event);
  payload["t"] = now_;
  if (synthetic) payload["synthetic"] = true;
  emit("input", payload["type"].get<std::string>(), payload);
  // Stamp the event with the session clock.
  ActivityEvent stamped = std::visit(
      [&](auto inner) -> ActivityEvent {
        std::visit([&](auto& e) { e.t = now_; }, inner);
        return inner;
      },
      event);
  drive(stamped);
  poll_feedback();
}

void Session::drive(const ActivityEvent& event) {
  try {
    std::visit(
        [&](auto& activity) {
          using A = std::decay_t<decltype(activity)>;
          if constexpr (std::is_same_v<A, music::MusicActivity>) {
            auto* e = std::get_if<music::MusicEvent>(&event);
            if (!e) throw Error(ErrorCode::ParseError, "not a music event");
            apply(activity.step(*e), std::nullopt);
          } else if constexpr (std::is_same_v<A, fishing::FishingActivity>) {
            auto* e = std::get_if<fishing::FishingEvent>(&event);
            if (!e) throw Error(ErrorCode::ParseError, "not a fishing event");
            apply(activity.step(*e), std::nullopt);
          } else if constexpr (std::is_same_v<A, painting::PaintingActivity>) {
            auto* e = std::get_if<painting::PaintingEvent>(&event);
            if (!e) throw Error(ErrorCode::ParseError, "not a painting event");
            auto r = activity.step(*e);
            std::optional<std::string> why;
            if (r.rejection) why = std::string(painting::to_string(*r.rejection));
            apply(std::move(r.output), why);
          } else {
            auto* e = std::get_if<spelling::SpellingEvent>(&event);
            if (!e) throw Error(ErrorCode::ParseError, "not a spelling event");
            auto r = activity.step(*e);
            std::optional<std::string> why;
            if (r.rejection) why = std::string(spelling::to_string(*r.rejection));
            apply(std::move(r.output), why);
          }
        },
        activity_);
  } catch (const Error& err) {
    emit("input", "error", {{"code", to_string(err.code())}, {"detail", err.detail()}});
  }
}

void Session::apply(StepOutput&& out, const std::optional<std::string>& rejection) {
  const std::string component(to_lower(to_string(config_.activity)));
  if (rejection) emit(component, "rejected", {{"reason", *rejection}});
  for (auto& e : out.effects) {
    emit(component, e.name, e.payload);
    if (e.name == "trick") perform_trick(e.payload.value("name", ""));
  }
  if (out.score_delta != 0) {
    total_score_ += out.score_delta;
    nlohmann::json s{{"delta", out.score_delta}, {"total", total_score_}};
    if (auto l = score(Side::Left)) s["left"] = *l;
    if (auto r = score(Side::Right)) s["right"] = *r;
    emit("score", "changed", s);
  }
  for (const auto& f : out.feedback) request_feedback(f);
  if (!completion_logged_ && activity_complete()) {
    completion_logged_ = true;
    emit("session", "activity_complete", activity_summary());
  }
}

void Session::request_feedback(const FeedbackEvent& e) {
  emit("feedback", "requested", sarvr::to_json(e));
  std::optional<FeedbackEvent> ready;
  try {
    ready = policy_.submit(e, now_);
  } catch (const Error& err) {
    emit("feedback", "error", {{"code", to_string(err.code())}, {"detail", err.detail()}});
    return;
  }
  if (ready) speak(*ready);
}

void Session::poll_feedback() {
  while (auto e = policy_.poll(now_)) speak(*e);
}

void Session::speak(const FeedbackEvent& e) {
  nlohmann::json payload = sarvr::to_json(e);
  if (!speaker_) {
    emit("feedback", "dispatched", payload);
    last_utterance_ = payload;
    return;
  }
  RobotCommand cmd;
  try {
    cmd = translate(*vocab_, e, speaker_->kind(), config_.names());
  } catch (const Error& err) {
    emit("feedback", "error", {{"code", to_string(err.code())}, {"detail", err.detail()}});
    return;
  }
  payload["command"] = sarvr::to_json(cmd);
  emit("feedback", "dispatched", payload);
  last_utterance_ = payload;
  dispatch(speaker_, cmd, "utterance");
}

void Session::perform_trick(const std::string& trick) {
  if (!robot_ || trick.empty()) return;
  const AdapterKind kind = robot_->kind();
  if (kind != AdapterKind::Animal && kind != AdapterKind::Simulated) return;
  try {
    auto cmd = translate(*vocab_, trick_code(trick), kind, config_.names());
    emit("robot", "trick", {{"trick", trick}, {"command", sarvr::to_json(cmd)}});
    dispatch(robot_, cmd, "trick");
  } catch (const Error& err) {
    emit("robot", "error", {{"code", to_string(err.code())}, {"detail", err.detail()}});
  }
}

void Session::dispatch(const std::shared_ptr<RobotAdapter>& adapter, const RobotCommand& cmd, const std::string& what) {
  try {
    auto ack = adapter->dispatch(cmd);
    emit("robot", "ack", {{"what", what}, {"detail", ack.detail}});
  } catch (const Error& err) {
    emit("robot", "error", {{"what", what}, {"code", to_string(err.code())}, {"detail", err.detail()}});
    // Keep the session going on screen when the coach drops out.
    if (adapter == speaker_ && speaker_->kind() != AdapterKind::Avatar) {
      speaker_ = std::make_shared<AvatarAdapter>();
      emit("robot", "degraded", {{"speaker", "Avatar"}});
      try {
        auto fallback = translate(*vocab_, cmd.params.count("code") ? cmd.params.at("code") : "", AdapterKind::Avatar,
                                  config_.names());
        speaker_->dispatch(fallback);
      } catch (const Error&) {
        // Codes without an avatar template stay unspoken.
      }
    }
  }
}

void Session::wand_frame(const wand::WandFrame& frame, Millis now, bool synthetic) {
  set_clock(now);
  if (phase_ != Phase::Baseline && phase_ != Phase::ActivityRunning) {
    throw Error(ErrorCode::ActivityNotRunning, "wand input in " + std::string(to_string(phase_)));
  }
  const Side side = side_for(frame.wand_id);
  auto& ws = wands_[side == Side::Left ? 0 : 1];
  const std::string stream = "wand_" + to_lower(to_string(frame.wand_id));

  auto obs = ws.sequence.observe(frame.seq);
  nlohmann::json rec{{"seq", frame.seq}, {"device_t", frame.t}};
  if (synthetic) rec["synthetic"] = true;
  if (obs.dropped) rec["dropped"] = obs.dropped;
  if (obs.stale) {
    rec["stale"] = true;
    emit("wand", "stale", rec, stream);
    return;
  }

  std::vector<ActivityEvent> derived;
  const ActivityKind kind = config_.activity;
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, wand::Orientation>) {
          rec["q"] = {p.q.w, p.q.x, p.q.y, p.q.z};
          ws.last_q = p.q;
          ws.cursor = wand::orientation_to_cursor(p.q, ws.calibration);
          rec["cursor"] = {ws.cursor.x, ws.cursor.y};
          emit("wand", "orientation", rec, stream);
          auto g = ws.gestures.push({now_, p.q});
          if (g) emit("wand", "gesture", {{"side", to_string(side)}, {"kind", to_string(g->kind)}}, stream);
          switch (kind) {
            case ActivityKind::Music:
              if (g && g->kind == wand::GestureKind::DrumHit) derived.push_back(music::MusicEvent{music::Hit{side, now_}});
              break;
            case ActivityKind::Fishing:
              if (g && g->kind == wand::GestureKind::Cast) {
                derived.push_back(fishing::FishingEvent{fishing::CastGesture{side, now_}});
              }
              derived.push_back(fishing::FishingEvent{fishing::Move{side, ws.cursor, now_}});
              break;
            case ActivityKind::Painting:
              derived.push_back(painting::PaintingEvent{painting::Move{side, ws.cursor, now_}});
              break;
            case ActivityKind::Spelling:
              derived.push_back(spelling::SpellingEvent{spelling::Move{side, ws.cursor, now_}});
              break;
          }
        } else if constexpr (std::is_same_v<P, wand::Button>) {
          rec["button"] = p.id == wand::ButtonId::A ? "A" : "B";
          rec["pressed"] = p.pressed;
          emit("wand", "button", rec, stream);
          if (p.id == wand::ButtonId::B) {
            if (p.pressed && ws.last_q) {
              // The current pointing direction becomes screen center.
              ws.calibration = wand::recenter(ws.calibration, *ws.last_q);
              ws.cursor = {0.5, 0.5};
              emit("wand", "recenter", {{"side", to_string(side)}}, stream);
            }
            return;
          }
          switch (kind) {
            case ActivityKind::Music: break;
            case ActivityKind::Fishing:
              if (p.pressed) derived.push_back(fishing::FishingEvent{fishing::Grab{side, now_}});
              else derived.push_back(fishing::FishingEvent{fishing::Release{side, now_}});
              break;
            case ActivityKind::Painting:
              if (p.pressed) derived.push_back(painting::PaintingEvent{painting::Grab{side, now_}});
              break;
            case ActivityKind::Spelling:
              if (p.pressed) derived.push_back(spelling::SpellingEvent{spelling::Grab{side, now_}});
              break;
          }
        } else if constexpr (std::is_same_v<P, wand::Dial>) {
          rec["delta"] = p.delta;
          emit("wand", "dial", rec, stream);
        } else {
          ws.battery = p.state;
          rec["state"] = wand::to_string(p.state);
          rec["level"] = p.level;
          nlohmann::json leds = nlohmann::json::array();
          for (auto c : wand::led_colors(p.state)) leds.push_back(c);
          rec["leds"] = leds;
          emit("wand", "battery", rec, stream);
        }
      },
      frame.payload);

  if (phase_ != Phase::ActivityRunning) return;
  for (const auto& ev : derived) {
    // Cursor motion stays in the wand stream; discrete actions are logged as input.
    auto j = to_json(ev);
    if (j["type"] != "move") {
      j["source"] = "wand";
      if (synthetic) j["synthetic"] = true;
      emit("input", j["type"].get<std::string>(), j);
    }
    drive(ev);
  }
  poll_feedback();
}

std::optional<int> Session::score(Side side) const {
  if (auto* m = std::get_if<music::MusicActivity>(&activity_)) return m->score(side);
  return std::nullopt;
}

bool Session::activity_complete() const {
  return std::visit([](const auto& a) { return a.complete(); }, activity_);
}

nlohmann::json Session::activity_summary() const {
  return std::visit([](const auto& a) { return a.summary(); }, activity_);
}

nlohmann::json Session::view() const {
  nlohmann::json adapters = nlohmann::json::array();
  for (auto k : adapter_kinds()) adapters.push_back(to_string(k));
  nlohmann::json scores{{"total", total_score_}};
  if (auto l = score(Side::Left)) scores["left"] = *l;
  if (auto r = score(Side::Right)) scores["right"] = *r;
  nlohmann::json j{{"phase", to_string(phase_)},
                   {"entered_at", entered_at_},
                   {"now", now_},
                   {"activity", to_string(config_.activity)},
                   {"level", config_.level},
                   {"participants",
                    {{{"id", config_.participants[0].id}, {"name", config_.participants[0].display_name}, {"side", "Left"}},
                     {{"id", config_.participants[1].id}, {"name", config_.participants[1].display_name}, {"side", "Right"}}}},
                   {"scores", scores},
                   {"state", activity_summary()},
                   {"complete", activity_complete()},
                   {"adapters", adapters},
                   {"last_utterance", last_utterance_ ? *last_utterance_ : nlohmann::json(nullptr)}};
  if (checks_) j["checks"] = checks_->to_json();
  return j;
}

}  // namespace sarvr::session
