#include <gtest/gtest.h>

#include "sarvr/session.hpp"

using namespace sarvr;
using namespace sarvr::session;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidConfig;
}

json base_config(const std::string& activity = "Music", int level = 3) {
  return {{"facility_id", "F02"},
          {"participants", {{{"id", "A1"}, {"name", "Ada"}}, {{"id", "B2"}, {"name", "Bo"}}}},
          {"activity", activity},
          {"level", level},
          {"baseline_seconds", 1},
          {"rng_seed", 9},
          {"feedback_min_gap_ms", 0}};
}

DeviceRegistry all_devices_ok() {
  DeviceRegistry r;
  for (auto d : kDevices) {
    if (d != "robot") r[std::string(d)] = DeviceStatus::ok();
  }
  return r;
}

struct Harness {
  std::vector<Emitted> log;
  std::shared_ptr<SimulatedAdapter> robot = std::make_shared<SimulatedAdapter>();
  Session s;

  explicit Harness(const json& cfg)
      : s(SessionConfig::from_json(cfg), std::make_shared<const Vocabulary>(Vocabulary::seed()),
          [this](const Emitted& e) { log.push_back(e); }) {
    s.attach_robot(robot);
  }

  void run_to_activity() {
    s.run_preliminary_checks(all_devices_ok(), 0);
    s.advance(LifecycleEvent::ChecksPassed, 0);
    s.tick(1000);
  }

  std::size_t count(const std::string& component, const std::string& event) const {
    return static_cast<std::size_t>(std::count_if(log.begin(), log.end(), [&](const Emitted& e) {
      return e.record.component == component && e.record.event == event;
    }));
  }
};

}  // namespace

TEST(Lifecycle, TransitionTableIsExactlyTheAllowedEdges) {
  using E = LifecycleEvent;
  const std::map<std::pair<Phase, E>, Phase> allowed = {
      {{Phase::PreSession, E::ChecksPassed}, Phase::Baseline},
      {{Phase::Baseline, E::BaselineElapsed}, Phase::ActivityRunning},
      {{Phase::ActivityRunning, E::Pause}, Phase::Break},
      {{Phase::ActivityRunning, E::EndActivity}, Phase::PostSession},
      {{Phase::Break, E::BreakElapsed}, Phase::ActivityRunning},
      {{Phase::Break, E::StartActivity}, Phase::ActivityRunning},
      {{Phase::PostSession, E::PackagingDone}, Phase::Packaged},
  };
  for (auto from : kPhases) {
    for (auto ev : kLifecycleEvents) {
      auto it = allowed.find({from, ev});
      auto got = next_phase(from, ev);
      if (it == allowed.end()) {
        EXPECT_FALSE(got) << to_string(from) << " + " << to_string(ev);
      } else {
        EXPECT_EQ(got, it->second) << to_string(from) << " + " << to_string(ev);
      }
    }
  }
  for (auto ev : kLifecycleEvents) EXPECT_EQ(lifecycle_event_from_string(to_string(ev)), ev);
}

TEST(Config, ValidationRejectsBadSessions) {
  EXPECT_NO_THROW(SessionConfig::from_json(base_config()).validate());
  auto expect_invalid = [](json j) {
    EXPECT_EQ(code_of([&] { SessionConfig::from_json(j).validate(); }), ErrorCode::InvalidConfig) << j.dump();
  };
  auto j = base_config();
  j["facility_id"] = "";
  expect_invalid(j);
  j = base_config();
  j["participants"][1]["id"] = "A1";
  expect_invalid(j);
  j = base_config();
  j["participants"].erase(1);
  expect_invalid(j);
  j = base_config();
  j["participants"][0]["wand_color"] = "Blue";
  expect_invalid(j);
  j = base_config();
  j["level"] = 5;
  expect_invalid(j);
  j = base_config();
  j["activity"] = "Chess";
  expect_invalid(j);
  j = base_config("Spelling", 2);
  j["robot"] = {{"kind", "Humanoid"}, {"address", "10.0.0.2"}, {"port", 9000}};
  expect_invalid(j);

  auto round = SessionConfig::from_json(base_config()).to_json();
  EXPECT_EQ(SessionConfig::from_json(round).to_json(), round);
  EXPECT_EQ(SessionConfig::from_json(base_config()).names().left, "Ada");
}

TEST(Config, AdapterMatrix) {
  for (auto a : {ActivityKind::Music, ActivityKind::Fishing, ActivityKind::Painting}) {
    EXPECT_TRUE(adapter_allowed(a, AdapterKind::Humanoid));
    EXPECT_TRUE(adapter_allowed(a, AdapterKind::Avatar));
    EXPECT_FALSE(adapter_allowed(a, AdapterKind::Animal));
  }
  EXPECT_TRUE(adapter_allowed(ActivityKind::Spelling, AdapterKind::Animal));
  EXPECT_FALSE(adapter_allowed(ActivityKind::Spelling, AdapterKind::Humanoid));
  for (auto a : {ActivityKind::Music, ActivityKind::Spelling}) EXPECT_TRUE(adapter_allowed(a, AdapterKind::Simulated));
}

TEST(Session, ChecksGateTheBaseline) {
  Harness h(base_config());
  EXPECT_EQ(code_of([&] { h.s.advance(LifecycleEvent::ChecksPassed, 0); }), ErrorCode::IllegalTransition);
  auto partial = all_devices_ok();
  partial.erase("kinect");
  EXPECT_FALSE(h.s.run_preliminary_checks(partial, 0).all_ok());
  EXPECT_EQ(h.s.checks()->devices.at("kinect").state, DeviceState::Missing);
  EXPECT_EQ(code_of([&] { h.s.advance(LifecycleEvent::ChecksPassed, 0); }), ErrorCode::IllegalTransition);

  const auto& ok = h.s.run_preliminary_checks(all_devices_ok(), 10);
  EXPECT_TRUE(ok.all_ok());
  EXPECT_EQ(ok.devices.at("robot").state, DeviceState::Ok);
  h.s.advance(LifecycleEvent::ChecksPassed, 10);
  EXPECT_EQ(h.s.phase(), Phase::Baseline);
}

TEST(Session, BaselineElapsesThenBreakAndResume) {
  Harness h(base_config());
  h.s.run_preliminary_checks(all_devices_ok(), 0);
  h.s.advance(LifecycleEvent::ChecksPassed, 0);
  h.s.tick(999);
  EXPECT_EQ(h.s.phase(), Phase::Baseline);
  EXPECT_EQ(code_of([&] { h.s.input(music::MusicEvent{music::Hit{Side::Left, 0}}, 999); }),
            ErrorCode::ActivityNotRunning);
  h.s.tick(1000);
  EXPECT_EQ(h.s.phase(), Phase::ActivityRunning);
  h.s.advance(LifecycleEvent::Pause, 2000);
  EXPECT_EQ(h.s.phase(), Phase::Break);
  h.s.advance(LifecycleEvent::StartActivity, 3000);
  EXPECT_EQ(h.s.phase(), Phase::ActivityRunning);
  EXPECT_EQ(code_of([&] { h.s.tick(2999); }), ErrorCode::ClockRegression);
  h.s.advance(LifecycleEvent::EndActivity, 4000);
  EXPECT_EQ(code_of([&] { h.s.advance(LifecycleEvent::Pause, 4000); }), ErrorCode::IllegalTransition);
  EXPECT_EQ(h.count("session", "phase"), 5u);
}

TEST(Session, RefusedInputIsLoggedNotThrown) {
  Harness h(base_config("Fishing", 3));
  h.run_to_activity();
  h.s.input(music::MusicEvent{music::Hit{Side::Left, 0}}, 1100);
  EXPECT_EQ(h.count("input", "error"), 1u);
  EXPECT_EQ(h.s.phase(), Phase::ActivityRunning);
}

TEST(Session, WandFramesDriveTheActivity) {
  Harness h(base_config("Painting", 3));
  h.run_to_activity();
  const auto canvas = painting::CanvasSpec::for_level(3);
  const auto slot = canvas.palette_slot(Side::Left, 0).center();

  // Yaw right moves the cursor right, pitch up moves it up the screen.
  wand::WandEmulator red(WandColor::Red);
  h.s.wand_frame(red.orientation(0, wand::Quaternion::from_yaw_pitch(slot.x - 0.5, 0.5 - slot.y)), 1100);
  EXPECT_NEAR(h.s.wand(Side::Left).cursor.x, slot.x, 1e-3);
  EXPECT_NEAR(h.s.wand(Side::Left).cursor.y, slot.y, 1e-3);
  h.s.wand_frame(red.button(10, wand::ButtonId::A, true), 1110);
  EXPECT_EQ(h.s.activity_summary()["selected"]["Left"], canvas.palettes.at(Side::Left).at(0));
  EXPECT_EQ(h.count("input", "grab"), 1u);

  h.s.wand_frame(red.button(20, wand::ButtonId::B, true), 1120);
  EXPECT_EQ(h.s.wand(Side::Left).cursor.x, 0.5);
  EXPECT_EQ(h.s.wand(Side::Left).cursor.y, 0.5);
  EXPECT_EQ(h.count("wand", "recenter"), 1u);

  auto dup = red.dial(30, 1);
  dup.seq = 0;
  h.s.wand_frame(dup, 1130);
  EXPECT_EQ(h.count("wand", "stale"), 1u);

  h.s.wand_frame(red.battery(40, wand::BatteryState::NearFull, 90), 1140);
  EXPECT_EQ(h.s.wand(Side::Left).battery, wand::BatteryState::NearFull);
}

TEST(Session, WandRecordsGoToPerWandStreams) {
  Harness h(base_config());
  h.s.run_preliminary_checks(all_devices_ok(), 0);
  h.s.advance(LifecycleEvent::ChecksPassed, 0);
  wand::WandEmulator blue(WandColor::Blue);
  h.s.wand_frame(blue.battery(1, wand::BatteryState::Full, 100), 10);
  ASSERT_FALSE(h.log.empty());
  EXPECT_EQ(h.log.back().stream, "wand_blue");
  EXPECT_EQ(h.log.back().record.event, "battery");
  EXPECT_EQ(h.count("input", "hit"), 0u);
}

TEST(Session, SpelledWordTriggersATrick) {
  auto cfg = base_config("Spelling", 3);
  cfg["spelling_words"] = {"sit"};
  cfg["spelling_rounds"] = 1;
  Harness h(cfg);
  h.run_to_activity();
  ASSERT_EQ(h.s.activity_summary()["word"], "sit");

  // Try every tile for whoever is up until the word is spelled.
  Millis t = 1100;
  for (int guard = 0; guard < 200 && !h.s.activity_complete(); ++guard) {
    auto active = side_from_string(h.s.activity_summary()["active_side"].get<std::string>());
    ASSERT_TRUE(active);
    for (int id = 0; id < 40 && !h.s.activity_complete(); ++id) {
      const auto before = h.s.activity_summary()["next_index"];
      h.s.input(spelling::SpellingEvent{spelling::SelectLetter{*active, id, 0}}, t += 10);
      if (h.s.activity_summary()["next_index"] != before) break;
    }
  }
  ASSERT_TRUE(h.s.activity_complete());
  EXPECT_EQ(h.count("robot", "trick"), 1u);
  const auto trick = std::find_if(h.log.begin(), h.log.end(),
                                  [](const Emitted& e) { return e.record.component == "robot" && e.record.event == "trick"; });
  EXPECT_EQ(trick->record.payload["trick"], "sit");
  const auto sent = h.robot->transcript();
  EXPECT_NE(std::find_if(sent.begin(), sent.end(),
                         [&](const RobotCommand& c) { return to_json(c) == trick->record.payload["command"]; }),
            sent.end());
  EXPECT_EQ(h.s.adapter_kinds(), std::vector<AdapterKind>{AdapterKind::Simulated});
}
