#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sarvr/activity.hpp"
#include "sarvr/feedback.hpp"
#include "sarvr/fishing.hpp"
#include "sarvr/music.hpp"
#include "sarvr/painting.hpp"
#include "sarvr/recorder.hpp"
#include "sarvr/robot_adapters.hpp"
#include "sarvr/spelling.hpp"
#include "sarvr/wand.hpp"

namespace sarvr::session {

// --- lifecycle ---------------------------------------------------------------------

enum class Phase : std::uint8_t { PreSession, Baseline, ActivityRunning, Break, PostSession, Packaged };
enum class LifecycleEvent : std::uint8_t {
  ChecksPassed,
  BaselineElapsed,
  StartActivity,
  Pause,
  BreakElapsed,
  EndActivity,
  PackagingDone,
};

std::string_view to_string(Phase p);
std::string_view to_string(LifecycleEvent e);
std::optional<LifecycleEvent> lifecycle_event_from_string(std::string_view s);

/// PreSession -> Baseline -> ActivityRunning <-> Break, ActivityRunning ->
/// PostSession -> Packaged. nullopt for anything else.
std::optional<Phase> next_phase(Phase from, LifecycleEvent event);

inline constexpr std::array<Phase, 6> kPhases{Phase::PreSession, Phase::Baseline,    Phase::ActivityRunning,
                                              Phase::Break,      Phase::PostSession, Phase::Packaged};
inline constexpr std::array<LifecycleEvent, 7> kLifecycleEvents{
    LifecycleEvent::ChecksPassed, LifecycleEvent::BaselineElapsed, LifecycleEvent::StartActivity,
    LifecycleEvent::Pause,        LifecycleEvent::BreakElapsed,    LifecycleEvent::EndActivity,
    LifecycleEvent::PackagingDone};

// --- configuration -----------------------------------------------------------------

struct Participant {
  std::string id;
  std::string display_name;
  Side side = Side::Left;
  WandColor wand_color = WandColor::Red;
};

inline constexpr int kBaselineSeconds = 120;
/// Longer resting preset used by some facilities.
inline constexpr int kLongBaselineSeconds = 180;
inline constexpr int kBreakSeconds = 300;

struct SessionConfig {
  std::string facility_id;
  /// Entered in order: the first is the left participant.
  std::array<Participant, 2> participants;
  ActivityKind activity = ActivityKind::Music;
  int level = 2;
  AdapterConfig robot;
  int baseline_seconds = kBaselineSeconds;
  int break_seconds = kBreakSeconds;
  std::uint64_t rng_seed = 0;
  Millis feedback_min_gap = 10'000;
  Millis feedback_max_age = 30'000;

  // Activity overrides; level defaults apply when absent.
  std::optional<music::BeatChart> chart;
  music::AssignmentPolicy assignment;
  std::optional<fishing::LevelSpec> fishing;
  std::optional<painting::CanvasSpec> canvas;
  std::vector<std::string> spelling_words;
  int spelling_rounds = 3;
  int spelling_excess = spelling::kDefaultExcess;
  Millis idle_window = 15'000;

  /// Throws InvalidConfig.
  void validate() const;
  const Participant& participant(Side s) const { return participants[s == Side::Left ? 0 : 1]; }
  ParticipantNames names() const;

  /// Accepts "participants": [{id, name}, {id, name}] in seating order.
  /// Throws InvalidConfig for missing or malformed fields.
  static SessionConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Adapter kinds a given activity may use.
bool adapter_allowed(ActivityKind activity, AdapterKind kind);

// --- preliminary checks ------------------------------------------------------------

enum class DeviceState : std::uint8_t { Ok, Missing, Fault };

std::string_view to_string(DeviceState s);

struct DeviceStatus {
  DeviceState state = DeviceState::Missing;
  std::string detail;

  static DeviceStatus ok() { return {DeviceState::Ok, ""}; }
  static DeviceStatus fault(std::string text) { return {DeviceState::Fault, std::move(text)}; }
};

inline constexpr std::array<std::string_view, 6> kDevices{"wand_left", "wand_right", "robot",
                                                          "kinect",    "e4_left",    "e4_right"};

/// Probe results by device name; absent entries count as Missing.
using DeviceRegistry = std::map<std::string, DeviceStatus>;

struct CheckReport {
  std::map<std::string, DeviceStatus> devices;

  bool all_ok() const;
  nlohmann::json to_json() const;
};

// --- activity inputs ---------------------------------------------------------------

using ActivityEvent =
    std::variant<music::MusicEvent, fishing::FishingEvent, painting::PaintingEvent, spelling::SpellingEvent>;

/// {"type": "hit"|"cast"|"move"|"grab"|"release"|"select_color"|"paint"|
/// "select_letter"|"hint"|"set_excess", "side": "Left"|"Right", ...}; the
/// event time is always t. Throws ParseError.
ActivityEvent parse_activity_event(ActivityKind kind, const nlohmann::json& j, Millis t);
nlohmann::json to_json(const ActivityEvent& e);

// --- session -----------------------------------------------------------------------

/// One emitted record. stream is "performance" or a per-wand stream.
struct Emitted {
  std::string stream;
  recorder::LogRecord record;
};

using Sink = std::function<void(const Emitted&)>;

struct WandState {
  wand::CursorCalibration calibration;
  wand::GestureDetector gestures;
  wand::SequenceTracker sequence;
  Point cursor{0.5, 0.5};
  std::optional<wand::Quaternion> last_q;
  std::optional<wand::BatteryState> battery;
};

/// The session automaton plus the running activity and feedback routing.
/// Single-threaded: the engine loop is the only caller.
class Session {
 public:
  Session(SessionConfig config, std::shared_ptr<const Vocabulary> vocab, Sink sink, Millis now = 0);

  const SessionConfig& config() const { return config_; }
  Phase phase() const { return phase_; }
  Millis entered_at() const { return entered_at_; }
  Millis now() const { return now_; }

  /// Robot adapter for feedback (and tricks when spelling). Spelling speech
  /// goes to an on-screen avatar unless the robot is simulated.
  void attach_robot(std::shared_ptr<RobotAdapter> robot);
  std::vector<AdapterKind> adapter_kinds() const;

  /// Phase unchanged. Robot status comes from the attached adapter when the
  /// registry has none.
  const CheckReport& run_preliminary_checks(const DeviceRegistry& registry, Millis now);
  const std::optional<CheckReport>& checks() const { return checks_; }

  /// Throws IllegalTransition, ClockRegression.
  void advance(LifecycleEvent event, Millis now);
  /// Baseline and break timers, activity timeouts, queued feedback.
  /// Throws ClockRegression.
  void tick(Millis now);
  /// Throws ActivityNotRunning outside ActivityRunning, ClockRegression.
  /// Input the activity refuses is logged, not thrown.
  void input(const ActivityEvent& event, Millis now, bool synthetic = false);
  /// Accepted in Baseline and ActivityRunning; only the latter drives the activity.
  void wand_frame(const wand::WandFrame& frame, Millis now, bool synthetic = false);
  /// Free-form record on the performance stream.
  void note(const std::string& component, const std::string& event, nlohmann::json payload, Millis now);

  /// Per-side score where the activity keeps one (music); nullopt otherwise.
  std::optional<int> score(Side side) const;
  int total_score() const { return total_score_; }
  bool activity_complete() const;
  nlohmann::json activity_summary() const;
  std::optional<nlohmann::json> last_utterance() const { return last_utterance_; }
  const WandState& wand(Side s) const { return wands_[s == Side::Left ? 0 : 1]; }
  const FeedbackPolicy& feedback_policy() const { return policy_; }
  nlohmann::json view() const;

 private:
  using Activity = std::variant<music::MusicActivity, fishing::FishingActivity, painting::PaintingActivity,
                                spelling::SpellingActivity>;

  void set_clock(Millis now);
  void emit(const std::string& component, const std::string& event, nlohmann::json payload,
            const std::string& stream = "performance");
  void enter(Phase phase, LifecycleEvent cause);
  void drive(const ActivityEvent& event);
  void apply(StepOutput&& out, const std::optional<std::string>& rejection);
  void request_feedback(const FeedbackEvent& e);
  void speak(const FeedbackEvent& e);
  void perform_trick(const std::string& trick);
  void dispatch(const std::shared_ptr<RobotAdapter>& adapter, const RobotCommand& cmd, const std::string& what);
  void poll_feedback();
  Activity make_activity() const;

  SessionConfig config_;
  std::shared_ptr<const Vocabulary> vocab_;
  Sink sink_;
  FeedbackPolicy policy_;
  Phase phase_ = Phase::PreSession;
  Millis entered_at_ = 0;
  Millis now_ = 0;
  std::optional<CheckReport> checks_;
  Activity activity_;
  bool activity_started_ = false;
  bool completion_logged_ = false;
  int total_score_ = 0;
  std::shared_ptr<RobotAdapter> robot_;
  std::shared_ptr<RobotAdapter> speaker_;
  std::optional<nlohmann::json> last_utterance_;
  std::array<WandState, 2> wands_;
};

}  // namespace sarvr::session
