#pragma once

#include <array>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sarvr/activity.hpp"
#include "sarvr/common.hpp"

namespace sarvr::music {

/// Precomputed drum beats for one song; times are ms from activity start.
struct BeatChart {
  std::string song_id;
  std::vector<Millis> beats;
  /// Time a note needs from spawn to the center of the green zone.
  Millis travel_time = 2000;

  /// Throws InvalidChart.
  void validate() const;
  Millis spawn_time(std::size_t i) const { return beats[i] - travel_time; }

  static BeatChart from_json(const nlohmann::json& j);
  static BeatChart load(const std::string& path);
  nlohmann::json to_json() const;
  /// Evenly spaced chart, handy for tests and demos.
  static BeatChart regular(std::string song_id, std::size_t count, Millis interval, Millis first_beat,
                           Millis travel_time);
};

enum class AssignmentMode : std::uint8_t { Random, Alternate, Probability };

std::string_view to_string(AssignmentMode m);
std::optional<AssignmentMode> assignment_mode_from_string(std::string_view s);

/// Who gets the next note.
///
/// Probability mode: P(left) = w_left / (w_left + w_right). The receiver's
/// weight is multiplied by decay, the other side's weight resets to 1.
struct AssignmentPolicy {
  AssignmentMode mode = AssignmentMode::Probability;
  double w_left = 1.0;
  double w_right = 1.0;
  double decay = 0.5;
  /// Side that receives the next note in Alternate mode.
  Side next_alternate = Side::Left;

  double p_left() const { return w_left / (w_left + w_right); }
};

std::pair<Side, AssignmentPolicy> next_assignment(const AssignmentPolicy& policy, Rng& rng);
std::vector<Side> assign_all(const BeatChart& chart, AssignmentPolicy policy, Rng& rng);

struct ZoneConfig {
  Millis green_half_width = 150;
  Millis yellow_early_limit = 400;
  Millis red_late_limit = 400;
  std::set<int> levels_with_extra_zones = {4};

  bool extra_zones(int level) const { return levels_with_extra_zones.count(level) != 0; }
  /// Throws InvalidConfig unless 0 < green < yellow and green < red.
  void validate() const;
};

enum class Judgement : std::uint8_t { Green, EarlyYellow, LateRed, Miss };

std::string_view to_string(Judgement j);

struct Note {
  std::size_t index = 0;
  Side side = Side::Left;
  Millis spawn_time = 0;
  Millis beat_time = 0;
  std::optional<Judgement> judgement;
};

/// Judges a hit against one note; only Green scores. Throws NoteAlreadyJudged.
Judgement judge_hit(Note& note, Millis hit_time, const ZoneConfig& zones, int level);

struct MusicConfig {
  int level = 3;
  BeatChart chart;
  AssignmentPolicy policy;
  ZoneConfig zones;
  int early_threshold = 3;
  int late_threshold = 3;
  int miss_threshold = 3;
  /// A side with pending notes and no hit for this long gets a reminder.
  Millis idle_window = 15'000;
};

/// Notes appear at levels 1, 3 and 4; level 2 is free play.
bool level_has_notes(int level);

struct Spawn {
  Millis t = 0;
};
struct Hit {
  Side side = Side::Left;
  Millis t = 0;
};
struct Tick {
  Millis t = 0;
};
using MusicEvent = std::variant<Spawn, Hit, Tick>;

/// Drum activity state machine.
class MusicActivity {
 public:
  MusicActivity(MusicConfig config, std::uint64_t seed);

  StepOutput start(Millis now);
  /// Throws EventOutOfOrder when an event is older than the last one.
  StepOutput step(const MusicEvent& event);

  int score(Side side) const { return score_[idx(side)]; }
  int total_score() const { return score_[0] + score_[1]; }
  std::size_t spawned() const { return notes_.size(); }
  std::size_t judged_count(Judgement j) const { return judged_[static_cast<std::size_t>(j)]; }
  std::size_t judged_total() const;
  std::size_t pending(Side side) const;
  bool complete() const { return complete_; }
  bool started() const { return started_; }
  const std::vector<Note>& notes() const { return notes_; }
  const MusicConfig& config() const { return config_; }
  nlohmann::json summary() const;

 private:
  static std::size_t idx(Side s) { return s == Side::Left ? 0 : 1; }
  void check_order(Millis t);
  StepOutput spawn_due(Millis t);
  StepOutput expire(Millis t);
  StepOutput on_hit(Side side, Millis t);
  StepOutput record(Note& note, Judgement j, Millis t);
  StepOutput check_idle(Millis t);
  StepOutput check_complete(Millis t);

  MusicConfig config_;
  Rng rng_;
  AssignmentPolicy policy_;
  bool started_ = false;
  bool complete_ = false;
  Millis start_at_ = 0;
  Millis last_t_ = 0;
  std::size_t next_beat_ = 0;
  std::vector<Note> notes_;
  std::array<int, 2> score_{};
  std::array<int, 2> early_run_{};
  std::array<int, 2> late_run_{};
  std::array<int, 2> miss_run_{};
  std::array<Millis, 2> last_activity_{};
  std::array<std::size_t, 4> judged_{};
  std::size_t free_hits_ = 0;
};

}  // namespace sarvr::music
