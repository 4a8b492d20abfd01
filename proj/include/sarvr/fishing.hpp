#pragma once

#include <variant>
#include <vector>

#include <json.hpp>

#include "sarvr/activity.hpp"
#include "sarvr/common.hpp"

namespace sarvr::fishing {

/// Right participant holds the rod, Left participant holds the net.
inline constexpr Side kRodSide = Side::Right;
inline constexpr Side kNetSide = Side::Left;
/// Cursor-to-target overlap radius in unit screen coordinates.
inline constexpr double kOverlapRadius = 0.05;

enum class Phase : std::uint8_t { Idle, Cast, Hooked, TransferPending, InNet, Deposited };

std::string_view to_string(Phase p);

struct LevelSpec {
  int fish_count = 5;
  int bucket_count = 3;
  Millis stage_timeout = 20'000;
  bool single_active_bucket = false;

  static LevelSpec for_level(int level);
  static LevelSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct Bucket {
  Point position;
  bool active = true;

  friend bool operator==(const Bucket&, const Bucket&) = default;
};

struct FishingState {
  int level = 2;
  LevelSpec spec;
  Phase phase = Phase::Idle;
  int fish_remaining = 0;
  int score = 0;
  std::vector<Bucket> buckets;
  Point fish{0.5, 0.5};
  Point rod{0.75, 0.5};
  Point net{0.25, 0.5};
  Millis phase_entered_at = 0;
  Millis last_prompt_at = 0;
  int prompts_in_phase = 0;
  Millis last_t = 0;

  bool complete() const { return fish_remaining == 0; }
  std::size_t active_buckets() const;

  friend bool operator==(const FishingState&, const FishingState&) = default;
};

struct CastGesture {
  Side side = kRodSide;
  Millis t = 0;
};
struct Move {
  Side side = Side::Left;
  Point xy;
  Millis t = 0;
};
struct Grab {
  Side side = Side::Left;
  Millis t = 0;
};
struct Release {
  Side side = Side::Left;
  Millis t = 0;
};
struct Tick {
  Millis t = 0;
};
using FishingEvent = std::variant<CastGesture, Move, Grab, Release, Tick>;

FishingState initial_state(int level, const LevelSpec& spec, Rng& rng, Millis now);

/// Throws WrongRole for a cast from the net side, EventOutOfOrder for stale events.
StepOutput step(FishingState& state, const FishingEvent& event, Rng& rng);

/// Single-active-bucket levels: exactly one bucket lit, drawn uniformly.
void rotate_active_bucket(FishingState& state, Rng& rng);

/// Role-targeted reminder when a phase outlasts the stage timeout; the second
/// reminder in the same phase adds a partner-help encouragement.
std::vector<FeedbackEvent> check_timeouts(FishingState& state, Millis now);

nlohmann::json summary(const FishingState& state);

/// Owns a state plus its RNG stream for the session loop.
class FishingActivity {
 public:
  FishingActivity(int level, LevelSpec spec, std::uint64_t seed);

  StepOutput start(Millis now);
  StepOutput step(const FishingEvent& event);

  const FishingState& state() const { return state_; }
  bool complete() const { return state_.complete(); }
  nlohmann::json summary() const { return fishing::summary(state_); }

 private:
  int level_;
  LevelSpec spec_;
  Rng rng_;
  FishingState state_;
};

}  // namespace sarvr::fishing
