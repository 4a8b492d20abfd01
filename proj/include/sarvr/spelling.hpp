#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sarvr/activity.hpp"
#include "sarvr/common.hpp"

namespace sarvr::spelling {

inline constexpr int kDefaultExcess = 6;
inline constexpr int kMaxExcess = 12;

/// Dog commands that can be spelled; each maps to an animal-robot trick.
class Lexicon {
 public:
  static Lexicon builtin();
  /// Newline-delimited words; blank lines and '#' comments are skipped.
  static Lexicon parse(std::string_view text);
  static Lexicon load(const std::string& path);

  bool contains(std::string_view word) const;
  const std::vector<std::string>& words() const { return words_; }
  /// Words suited to a level: short commands first, longest at level 4.
  std::vector<std::string> words_for_level(int level) const;

 private:
  std::vector<std::string> words_;
};

/// Left owns red letters, Right owns blue letters.
constexpr WandColor color_of(Side s) { return wand_color_for(s); }
constexpr Side owner_of(WandColor c) { return side_for(c); }

struct Letter {
  int letter_id = 0;
  char ch = 'a';
  WandColor color = WandColor::Red;
  bool used = false;
};

struct SpellingRound {
  std::string word;
  std::vector<Letter> pool;
  int excess_count = 0;
  std::size_t next_index = 0;
  /// Letter planned for each word position; re-planned when a player picks
  /// an equivalent tile.
  std::vector<int> planned;
  std::vector<int> selected;
  Millis idle_since = 0;
  Millis last_cue_at = 0;

  bool complete() const { return next_index == word.size(); }
  const Letter* letter(int letter_id) const;
  /// Whose turn it is; nullopt once complete.
  std::optional<Side> active_side() const;
  std::string spelled() const;
};

/// Throws UnknownWord, OutOfRange for excess outside 0..kMaxExcess.
SpellingRound generate_round(const Lexicon& lexicon, const std::string& word, int excess_count, Rng& rng,
                             Millis now = 0);

enum class Rejection : std::uint8_t { NotYourColor, WrongLetter, AlreadyUsed, RoundComplete };

std::string_view to_string(Rejection r);

struct Result {
  std::optional<Rejection> rejection;
  StepOutput output;

  bool accepted() const { return !rejection; }
};

/// Letters must be picked in word order by the owner of their color.
/// Throws UnknownLetterId.
Result select_letter(SpellingRound& round, Side side, int letter_id, Millis now);

std::optional<FeedbackEvent> hint(const SpellingRound& round, Millis now);

/// Cue naming the active participant after timeout ms without progress.
std::vector<FeedbackEvent> turn_timeout(SpellingRound& round, Millis now, Millis timeout = 10'000);

struct TrickCommand {
  std::string trick;

  friend bool operator==(const TrickCommand&, const TrickCommand&) = default;
};

/// Throws RoundIncomplete.
TrickCommand complete(const SpellingRound& round);

/// Hitbox of the i-th pool tile in unit screen coordinates.
Rect tile_rect(std::size_t index, std::size_t pool_size);

struct SelectLetter {
  Side side = Side::Left;
  int letter_id = 0;
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
struct HintRequest {
  Millis t = 0;
};
/// Operator slider; applies from the next round on.
struct SetExcess {
  int excess_count = kDefaultExcess;
  Millis t = 0;
};
struct Tick {
  Millis t = 0;
};
using SpellingEvent = std::variant<SelectLetter, Move, Grab, HintRequest, SetExcess, Tick>;

struct SpellingConfig {
  int level = 2;
  int rounds = 3;
  int excess_count = kDefaultExcess;
  Millis turn_timeout = 10'000;
  /// Fixed word list; drawn from the lexicon by level when empty.
  std::vector<std::string> words;
};

class SpellingActivity {
 public:
  SpellingActivity(SpellingConfig config, Lexicon lexicon, std::uint64_t seed);

  StepOutput start(Millis now);
  Result step(const SpellingEvent& event);

  const SpellingRound& round() const { return round_; }
  int rounds_completed() const { return rounds_completed_; }
  bool complete() const { return rounds_completed_ >= config_.rounds; }
  int excess_count() const { return excess_; }
  nlohmann::json summary() const;

 private:
  StepOutput next_round(Millis now);

  SpellingConfig config_;
  Lexicon lexicon_;
  Rng rng_;
  SpellingRound round_;
  int excess_;
  int rounds_completed_ = 0;
  std::array<Point, 2> cursor_{{{0.3, 0.5}, {0.7, 0.5}}};
  Millis last_t_ = 0;
};

}  // namespace sarvr::spelling
