#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sarvr/common.hpp"

namespace sarvr {

enum class FeedbackCategory : std::uint8_t { Instruction, Corrective, Celebration, Encouragement };

std::string_view to_string(FeedbackCategory c);
std::optional<FeedbackCategory> feedback_category_from_string(std::string_view s);

/// Lower value wins: Instruction > Corrective > Celebration > Encouragement.
constexpr int priority_rank(FeedbackCategory c) { return static_cast<int>(c); }

/// Human-readable feedback request emitted by an activity state machine.
struct FeedbackEvent {
  FeedbackCategory category = FeedbackCategory::Encouragement;
  std::string code;
  Target target = Target::Both;
  Millis issued_at = 0;
  /// Extra template arguments, e.g. {"word", "dance"} for spelling hints.
  std::map<std::string, std::string> args;

  friend bool operator==(const FeedbackEvent&, const FeedbackEvent&) = default;
};

nlohmann::json to_json(const FeedbackEvent& e);

enum class AdapterKind : std::uint8_t { Humanoid, Animal, Avatar, Simulated };

std::string_view to_string(AdapterKind k);
std::optional<AdapterKind> adapter_kind_from_string(std::string_view s);

/// Robot-specific translation of a feedback code.
struct RobotCommand {
  AdapterKind adapter_kind = AdapterKind::Simulated;
  std::string behavior_id;
  std::optional<std::string> speech_text;
  std::map<std::string, std::string> params;

  friend bool operator==(const RobotCommand&, const RobotCommand&) = default;
};

nlohmann::json to_json(const RobotCommand& c);

struct AdapterTemplate {
  std::string behavior_id;
  std::optional<std::string> speech;
};

struct VocabularyEntry {
  FeedbackCategory category = FeedbackCategory::Encouragement;
  Target target = Target::Both;
  /// Prefix spoken before every corrective message; required for Corrective.
  std::string encouragement;
  std::map<AdapterKind, AdapterTemplate> templates;
};

/// The built-in trick set of the animal robot.
std::span<const std::string_view> animal_tricks();

/// Builds "LeftPlayingFast" style codes.
std::string side_code(Side side, std::string_view suffix);
std::string trick_code(std::string_view trick);

/// Registered feedback codes with per-adapter templates.
///
/// Template placeholders: {left}, {right}, {target}, {partner}, plus any key
/// carried in FeedbackEvent::args. Simulated translations are derived from
/// the speech-bearing or animal template when not given explicitly.
class Vocabulary {
 public:
  /// Seed vocabulary covering every code the activity modules emit.
  static Vocabulary seed();
  static Vocabulary from_json(const nlohmann::json& j);
  static Vocabulary load(const std::string& path);
  nlohmann::json to_json() const;

  /// Throws InvalidVocabulary when the entry breaks an adapter rule.
  void add(const std::string& code, VocabularyEntry entry);

  bool contains(std::string_view code) const;
  const VocabularyEntry& at(std::string_view code) const;
  bool supports(std::string_view code, AdapterKind kind) const;
  std::vector<std::string> codes() const;

  /// Event with the registered category and default target.
  FeedbackEvent make_event(std::string_view code, Millis now,
                           std::map<std::string, std::string> args = {}) const;

 private:
  std::map<std::string, VocabularyEntry, std::less<>> entries_;
};

struct ParticipantNames {
  std::string left;
  std::string right;
};

RobotCommand translate(const Vocabulary& vocab, const FeedbackEvent& event, AdapterKind kind,
                       const ParticipantNames& names);
RobotCommand translate(const Vocabulary& vocab, std::string_view code, AdapterKind kind,
                       const ParticipantNames& names);

/// Rate limiter and priority queue in front of the robot.
///
/// At most one utterance per min_gap. While the window is closed events are
/// queued by (priority, issued_at). An event whose code is already queued, or
/// was spoken less than min_gap ago, is coalesced away. Queued events older
/// than max_age are dropped.
class FeedbackPolicy {
 public:
  explicit FeedbackPolicy(std::shared_ptr<const Vocabulary> vocab, Millis min_gap = 10'000,
                          Millis max_age = 30'000);

  /// Throws UnknownCode for unregistered codes.
  std::optional<FeedbackEvent> submit(const FeedbackEvent& event, Millis now);
  /// Dispatches the best queued event when the window is open.
  std::optional<FeedbackEvent> poll(Millis now);

  Millis min_gap() const { return min_gap_; }
  std::optional<Millis> last_utterance_at() const { return last_utterance_at_; }
  std::size_t pending() const { return pending_.size(); }
  std::size_t coalesced() const { return coalesced_; }
  const Vocabulary& vocabulary() const { return *vocab_; }

 private:
  bool window_open(Millis now) const;
  std::optional<FeedbackEvent> take_best(Millis now);

  struct Pending {
    FeedbackEvent event;
    std::uint64_t seq = 0;
  };

  std::shared_ptr<const Vocabulary> vocab_;
  Millis min_gap_;
  Millis max_age_;
  std::optional<Millis> last_utterance_at_;
  std::vector<Pending> pending_;
  std::map<std::string, Millis, std::less<>> last_dispatched_;
  std::uint64_t next_seq_ = 0;
  std::size_t coalesced_ = 0;
};

}  // namespace sarvr
