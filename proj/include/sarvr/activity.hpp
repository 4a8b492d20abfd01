#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sarvr/common.hpp"
#include "sarvr/feedback.hpp"

namespace sarvr {

enum class ActivityKind : std::uint8_t { Music, Fishing, Painting, Spelling };

std::string_view to_string(ActivityKind k);
std::optional<ActivityKind> activity_kind_from_string(std::string_view s);

/// Level 1 is the tutorial; 2..4 are the main levels, easiest first.
inline constexpr int kTutorialLevel = 1;
inline constexpr int kMaxLevel = 4;

/// Non-feedback output of a state machine step: UI changes, judgements,
/// reward tricks. Rendered by the console, logged by the recorder.
struct ActivityEffect {
  std::string name;
  nlohmann::json payload = nlohmann::json::object();
};

struct StepOutput {
  std::vector<FeedbackEvent> feedback;
  std::vector<ActivityEffect> effects;
  int score_delta = 0;

  void append(StepOutput&& other);
  void emit(FeedbackCategory category, std::string code, Target target, Millis now,
            std::map<std::string, std::string> args = {});
  void effect(std::string name, nlohmann::json payload = nlohmann::json::object());
};

}  // namespace sarvr
