#include "sarvr/activity.hpp"

namespace sarvr {

std::string_view to_string(ActivityKind k) {
  switch (k) {
    case ActivityKind::Music: return "Music";
    case ActivityKind::Fishing: return "Fishing";
    case ActivityKind::Painting: return "Painting";
    case ActivityKind::Spelling: return "Spelling";
  }
  return "Music";
}

std::optional<ActivityKind> activity_kind_from_string(std::string_view s) {
  for (auto k : {ActivityKind::Music, ActivityKind::Fishing, ActivityKind::Painting, ActivityKind::Spelling}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

void StepOutput::append(StepOutput&& other) {
  for (auto& f : other.feedback) feedback.push_back(std::move(f));
  for (auto& e : other.effects) effects.push_back(std::move(e));
  score_delta += other.score_delta;
}

void StepOutput::emit(FeedbackCategory category, std::string code, Target target, Millis now,
                      std::map<std::string, std::string> args) {
  feedback.push_back(FeedbackEvent{category, std::move(code), target, now, std::move(args)});
}

void StepOutput::effect(std::string name, nlohmann::json payload) {
  effects.push_back(ActivityEffect{std::move(name), std::move(payload)});
}

}  // namespace sarvr
