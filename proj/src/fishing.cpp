#include "sarvr/fishing.hpp"

#include <algorithm>

namespace sarvr::fishing {

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Idle: return "Idle";
    case Phase::Cast: return "Cast";
    case Phase::Hooked: return "Hooked";
    case Phase::TransferPending: return "TransferPending";
    case Phase::InNet: return "InNet";
    case Phase::Deposited: return "Deposited";
  }
  return "Idle";
}

LevelSpec LevelSpec::for_level(int level) {
  switch (level) {
    case 1: return {3, 3, 20'000, false};
    case 2: return {5, 3, 20'000, false};
    case 3: return {8, 3, 20'000, false};
    case 4: return {12, 3, 20'000, true};
    default: throw Error(ErrorCode::InvalidConfig, "fishing level out of range");
  }
}

LevelSpec LevelSpec::from_json(const nlohmann::json& j) {
  LevelSpec s;
  try {
    s.fish_count = j.at("fish_count").get<int>();
    s.bucket_count = j.at("bucket_count").get<int>();
    s.stage_timeout = j.at("stage_timeout_ms").get<Millis>();
    s.single_active_bucket = j.at("single_active_bucket").get<bool>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::InvalidConfig, ex.what());
  }
  if (s.fish_count < 1 || s.bucket_count < 1 || s.stage_timeout <= 0) {
    throw Error(ErrorCode::InvalidConfig, "fishing level spec needs fish, buckets and a positive timeout");
  }
  return s;
}

nlohmann::json LevelSpec::to_json() const {
  return {{"fish_count", fish_count},
          {"bucket_count", bucket_count},
          {"stage_timeout_ms", stage_timeout},
          {"single_active_bucket", single_active_bucket}};
}

std::size_t FishingState::active_buckets() const {
  return static_cast<std::size_t>(std::count_if(buckets.begin(), buckets.end(), [](const Bucket& b) { return b.active; }));
}

namespace {

bool overlaps(Point a, Point b) { return distance(a, b) <= kOverlapRadius; }

Point clamp_unit(Point p) { return {std::clamp(p.x, 0.0, 1.0), std::clamp(p.y, 0.0, 1.0)}; }

Point draw_fish(Rng& rng) { return {0.15 + 0.7 * rng.uniform01(), 0.35 + 0.3 * rng.uniform01()}; }

void enter(FishingState& s, Phase next, Millis t, StepOutput& out) {
  out.effect("fishing_phase", {{"from", to_string(s.phase)}, {"to", to_string(next)}, {"t", t}});
  s.phase = next;
  s.phase_entered_at = t;
  s.last_prompt_at = t;
  s.prompts_in_phase = 0;
}

void check_order(FishingState& s, Millis t) {
  if (t < s.last_t) throw Error(ErrorCode::EventOutOfOrder, std::to_string(t) + " < " + std::to_string(s.last_t));
  s.last_t = t;
}

void on_move(FishingState& s, const Move& m, StepOutput& out) {
  Point p = clamp_unit(m.xy);
  if (m.side == kRodSide) {
    s.rod = p;
    if (s.phase == Phase::Hooked || s.phase == Phase::TransferPending) s.fish = p;
  } else {
    s.net = p;
  }
  if (s.phase == Phase::Hooked && overlaps(s.net, s.rod)) {
    enter(s, Phase::TransferPending, m.t, out);
  } else if (s.phase == Phase::TransferPending && !overlaps(s.net, s.rod)) {
    enter(s, Phase::Hooked, m.t, out);
  }
}

void on_release(FishingState& s, const Release& r, Rng& rng, StepOutput& out) {
  if (r.side != kNetSide || s.phase != Phase::InNet) return;
  auto bucket = std::find_if(s.buckets.begin(), s.buckets.end(),
                             [&](const Bucket& b) { return overlaps(s.net, b.position); });
  if (bucket == s.buckets.end()) return;
  const auto index = static_cast<std::size_t>(bucket - s.buckets.begin());
  if (!bucket->active) {
    out.effect("deposit_rejected", {{"bucket", index}});
    out.emit(FeedbackCategory::Corrective, side_code(kNetSide, "WrongBucket"), target_of(kNetSide), r.t);
    return;
  }
  enter(s, Phase::Deposited, r.t, out);
  ++s.score;
  --s.fish_remaining;
  out.score_delta += 1;
  out.effect("fish_deposited", {{"bucket", index}, {"score", s.score}, {"fish_remaining", s.fish_remaining}});
  if (s.complete()) {
    out.emit(FeedbackCategory::Celebration, "FishingComplete", Target::Both, r.t);
    out.effect("activity_complete", {{"score", s.score}});
  } else {
    out.emit(FeedbackCategory::Celebration, "FishDeposited", Target::Both, r.t);
    s.fish = draw_fish(rng);
    if (s.spec.single_active_bucket) rotate_active_bucket(s, rng);
  }
  enter(s, Phase::Idle, r.t, out);
}

}  // namespace

FishingState initial_state(int level, const LevelSpec& spec, Rng& rng, Millis now) {
  FishingState s;
  s.level = level;
  s.spec = spec;
  s.fish_remaining = spec.fish_count;
  for (int i = 0; i < spec.bucket_count; ++i) {
    s.buckets.push_back({{static_cast<double>(i + 1) / (spec.bucket_count + 1), 0.9}, true});
  }
  s.fish = draw_fish(rng);
  s.phase_entered_at = s.last_prompt_at = s.last_t = now;
  if (spec.single_active_bucket) rotate_active_bucket(s, rng);
  return s;
}

void rotate_active_bucket(FishingState& state, Rng& rng) {
  if (state.buckets.empty()) return;
  const auto chosen = rng.index(state.buckets.size());
  for (std::size_t i = 0; i < state.buckets.size(); ++i) state.buckets[i].active = i == chosen;
}

StepOutput step(FishingState& s, const FishingEvent& event, Rng& rng) {
  StepOutput out;
  std::visit(
      [&](const auto& e) {
        using E = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<E, CastGesture>) {
          if (e.side != kRodSide) throw Error(ErrorCode::WrongRole, "cast gesture from the net side");
          check_order(s, e.t);
          if (s.phase == Phase::Idle && !s.complete()) enter(s, Phase::Cast, e.t, out);
        } else if constexpr (std::is_same_v<E, Move>) {
          check_order(s, e.t);
          on_move(s, e, out);
        } else if constexpr (std::is_same_v<E, Grab>) {
          check_order(s, e.t);
          if (e.side == kRodSide && s.phase == Phase::Cast && overlaps(s.rod, s.fish)) {
            s.fish = s.rod;
            enter(s, Phase::Hooked, e.t, out);
            if (overlaps(s.net, s.rod)) enter(s, Phase::TransferPending, e.t, out);
          } else if (e.side == kNetSide && (s.phase == Phase::Hooked || s.phase == Phase::TransferPending) &&
                     overlaps(s.net, s.rod)) {
            enter(s, Phase::InNet, e.t, out);
          }
        } else if constexpr (std::is_same_v<E, Release>) {
          check_order(s, e.t);
          on_release(s, e, rng, out);
        } else {
          check_order(s, e.t);
          for (auto& f : check_timeouts(s, e.t)) out.feedback.push_back(std::move(f));
        }
      },
      event);
  return out;
}

std::vector<FeedbackEvent> check_timeouts(FishingState& s, Millis now) {
  std::vector<FeedbackEvent> out;
  if (s.complete() || now - s.last_prompt_at <= s.spec.stage_timeout) return out;

  Side who = kRodSide;
  std::string_view reminder;
  switch (s.phase) {
    case Phase::Idle: reminder = "CastReminder"; break;
    case Phase::Cast: reminder = "HookReminder"; break;
    case Phase::Hooked:
    case Phase::TransferPending:
      who = kNetSide;
      reminder = "NetReminder";
      break;
    case Phase::InNet:
      who = kNetSide;
      reminder = "BucketReminder";
      break;
    case Phase::Deposited: return out;
  }
  out.push_back({FeedbackCategory::Corrective, side_code(who, reminder), target_of(who), now, {}});
  if (++s.prompts_in_phase >= 2) {
    out.push_back({FeedbackCategory::Encouragement, side_code(who, "AskPartner"), target_of(who), now, {}});
  }
  s.last_prompt_at = now;
  return out;
}

nlohmann::json summary(const FishingState& s) {
  nlohmann::json buckets = nlohmann::json::array();
  for (const auto& b : s.buckets) buckets.push_back({{"x", b.position.x}, {"y", b.position.y}, {"active", b.active}});
  return {{"level", s.level},
          {"phase", to_string(s.phase)},
          {"score", s.score},
          {"fish_remaining", s.fish_remaining},
          {"fish", {s.fish.x, s.fish.y}},
          {"rod", {s.rod.x, s.rod.y}},
          {"net", {s.net.x, s.net.y}},
          {"buckets", std::move(buckets)},
          {"complete", s.complete()}};
}

FishingActivity::FishingActivity(int level, LevelSpec spec, std::uint64_t seed)
    : level_(level), spec_(spec), rng_(seed) {
  if (level < kTutorialLevel || level > kMaxLevel) throw Error(ErrorCode::InvalidConfig, "fishing level out of range");
}

StepOutput FishingActivity::start(Millis now) {
  state_ = initial_state(level_, spec_, rng_, now);
  StepOutput out;
  if (level_ == kTutorialLevel) out.emit(FeedbackCategory::Instruction, "FishingTutorial", Target::Both, now);
  out.effect("fishing_started", fishing::summary(state_));
  return out;
}

StepOutput FishingActivity::step(const FishingEvent& event) { return fishing::step(state_, event, rng_); }

}  // namespace sarvr::fishing
