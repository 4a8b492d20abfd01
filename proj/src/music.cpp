#include "sarvr/music.hpp"

#include <algorithm>
#include <fstream>

namespace sarvr::music {

void BeatChart::validate() const {
  if (travel_time <= 0) throw Error(ErrorCode::InvalidChart, "travel_time must be positive");
  for (std::size_t i = 0; i < beats.size(); ++i) {
    if (i > 0 && beats[i] <= beats[i - 1]) {
      throw Error(ErrorCode::InvalidChart, "beats must be strictly increasing (index " + std::to_string(i) + ")");
    }
    if (spawn_time(i) < 0) {
      throw Error(ErrorCode::InvalidChart, "beat " + std::to_string(i) + " spawns before activity start");
    }
  }
}

BeatChart BeatChart::from_json(const nlohmann::json& j) {
  BeatChart chart;
  try {
    chart.song_id = j.at("song_id").get<std::string>();
    chart.travel_time = j.at("travel_time_ms").get<Millis>();
    chart.beats = j.at("beats_ms").get<std::vector<Millis>>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::InvalidChart, ex.what());
  }
  chart.validate();
  return chart;
}

BeatChart BeatChart::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open beat chart " + path);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& ex) {
    throw Error(ErrorCode::InvalidChart, ex.what());
  }
}

nlohmann::json BeatChart::to_json() const {
  return {{"song_id", song_id}, {"travel_time_ms", travel_time}, {"beats_ms", beats}};
}

BeatChart BeatChart::regular(std::string song_id, std::size_t count, Millis interval, Millis first_beat,
                             Millis travel_time) {
  BeatChart chart{std::move(song_id), {}, travel_time};
  chart.beats.reserve(count);
  for (std::size_t i = 0; i < count; ++i) chart.beats.push_back(first_beat + static_cast<Millis>(i) * interval);
  chart.validate();
  return chart;
}

std::string_view to_string(AssignmentMode m) {
  switch (m) {
    case AssignmentMode::Random: return "Random";
    case AssignmentMode::Alternate: return "Alternate";
    case AssignmentMode::Probability: return "Probability";
  }
  return "Probability";
}

std::optional<AssignmentMode> assignment_mode_from_string(std::string_view s) {
  for (auto m : {AssignmentMode::Random, AssignmentMode::Alternate, AssignmentMode::Probability}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

std::pair<Side, AssignmentPolicy> next_assignment(const AssignmentPolicy& policy, Rng& rng) {
  AssignmentPolicy next = policy;
  Side side = Side::Left;
  switch (policy.mode) {
    case AssignmentMode::Random:
      side = rng.coin() ? Side::Left : Side::Right;
      break;
    case AssignmentMode::Alternate:
      side = policy.next_alternate;
      next.next_alternate = other(side);
      break;
    case AssignmentMode::Probability:
      side = rng.uniform01() < policy.p_left() ? Side::Left : Side::Right;
      if (side == Side::Left) {
        next.w_left *= policy.decay;
        next.w_right = 1.0;
      } else {
        next.w_right *= policy.decay;
        next.w_left = 1.0;
      }
      break;
  }
  return {side, next};
}

std::vector<Side> assign_all(const BeatChart& chart, AssignmentPolicy policy, Rng& rng) {
  std::vector<Side> out;
  out.reserve(chart.beats.size());
  for (std::size_t i = 0; i < chart.beats.size(); ++i) {
    auto [side, next] = next_assignment(policy, rng);
    out.push_back(side);
    policy = next;
  }
  return out;
}

void ZoneConfig::validate() const {
  if (green_half_width <= 0 || green_half_width >= yellow_early_limit || green_half_width >= red_late_limit) {
    throw Error(ErrorCode::InvalidConfig, "zones need 0 < green_half_width < yellow/red limits");
  }
}

std::string_view to_string(Judgement j) {
  switch (j) {
    case Judgement::Green: return "Green";
    case Judgement::EarlyYellow: return "EarlyYellow";
    case Judgement::LateRed: return "LateRed";
    case Judgement::Miss: return "Miss";
  }
  return "Miss";
}

Judgement judge_hit(Note& note, Millis hit_time, const ZoneConfig& zones, int level) {
  if (note.judgement) throw Error(ErrorCode::NoteAlreadyJudged, "note " + std::to_string(note.index));
  const Millis dt = hit_time - note.beat_time;
  const bool extra = zones.extra_zones(level);
  Judgement j = Judgement::Miss;
  if (dt >= -zones.green_half_width && dt <= zones.green_half_width) {
    j = Judgement::Green;
  } else if (dt >= -zones.yellow_early_limit && dt < -zones.green_half_width) {
    j = extra ? Judgement::EarlyYellow : Judgement::Miss;
  } else if (dt > zones.green_half_width && dt <= zones.red_late_limit) {
    j = extra ? Judgement::LateRed : Judgement::Miss;
  }
  note.judgement = j;
  return j;
}

bool level_has_notes(int level) { return level != 2; }

// ---------------------------------------------------------------------------

MusicActivity::MusicActivity(MusicConfig config, std::uint64_t seed)
    : config_(std::move(config)), rng_(seed), policy_(config_.policy) {
  if (config_.level < kTutorialLevel || config_.level > kMaxLevel) {
    throw Error(ErrorCode::InvalidConfig, "music level out of range");
  }
  config_.chart.validate();
  config_.zones.validate();
}

std::size_t MusicActivity::judged_total() const {
  std::size_t n = 0;
  for (auto c : judged_) n += c;
  return n;
}

std::size_t MusicActivity::pending(Side side) const {
  return static_cast<std::size_t>(std::count_if(notes_.begin(), notes_.end(), [&](const Note& n) {
    return n.side == side && !n.judgement;
  }));
}

void MusicActivity::check_order(Millis t) {
  if (!started_) throw Error(ErrorCode::ActivityNotRunning, "music activity not started");
  if (t < last_t_) {
    throw Error(ErrorCode::EventOutOfOrder, std::to_string(t) + " < " + std::to_string(last_t_));
  }
  last_t_ = t;
}

StepOutput MusicActivity::start(Millis now) {
  StepOutput out;
  started_ = true;
  start_at_ = now;
  last_t_ = now;
  last_activity_ = {now, now};
  if (config_.level == kTutorialLevel) {
    out.emit(FeedbackCategory::Instruction, "MusicTutorial", Target::Both, now);
  } else if (!level_has_notes(config_.level)) {
    out.emit(FeedbackCategory::Instruction, "MusicFreePlay", Target::Both, now);
  }
  out.effect("music_started", {{"song_id", config_.chart.song_id},
                               {"level", config_.level},
                               {"notes", level_has_notes(config_.level)},
                               {"extra_zones", config_.zones.extra_zones(config_.level)}});
  return out;
}

StepOutput MusicActivity::step(const MusicEvent& event) {
  return std::visit(
      [this](const auto& e) -> StepOutput {
        using E = std::decay_t<decltype(e)>;
        check_order(e.t);
        StepOutput out;
        if constexpr (std::is_same_v<E, Spawn>) {
          out.append(spawn_due(e.t));
        } else if constexpr (std::is_same_v<E, Hit>) {
          out.append(spawn_due(e.t));
          out.append(expire(e.t));
          out.append(on_hit(e.side, e.t));
        } else {
          out.append(spawn_due(e.t));
          out.append(expire(e.t));
          out.append(check_idle(e.t));
        }
        out.append(check_complete(e.t));
        return out;
      },
      event);
}

StepOutput MusicActivity::spawn_due(Millis t) {
  StepOutput out;
  if (!level_has_notes(config_.level)) return out;
  const auto& chart = config_.chart;
  while (next_beat_ < chart.beats.size() && start_at_ + chart.spawn_time(next_beat_) <= t) {
    auto [side, next] = next_assignment(policy_, rng_);
    policy_ = next;
    Note note{next_beat_, side, start_at_ + chart.spawn_time(next_beat_), start_at_ + chart.beats[next_beat_], {}};
    out.effect("note_spawned", {{"index", note.index},
                                {"side", to_string(side)},
                                {"spawn_time", note.spawn_time},
                                {"beat_time", note.beat_time}});
    notes_.push_back(note);
    ++next_beat_;
  }
  return out;
}

StepOutput MusicActivity::expire(Millis t) {
  StepOutput out;
  const Millis late = std::max(config_.zones.red_late_limit, config_.zones.green_half_width);
  for (auto& note : notes_) {
    if (!note.judgement && t > note.beat_time + late) out.append(record(note, Judgement::Miss, t));
  }
  return out;
}

StepOutput MusicActivity::on_hit(Side side, Millis t) {
  StepOutput out;
  last_activity_[idx(side)] = t;
  if (!level_has_notes(config_.level)) {
    ++free_hits_;
    out.effect("drum_hit", {{"side", to_string(side)}, {"t", t}});
    return out;
  }
  // Earliest live note on this side; hits well before it are stray input.
  auto it = std::find_if(notes_.begin(), notes_.end(),
                         [&](const Note& n) { return n.side == side && !n.judgement; });
  if (it == notes_.end() || t < it->beat_time - config_.zones.yellow_early_limit) {
    out.effect("stray_hit", {{"side", to_string(side)}, {"t", t}});
    return out;
  }
  Note probe = *it;
  Judgement j = judge_hit(probe, t, config_.zones, config_.level);
  out.append(record(*it, j, t));
  return out;
}

StepOutput MusicActivity::record(Note& note, Judgement j, Millis t) {
  StepOutput out;
  note.judgement = j;
  ++judged_[static_cast<std::size_t>(j)];
  const auto s = idx(note.side);
  out.effect("note_judged", {{"index", note.index},
                             {"side", to_string(note.side)},
                             {"judgement", to_string(j)},
                             {"dt", t - note.beat_time}});
  switch (j) {
    case Judgement::Green:
      ++score_[s];
      out.score_delta += 1;
      early_run_[s] = late_run_[s] = miss_run_[s] = 0;
      break;
    case Judgement::EarlyYellow:
      late_run_[s] = miss_run_[s] = 0;
      if (++early_run_[s] >= config_.early_threshold) {
        out.emit(FeedbackCategory::Corrective, side_code(note.side, "PlayingFast"), target_of(note.side), t);
        early_run_[s] = 0;
      }
      break;
    case Judgement::LateRed:
      early_run_[s] = miss_run_[s] = 0;
      if (++late_run_[s] >= config_.late_threshold) {
        out.emit(FeedbackCategory::Corrective, side_code(note.side, "PlayingSlow"), target_of(note.side), t);
        late_run_[s] = 0;
      }
      break;
    case Judgement::Miss:
      early_run_[s] = late_run_[s] = 0;
      if (++miss_run_[s] >= config_.miss_threshold) {
        out.emit(FeedbackCategory::Corrective, side_code(note.side, "MissReminder"), target_of(note.side), t);
        miss_run_[s] = 0;
      }
      break;
  }
  return out;
}

StepOutput MusicActivity::check_idle(Millis t) {
  StepOutput out;
  if (!level_has_notes(config_.level)) {
    Millis last = std::max(last_activity_[0], last_activity_[1]);
    if (t - last > config_.idle_window) {
      out.emit(FeedbackCategory::Encouragement, "KeepGoing", Target::Both, t);
      last_activity_ = {t, t};
    }
    return out;
  }
  for (Side side : {Side::Left, Side::Right}) {
    auto s = idx(side);
    if (pending(side) > 0 && t - last_activity_[s] > config_.idle_window) {
      out.emit(FeedbackCategory::Corrective, side_code(side, "Inactive"), target_of(side), t);
      last_activity_[s] = t;
    }
  }
  return out;
}

StepOutput MusicActivity::check_complete(Millis t) {
  StepOutput out;
  if (complete_) return out;
  const auto& beats = config_.chart.beats;
  bool done = false;
  if (level_has_notes(config_.level)) {
    done = next_beat_ == beats.size() && judged_total() == notes_.size();
  } else {
    Millis end = beats.empty() ? 0 : beats.back();
    done = t >= start_at_ + end + config_.zones.red_late_limit;
  }
  if (done) {
    complete_ = true;
    out.emit(FeedbackCategory::Celebration, "MusicComplete", Target::Both, t);
    out.effect("activity_complete", {{"score_left", score_[0]}, {"score_right", score_[1]}});
  }
  return out;
}

nlohmann::json MusicActivity::summary() const {
  return {{"level", config_.level},
          {"score", {{"Left", score_[0]}, {"Right", score_[1]}}},
          {"spawned", notes_.size()},
          {"judged",
           {{"Green", judged_[0]}, {"EarlyYellow", judged_[1]}, {"LateRed", judged_[2]}, {"Miss", judged_[3]}}},
          {"pending", {{"Left", pending(Side::Left)}, {"Right", pending(Side::Right)}}},
          {"free_hits", free_hits_},
          {"complete", complete_}};
}

}  // namespace sarvr::music
