#pragma once

// Scripted cooperative participant pairs for each activity.

#include <string>
#include <vector>

#include "sarvr/fishing.hpp"
#include "sarvr/music.hpp"
#include "sarvr/painting.hpp"
#include "sarvr/spelling.hpp"

namespace script {

using namespace sarvr;

struct Outcome {
  bool complete = false;
  int score = 0;
  std::vector<std::string> effects;
  std::string detail;
};

inline void collect(Outcome& o, const StepOutput& out) {
  for (const auto& e : out.effects) o.effects.push_back(e.name);
  o.score += out.score_delta;
}

/// Both players hit every note on its beat.
inline Outcome play_music(int level, std::uint64_t seed, std::size_t beats = 16) {
  music::MusicConfig cfg;
  cfg.level = level;
  cfg.chart = music::BeatChart::regular("scripted", beats, 700, 2500, 2000);
  music::MusicActivity act(cfg, seed);
  Outcome o;
  collect(o, act.start(0));
  const Millis end = cfg.chart.beats.back() + 1000;
  for (Millis t = 0; t <= end && !act.complete(); t += 10) {
    collect(o, act.step(music::Spawn{t}));
    for (const auto& n : std::vector<music::Note>(act.notes())) {
      if (!n.judgement && n.beat_time == t) collect(o, act.step(music::Hit{n.side, t}));
    }
    collect(o, act.step(music::Tick{t}));
  }
  o.complete = act.complete();
  o.detail = "green=" + std::to_string(act.judged_count(music::Judgement::Green)) + "/" +
             std::to_string(act.spawned());
  return o;
}

/// Rod casts and hooks, net scoops and deposits into an active bucket.
inline Outcome play_fishing(int level, std::uint64_t seed) {
  fishing::FishingActivity act(level, fishing::LevelSpec::for_level(level), seed);
  Outcome o;
  collect(o, act.start(0));
  Millis t = 0;
  auto step = [&](const fishing::FishingEvent& e) { collect(o, act.step(e)); };
  int guard = 0;
  while (!act.complete() && guard++ < 1000) {
    t += 500;
    step(fishing::CastGesture{Side::Right, t});
    step(fishing::Move{Side::Right, act.state().fish, t += 200});
    step(fishing::Grab{Side::Right, t += 100});
    step(fishing::Move{Side::Left, act.state().rod, t += 300});
    step(fishing::Grab{Side::Left, t += 100});
    const auto& buckets = act.state().buckets;
    Point target = buckets.front().position;
    for (const auto& b : buckets) {
      if (b.active) {
        target = b.position;
        break;
      }
    }
    step(fishing::Move{Side::Left, target, t += 400});
    step(fishing::Release{Side::Left, t += 100});
  }
  o.complete = act.complete();
  o.detail = "score=" + std::to_string(act.state().score);
  return o;
}

/// Each owner picks its segment's color and fills it. With only_side set,
/// the other participant does nothing.
inline Outcome play_painting(int level, std::optional<Side> only_side = std::nullopt) {
  auto canvas = painting::CanvasSpec::for_level(level);
  painting::PaintingActivity act(level, canvas);
  Outcome o;
  collect(o, act.start(0));
  Millis t = 0;
  int rejected = 0;
  for (const auto& seg : canvas.segments) {
    const Side owner = canvas.owner(seg);
    const Side actor = only_side.value_or(owner);
    auto r1 = act.step(painting::SelectColor{actor, seg.target_color, t += 300});
    collect(o, r1.output);
    auto r2 = act.step(painting::Paint{actor, seg.id, t += 300});
    collect(o, r2.output);
    if (!r1.accepted() || !r2.accepted()) ++rejected;
  }
  o.complete = act.complete();
  o.detail = "rejected=" + std::to_string(rejected);
  return o;
}

/// Whoever's turn it is picks the planned tile. spelled collects the letters
/// of every completed round.
struct SpellingOutcome : Outcome {
  std::vector<std::string> words;
  std::vector<std::string> spelled;
  std::vector<std::string> tricks;
};

inline SpellingOutcome play_spelling(int level, std::uint64_t seed, int rounds = 3) {
  spelling::SpellingConfig cfg;
  cfg.level = level;
  cfg.rounds = rounds;
  spelling::SpellingActivity act(cfg, spelling::Lexicon::builtin(), seed);
  SpellingOutcome o;
  auto absorb = [&](const StepOutput& out) {
    collect(o, out);
    for (const auto& e : out.effects) {
      if (e.name == "trick") o.tricks.push_back(e.payload.at("name").get<std::string>());
    }
  };
  absorb(act.start(0));
  Millis t = 0;
  std::string letters;
  std::string word = act.round().word;
  int guard = 0;
  while (!act.complete() && guard++ < 500) {
    const auto& round = act.round();
    const auto side = round.active_side();
    if (!side) break;
    const int id = round.planned[round.next_index];
    letters += round.letter(id)->ch;
    const bool last = round.next_index + 1 == round.word.size();
    auto r = act.step(spelling::SelectLetter{*side, id, t += 400});
    absorb(r.output);
    if (!r.accepted()) {
      o.detail = "rejected letter";
      break;
    }
    if (last) {
      o.words.push_back(word);
      o.spelled.push_back(letters);
      letters.clear();
      word = act.round().word;
    }
  }
  o.complete = act.complete();
  return o;
}

}  // namespace script
