#include <gtest/gtest.h>

#include "sarvr/music.hpp"

using namespace sarvr;
using namespace sarvr::music;

namespace {

Note note_at(Millis beat) { return Note{0, Side::Left, beat - 2000, beat, {}}; }

MusicConfig config(int level, std::size_t beats = 6) {
  MusicConfig c;
  c.level = level;
  c.chart = BeatChart::regular("unit", beats, 1000, 3000, 2000);
  c.policy.mode = AssignmentMode::Alternate;
  return c;
}

std::vector<std::string> effect_names(const StepOutput& out) {
  std::vector<std::string> names;
  for (const auto& e : out.effects) names.push_back(e.name);
  return names;
}

}  // namespace

TEST(Chart, ValidationRejectsUnsortedAndEarlyBeats) {
  BeatChart c{"x", {3000, 2500}, 2000};
  EXPECT_THROW(c.validate(), Error);
  BeatChart early{"x", {1000}, 2000};
  EXPECT_THROW(early.validate(), Error);
  BeatChart still{"x", {3000}, 0};
  EXPECT_THROW(still.validate(), Error);
  auto ok = BeatChart::regular("x", 3, 500, 2000, 2000);
  EXPECT_NO_THROW(ok.validate());
  EXPECT_EQ(ok.beats, (std::vector<Millis>{2000, 2500, 3000}));
  EXPECT_EQ(BeatChart::from_json(ok.to_json()).beats, ok.beats);
}

TEST(Judge, ZonesWithoutExtraZonesOnlyGreenCounts) {
  ZoneConfig z;
  for (Millis dt : {-150, 0, 150}) {
    auto n = note_at(5000);
    EXPECT_EQ(judge_hit(n, 5000 + dt, z, 3), Judgement::Green) << dt;
  }
  for (Millis dt : {-151, -400, 151, 400, 401, -401}) {
    auto n = note_at(5000);
    EXPECT_EQ(judge_hit(n, 5000 + dt, z, 3), Judgement::Miss) << dt;
  }
}

TEST(Judge, LevelFourSplitsEarlyAndLate) {
  ZoneConfig z;
  auto early = note_at(5000);
  EXPECT_EQ(judge_hit(early, 4700, z, 4), Judgement::EarlyYellow);
  auto late = note_at(5000);
  EXPECT_EQ(judge_hit(late, 5300, z, 4), Judgement::LateRed);
  auto miss = note_at(5000);
  EXPECT_EQ(judge_hit(miss, 5401, z, 4), Judgement::Miss);
  EXPECT_THROW(judge_hit(miss, 5000, z, 4), Error);
}

TEST(Assignment, ProbabilityDecaysReceiverAndResetsPartner) {
  AssignmentPolicy p;
  p.decay = 0.5;
  Rng rng(3);
  auto [side, next] = next_assignment(p, rng);
  if (side == Side::Left) {
    EXPECT_DOUBLE_EQ(next.w_left, 0.5);
    EXPECT_DOUBLE_EQ(next.w_right, 1.0);
  } else {
    EXPECT_DOUBLE_EQ(next.w_right, 0.5);
    EXPECT_DOUBLE_EQ(next.w_left, 1.0);
  }
  AssignmentPolicy skewed;
  skewed.w_left = 0.25;
  EXPECT_DOUBLE_EQ(skewed.p_left(), 0.2);
}

TEST(Assignment, SameSeedSameSides) {
  auto chart = BeatChart::regular("x", 200, 500, 2000, 2000);
  Rng a(8), b(8);
  EXPECT_EQ(assign_all(chart, {}, a), assign_all(chart, {}, b));
}

TEST(Activity, SpawnsAtTravelTimeBeforeBeat) {
  MusicActivity m(config(3), 1);
  m.start(1000);
  auto out = m.step(Spawn{1999});
  EXPECT_EQ(m.spawned(), 0u);
  out = m.step(Spawn{2000});
  EXPECT_EQ(m.spawned(), 1u);
  EXPECT_EQ(m.notes()[0].beat_time, 4000);
  EXPECT_EQ(m.notes()[0].side, Side::Left);
  EXPECT_EQ(effect_names(out), std::vector<std::string>{"note_spawned"});
}

TEST(Activity, GreenHitScoresForItsSideOnly) {
  MusicActivity m(config(3), 1);
  m.start(0);
  m.step(Spawn{1000});
  auto out = m.step(Hit{Side::Right, 3000});
  EXPECT_EQ(effect_names(out).back(), "stray_hit");
  EXPECT_EQ(out.score_delta, 0);
  out = m.step(Hit{Side::Left, 3050});
  EXPECT_EQ(out.score_delta, 1);
  EXPECT_EQ(m.score(Side::Left), 1);
  EXPECT_EQ(m.score(Side::Right), 0);
}

TEST(Activity, ThreeEarlyHitsTriggerSlowDown) {
  MusicActivity m(config(4), 1);
  m.start(0);
  std::vector<std::string> codes;
  for (int i = 0; i < 6; ++i) {
    const Millis beat = 3000 + 1000 * i;
    const Side side = i % 2 == 0 ? Side::Left : Side::Right;
    for (auto& f : m.step(Hit{side, beat - 300}).feedback) {
      if (f.category == FeedbackCategory::Corrective) codes.push_back(f.code);
    }
  }
  EXPECT_EQ(codes, (std::vector<std::string>{"LeftPlayingFast", "RightPlayingFast"}));
  EXPECT_EQ(m.judged_count(Judgement::EarlyYellow), 6u);
  EXPECT_EQ(m.total_score(), 0);
}

TEST(Activity, UnhitNotesExpireAsMissesAndRemind) {
  MusicActivity m(config(3), 1);
  m.start(0);
  StepOutput all;
  for (Millis t = 0; t <= 12'000; t += 100) all.append(m.step(Tick{t}));
  EXPECT_EQ(m.judged_count(Judgement::Miss), 6u);
  EXPECT_TRUE(m.complete());
  int reminders = 0;
  for (const auto& f : all.feedback) reminders += f.code.find("MissReminder") != std::string::npos;
  EXPECT_EQ(reminders, 2);
}

TEST(Activity, FreePlayCountsHitsAndEndsAfterSong) {
  MusicActivity m(config(2), 1);
  auto start = m.start(0);
  ASSERT_EQ(start.feedback.size(), 1u);
  EXPECT_EQ(start.feedback[0].code, "MusicFreePlay");
  m.step(Hit{Side::Left, 100});
  m.step(Hit{Side::Right, 200});
  EXPECT_EQ(m.spawned(), 0u);
  EXPECT_EQ(m.summary()["free_hits"], 2);
  m.step(Tick{8000});
  EXPECT_FALSE(m.complete());
  auto done = m.step(Tick{8400});
  EXPECT_TRUE(m.complete());
  EXPECT_EQ(done.effects.back().name, "activity_complete");
}

TEST(Activity, RejectsEventsOutOfOrderAndBadLevels) {
  MusicActivity m(config(3), 1);
  m.start(0);
  m.step(Tick{500});
  EXPECT_THROW(m.step(Tick{499}), Error);
  EXPECT_THROW(MusicActivity(config(5), 1), Error);
  auto bad = config(3);
  bad.zones.green_half_width = 500;
  EXPECT_THROW(MusicActivity(bad, 1), Error);
}

TEST(Activity, IdleSideGetsReminder) {
  auto cfg = config(3, 40);
  cfg.idle_window = 5000;
  MusicActivity m(cfg, 1);
  m.start(0);
  std::vector<std::string> codes;
  for (Millis t = 0; t <= 9000; t += 100) {
    for (auto& f : m.step(Tick{t}).feedback) codes.push_back(f.code);
  }
  EXPECT_NE(std::find(codes.begin(), codes.end(), "LeftInactive"), codes.end());
}
