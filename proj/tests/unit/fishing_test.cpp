#include <gtest/gtest.h>

#include "sarvr/fishing.hpp"

using namespace sarvr;
using namespace sarvr::fishing;

namespace {

struct Rig {
  FishingState s;
  Rng rng{7};
  Millis t = 0;

  explicit Rig(LevelSpec spec = {2, 3, 20'000, false}) { s = initial_state(2, spec, rng, 0); }

  StepOutput operator()(const FishingEvent& e) { return step(s, e, rng); }

  void hook() {
    (*this)(CastGesture{Side::Right, t += 10});
    (*this)(Move{Side::Right, s.fish, t += 10});
    (*this)(Grab{Side::Right, t += 10});
  }
};

}  // namespace

TEST(Fishing, InitialStateFollowsLevelSpec) {
  auto l4 = LevelSpec::for_level(4);
  EXPECT_TRUE(l4.single_active_bucket);
  Rig r(l4);
  EXPECT_EQ(r.s.phase, Phase::Idle);
  EXPECT_EQ(r.s.fish_remaining, l4.fish_count);
  EXPECT_EQ(static_cast<int>(r.s.buckets.size()), l4.bucket_count);
  EXPECT_EQ(r.s.active_buckets(), 1u);
  EXPECT_EQ(LevelSpec::from_json(l4.to_json()).fish_count, l4.fish_count);
}

TEST(Fishing, OnlyTheRodCasts) {
  Rig r;
  EXPECT_THROW(r(CastGesture{Side::Left, 1}), Error);
  r(CastGesture{Side::Right, 2});
  EXPECT_EQ(r.s.phase, Phase::Cast);
}

TEST(Fishing, HookNeedsOverlap) {
  Rig r;
  r(CastGesture{Side::Right, 1});
  r(Move{Side::Right, {r.s.fish.x + 0.2, r.s.fish.y}, 2});
  r(Grab{Side::Right, 3});
  EXPECT_EQ(r.s.phase, Phase::Cast);
  r(Move{Side::Right, {r.s.fish.x + 0.03, r.s.fish.y}, 4});
  r(Grab{Side::Right, 5});
  EXPECT_EQ(r.s.phase, Phase::Hooked);
}

TEST(Fishing, HookedFishFollowsRodAndNetOverlapMakesTransferPending) {
  Rig r;
  r.hook();
  r(Move{Side::Right, {0.6, 0.6}, r.t += 10});
  EXPECT_EQ(r.s.fish, (Point{0.6, 0.6}));
  r(Move{Side::Left, {0.61, 0.6}, r.t += 10});
  EXPECT_EQ(r.s.phase, Phase::TransferPending);
  r(Move{Side::Left, {0.2, 0.2}, r.t += 10});
  EXPECT_EQ(r.s.phase, Phase::Hooked);
  r(Grab{Side::Left, r.t += 10});
  EXPECT_EQ(r.s.phase, Phase::Hooked);
  r(Move{Side::Left, {0.6, 0.6}, r.t += 10});
  r(Grab{Side::Right, r.t += 10});
  EXPECT_EQ(r.s.phase, Phase::TransferPending);
  r(Grab{Side::Left, r.t += 10});
  EXPECT_EQ(r.s.phase, Phase::InNet);
}

TEST(Fishing, DepositScoresAndReturnsToIdle) {
  Rig r;
  r.hook();
  r(Move{Side::Left, r.s.rod, r.t += 10});
  r(Grab{Side::Left, r.t += 10});
  r(Release{Side::Left, r.t += 10});
  EXPECT_EQ(r.s.phase, Phase::InNet);
  r(Move{Side::Left, r.s.buckets[1].position, r.t += 10});
  auto out = r(Release{Side::Left, r.t += 10});
  EXPECT_EQ(out.score_delta, 1);
  EXPECT_EQ(r.s.phase, Phase::Idle);
  EXPECT_EQ(r.s.score, 1);
  EXPECT_EQ(r.s.fish_remaining, 1);
  ASSERT_FALSE(out.feedback.empty());
  EXPECT_EQ(out.feedback[0].code, "FishDeposited");
}

TEST(Fishing, InactiveBucketRefusesTheFish) {
  Rig r({2, 3, 20'000, true});
  std::size_t inactive = 0;
  while (r.s.buckets[inactive].active) ++inactive;
  r.hook();
  r(Move{Side::Left, r.s.rod, r.t += 10});
  r(Grab{Side::Left, r.t += 10});
  r(Move{Side::Left, r.s.buckets[inactive].position, r.t += 10});
  auto out = r(Release{Side::Left, r.t += 10});
  EXPECT_EQ(r.s.phase, Phase::InNet);
  EXPECT_EQ(out.score_delta, 0);
  ASSERT_EQ(out.feedback.size(), 1u);
  EXPECT_EQ(out.feedback[0].code, "LeftWrongBucket");
}

TEST(Fishing, LastFishCompletesTheLevel) {
  Rig r({1, 1, 20'000, false});
  r.hook();
  r(Move{Side::Left, r.s.rod, r.t += 10});
  r(Grab{Side::Left, r.t += 10});
  r(Move{Side::Left, r.s.buckets[0].position, r.t += 10});
  auto out = r(Release{Side::Left, r.t += 10});
  EXPECT_TRUE(r.s.complete());
  bool completed = false;
  for (const auto& e : out.effects) completed = completed || e.name == "activity_complete";
  EXPECT_TRUE(completed);
  r(CastGesture{Side::Right, r.t += 10});
  EXPECT_EQ(r.s.phase, Phase::Idle);
}

TEST(Fishing, TimeoutsRemindTheRoleThenSuggestThePartner) {
  Rig r;
  auto first = check_timeouts(r.s, 20'001);
  ASSERT_EQ(first.size(), 1u);
  EXPECT_EQ(first[0].code, "RightCastReminder");
  EXPECT_TRUE(check_timeouts(r.s, 30'000).empty());
  auto second = check_timeouts(r.s, 40'002);
  ASSERT_EQ(second.size(), 2u);
  EXPECT_EQ(second[1].code, "RightAskPartner");

  r.hook();
  auto net = check_timeouts(r.s, r.t + 20'001);
  ASSERT_EQ(net.size(), 1u);
  EXPECT_EQ(net[0].code, "LeftNetReminder");
}

TEST(Fishing, StaleEventsAreRejected) {
  Rig r;
  r(Tick{100});
  EXPECT_THROW(r(Tick{50}), Error);
}
