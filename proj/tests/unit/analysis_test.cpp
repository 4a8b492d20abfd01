#include <gtest/gtest.h>

#include <cmath>

#include "sarvr/analysis.hpp"
#include "support/oracles.hpp"

using namespace sarvr;
using namespace sarvr::analysis;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidConfig;
}

RatingSheet sheet(std::string id, int session, std::array<int, kCategoryCount> items) {
  return {std::move(id), session, items};
}

}  // namespace

TEST(Screening, AesBoundsAndErrors) {
  std::vector<int> items(kAesItems, 1);
  EXPECT_EQ(score_aes(items), kAesMin);
  std::fill(items.begin(), items.end(), 4);
  EXPECT_EQ(score_aes(items), kAesMax);
  items[3] = 5;
  EXPECT_EQ(code_of([&] { score_aes(items); }), ErrorCode::OutOfRange);
  items.pop_back();
  EXPECT_EQ(code_of([&] { score_aes(items); }), ErrorCode::BadItemCount);
}

TEST(Screening, SageBands) {
  EXPECT_EQ(classify_sage(22), Cognition::Normal);
  EXPECT_EQ(classify_sage(17), Cognition::Normal);
  EXPECT_EQ(classify_sage(16), Cognition::MCI);
  EXPECT_EQ(classify_sage(15), Cognition::MCI);
  EXPECT_EQ(classify_sage(14), Cognition::Dementia);
  EXPECT_EQ(classify_sage(0), Cognition::Dementia);
  EXPECT_EQ(code_of([] { classify_sage(23); }), ErrorCode::OutOfRange);
  EXPECT_EQ(code_of([] { classify_sage(-1); }), ErrorCode::OutOfRange);
}

TEST(Ratings, CsvWithHeaderAndFirstFinalSelection) {
  const std::string csv =
      "participant_id,session_index,wand_comfort,wand_confidence,robot_comfort,robot_confidence,screen_comfort,"
      "screen_confidence\n"
      "P1,3,5,5,5,5,5,5\n"
      "P1,1,3,3,3,3,3,3\n"
      "P1,2,1,1,1,1,1,1\n"
      "# comment\n"
      "P2,1,2,2,2,2,2,2\n"
      "P2,4,2,3,4,5,2,2\n";
  auto sheets = parse_ratings_csv(csv);
  ASSERT_EQ(sheets.size(), 5u);
  auto [first, final] = first_and_final(sheets);
  ASSERT_EQ(first.size(), 2u);
  EXPECT_EQ(first[0].session_index, 1);
  EXPECT_EQ(final[0].session_index, 3);

  auto imp = rating_improvements(first, final);
  EXPECT_EQ(imp.participants, 2u);
  EXPECT_DOUBLE_EQ(imp.category_delta[0], 1.0);
  EXPECT_DOUBLE_EQ(imp.category_delta[3], 2.5);
  EXPECT_DOUBLE_EQ(imp.overall, (1.0 + 1.5 + 2.0 + 2.5 + 1.0 + 1.0) / 6);
  EXPECT_NE(improvements_csv(imp).find("wand_comfort"), std::string::npos);

  EXPECT_EQ(code_of([] { parse_ratings_csv("P1,1,3,3,3,3,3\n"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_ratings_csv("P1,x,3,3,3,3,3,3\n"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_ratings_csv("P1,1,3,3,3,3,3,6\n"); }), ErrorCode::OutOfRange);
  EXPECT_EQ(code_of([] { first_and_final({sheet("P9", 1, {1, 1, 1, 1, 1, 1})}); }),
            ErrorCode::UnmatchedParticipant);
}

TEST(Ratings, UnmatchedParticipantsAreRejected) {
  std::vector<RatingSheet> first = {sheet("A", 1, {1, 1, 1, 1, 1, 1}), sheet("B", 1, {1, 1, 1, 1, 1, 1})};
  std::vector<RatingSheet> final = {sheet("A", 2, {2, 2, 2, 2, 2, 2}), sheet("C", 2, {2, 2, 2, 2, 2, 2})};
  EXPECT_EQ(code_of([&] { rating_improvements(first, final); }), ErrorCode::UnmatchedParticipant);
}

TEST(Ratings, PoolingModes) {
  std::vector<RatingSheet> first = {sheet("A", 1, {1, 2, 3, 4, 5, 1}), sheet("B", 1, {3, 3, 3, 3, 3, 3})};
  std::vector<RatingSheet> final = {sheet("A", 2, {2, 2, 2, 5, 5, 5}), sheet("B", 2, {4, 4, 4, 4, 4, 4})};
  auto pairs = pool(first, final, Pooling::Pairs);
  EXPECT_EQ(pairs.size(), 12u);
  auto means = pool(first, final, Pooling::CategoryMeans);
  ASSERT_EQ(means.size(), kCategoryCount);
  EXPECT_DOUBLE_EQ(means[0].first, 2.0);
  EXPECT_DOUBLE_EQ(means[0].second, 3.0);
  EXPECT_DOUBLE_EQ(means[5].first, 2.0);
  EXPECT_DOUBLE_EQ(means[5].second, 4.5);
}

TEST(Wilcoxon, AverageRanksAndZeroDrop) {
  const std::vector<double> d = {2, -1, 2, 4, -2};
  EXPECT_EQ(signed_ranks(d), (std::vector<double>{3, 1, 3, 5, 3}));
  auto r = wilcoxon_differences(std::vector<double>{0, 2, -1, 0, 2, 4, -2});
  EXPECT_EQ(r.n_effective, 5u);
  EXPECT_DOUBLE_EQ(r.w_plus, 11);
  EXPECT_DOUBLE_EQ(r.w_minus, 4);
  EXPECT_EQ(r.method, Method::Exact);
  auto want = oracle::wilcoxon_enumerate({2, -1, 2, 4, -2});
  EXPECT_NEAR(r.p_two_sided, want.p_two_sided, 1e-12);
  EXPECT_EQ(code_of([] { wilcoxon_differences(std::vector<double>{0, 0}); }), ErrorCode::AllZeroDifferences);
}

TEST(Wilcoxon, SmallestExactCases) {
  // One positive difference: both tails hold half the mass.
  EXPECT_DOUBLE_EQ(wilcoxon_differences(std::vector<double>{3}).p_two_sided, 1.0);
  // Six positives: only the all-positive arrangement is as extreme, p = 2/64.
  EXPECT_DOUBLE_EQ(wilcoxon_differences(std::vector<double>{1, 2, 3, 4, 5, 6}).p_two_sided, 2.0 / 64);
  const std::pair<double, double> pairs[] = {{1, 2}, {1, 3}, {2, 5}, {1, 5}, {0, 5}, {0, 6}};
  EXPECT_DOUBLE_EQ(wilcoxon_signed_rank(pairs).w_plus, 21);
}

TEST(Wilcoxon, NormalApproximationAboveTwenty) {
  std::vector<double> d;
  for (int i = 1; i <= 25; ++i) d.push_back(i % 5 == 0 ? -i : i);
  d.push_back(3);  // ties with 3
  auto r = wilcoxon_differences(d);
  EXPECT_EQ(r.method, Method::Normal);
  ASSERT_EQ(r.n_effective, 26u);

  // Hand computation: ranks 1..26 with |3| tied at positions 3 and 4.
  const double n = 26;
  double w_minus = 0;
  for (int i = 5; i <= 25; i += 5) w_minus += i + 1;  // ranks past the tied pair shift by one
  const double w_plus = n * (n + 1) / 2 - w_minus;
  const double mean = n * (n + 1) / 4;
  const double var = n * (n + 1) * (2 * n + 1) / 24 - (8.0 - 2.0) / 48;
  const double z = (std::abs(w_plus - mean) - 0.5) / std::sqrt(var);
  EXPECT_DOUBLE_EQ(r.w_plus, w_plus);
  EXPECT_NEAR(r.z, z, 1e-12);
  EXPECT_NEAR(r.p_two_sided, std::erfc(z / std::sqrt(2.0)), 1e-12);
  EXPECT_NE(wilcoxon_table(r).find("normal"), std::string::npos);
}

TEST(Events, RatesAndLogParsing) {
  auto log = parse_event_log(
      "# duration_min=25\n"
      "t_min,kind\n"
      "0.5,ParticipantInteraction\n"
      "1.0,RobotIntervention\n"
      "24.9,ParticipantInteraction\n"
      "25,ResearcherIntervention\n");
  auto r = event_rates(log);
  EXPECT_EQ(r.counts[0], 2u);
  EXPECT_DOUBLE_EQ(r.rate(EventKind::ParticipantInteraction), 2.0 / 25);
  EXPECT_DOUBLE_EQ(r.rate(EventKind::ResearcherIntervention), 1.0 / 25);
  EXPECT_EQ(parse_event_log("1,RobotIntervention\n", 10.0).duration_min, 10.0);
  EXPECT_NE(rates_csv(r).find("RobotIntervention"), std::string::npos);

  EXPECT_EQ(code_of([] { parse_event_log("1,RobotIntervention\n"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_event_log("1,Sneeze\n", 5.0); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { event_rates({0.0, {}}); }), ErrorCode::ZeroDuration);
  EXPECT_EQ(code_of([] { event_rates({5.0, {{6.0, EventKind::RobotIntervention}}}); }), ErrorCode::OutOfRange);
  EXPECT_EQ(event_kind_from_string("ResearcherIntervention"), EventKind::ResearcherIntervention);
}
