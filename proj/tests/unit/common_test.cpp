#include <gtest/gtest.h>

#include <set>

#include "sarvr/common.hpp"

using namespace sarvr;

TEST(Parse, DoubleAcceptsWholeFieldOnly) {
  EXPECT_EQ(parse_double(" 1.5 "), 1.5);
  EXPECT_EQ(parse_double("+2"), 2.0);
  EXPECT_EQ(parse_double("-0.25"), -0.25);
  EXPECT_FALSE(parse_double("1.5x"));
  EXPECT_FALSE(parse_double(""));
  EXPECT_FALSE(parse_double("nan"));
  EXPECT_FALSE(parse_double("inf"));
}

TEST(Parse, Int) {
  EXPECT_EQ(parse_int("42"), 42);
  EXPECT_EQ(parse_int(" -7\r"), -7);
  EXPECT_FALSE(parse_int("4.2"));
  EXPECT_FALSE(parse_int("abc"));
}

TEST(Strings, SplitKeepsEmptyFields) {
  auto parts = split("a,,b,", ',');
  ASSERT_EQ(parts.size(), 4u);
  EXPECT_EQ(parts[0], "a");
  EXPECT_EQ(parts[1], "");
  EXPECT_EQ(parts[2], "b");
  EXPECT_EQ(parts[3], "");
  EXPECT_EQ(trim("\t x \n"), "x");
  EXPECT_EQ(to_lower("Hand LEFT"), "hand left");
}

TEST(Enums, RoundTripNames) {
  for (Side s : {Side::Left, Side::Right}) EXPECT_EQ(side_from_string(to_string(s)), s);
  for (Target t : {Target::Left, Target::Right, Target::Both}) EXPECT_EQ(target_from_string(to_string(t)), t);
  for (WandColor c : {WandColor::Red, WandColor::Blue}) EXPECT_EQ(wand_color_from_string(to_string(c)), c);
  EXPECT_EQ(side_from_string("left"), Side::Left);
  EXPECT_FALSE(side_from_string("LEFT"));
  EXPECT_FALSE(target_from_string("Middle"));
  EXPECT_EQ(wand_color_for(Side::Left), WandColor::Red);
  EXPECT_EQ(side_for(WandColor::Blue), Side::Right);
}

TEST(Errors, EveryCodeHasADistinctName) {
  std::set<std::string_view> names;
  for (int c = 0; c <= static_cast<int>(ErrorCode::ParseError); ++c) {
    auto name = to_string(static_cast<ErrorCode>(c));
    EXPECT_FALSE(name.empty());
    names.insert(name);
  }
  EXPECT_EQ(names.size(), static_cast<std::size_t>(ErrorCode::ParseError) + 1);
  Error e(ErrorCode::BadCrc, "frame 3");
  EXPECT_EQ(e.code(), ErrorCode::BadCrc);
  EXPECT_EQ(e.detail(), "frame 3");
  EXPECT_NE(std::string(e.what()).find("BadCrc"), std::string::npos);
}

TEST(Rng, SeededStreamsRepeat) {
  Rng a(99), b(99), c(100);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    if (i == 0) EXPECT_NE(x, c.next());
  }
}

TEST(Rng, IndexAndUniformStayInRange) {
  Rng r(1);
  std::array<int, 7> counts{};
  for (int i = 0; i < 70'000; ++i) {
    const auto k = r.index(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
    const double u = r.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  for (int c : counts) EXPECT_NEAR(c, 10'000, 500);
}

TEST(Geometry, RectAndDistance) {
  Rect r{0.1, 0.2, 0.3, 0.4};
  EXPECT_TRUE(r.contains({0.1, 0.4}));
  EXPECT_FALSE(r.contains({0.31, 0.3}));
  EXPECT_DOUBLE_EQ(r.center().x, 0.2);
  EXPECT_DOUBLE_EQ(distance({0, 0}, {3, 4}), 5.0);
}
