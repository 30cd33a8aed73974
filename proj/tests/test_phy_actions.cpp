#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <string>

#include "uwbadapt/phy_actions.hpp"

using namespace uwbadapt;

TEST(ActionSpace, HasSeventyTwoDistinctSettings) {
  const auto space = enumerate_actions();
  ASSERT_EQ(space.size(), 72u);
  std::set<std::string> seen;
  for (const auto& s : space) {
    EXPECT_TRUE(is_valid(s));
    seen.insert(to_string(s));
  }
  EXPECT_EQ(seen.size(), 72u);
}

TEST(ActionSpace, IndexZeroIsAllMinima) {
  EXPECT_EQ(index_to_action(0), make_setting(3, 128, 16, 110, 0.0));
  EXPECT_EQ(index_to_action(71), make_setting(7, 4096, 64, 6800, 10.5));
}

TEST(ActionSpace, RoundTripBijection) {
  for (std::size_t k = 0; k < 72; ++k) EXPECT_EQ(action_space().index_of(index_to_action(k)), k);
}

TEST(ActionSpace, MatchesGoldenFile) {
  std::ifstream in(std::string(UWB_TEST_DATA_DIR) + "/actions_golden.csv");
  ASSERT_TRUE(in) << "golden file missing";
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "channel,psr,prf,rate,gain");
  std::size_t k = 0;
  while (std::getline(in, line)) {
    ASSERT_LT(k, 72u);
    EXPECT_EQ(parse_setting(line), index_to_action(k)) << "row " << k;
    ++k;
  }
  EXPECT_EQ(k, 72u);
}

TEST(ActionSpace, UnknownTupleRejected) {
  PhySetting bad{4, 128, 16, 110, 0.0};
  EXPECT_FALSE(is_valid(bad));
  EXPECT_THROW(action_space().index_of(bad), ConfigError);
  EXPECT_THROW(make_setting(3, 256, 16, 110, 0), ConfigError);
  EXPECT_THROW(make_setting(3, 128, 16, 110, 3.0), ConfigError);
}

TEST(EncodeSetting, Minima) {
  const auto e = encode_setting(make_setting(3, 128, 16, 110, 0));
  for (double v : e) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(EncodeSetting, Maxima) {
  const auto e = encode_setting(make_setting(7, 4096, 64, 6800, 10.5));
  for (double v : e) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(EncodeSetting, MixedSetting) {
  const auto e = encode_setting(make_setting(5, 1024, 16, 6800, 0));
  EXPECT_DOUBLE_EQ(e[0], 0.5);
  EXPECT_NEAR(e[1], 896.0 / 3968.0, 1e-12);
  EXPECT_NEAR(e[1], 0.2258, 1e-4);
  EXPECT_DOUBLE_EQ(e[2], 0.0);
  EXPECT_DOUBLE_EQ(e[3], 1.0);
  EXPECT_DOUBLE_EQ(e[4], 0.0);
}

TEST(EncodeSetting, InjectiveAndInUnitRange) {
  std::set<std::array<double, 5>> codes;
  for (const auto& s : action_space()) {
    const auto e = encode_setting(s);
    for (double v : e) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    codes.insert(e);
  }
  EXPECT_EQ(codes.size(), 72u);
}

TEST(ParseSetting, KeyedAndPositionalForms) {
  const auto a = parse_setting("channel=7,psr=4096,prf=64,rate=6800,gain=10.5");
  const auto b = parse_setting("{7,4096,64,6800,10.5}");
  EXPECT_EQ(a, b);
  EXPECT_EQ(parse_setting(to_string(a)), a);
  EXPECT_THROW(parse_setting("7,4096,64"), ConfigError);
  EXPECT_THROW(parse_setting("psr=7,channel=4096,prf=64,rate=6800,gain=10.5"), ConfigError);
  EXPECT_THROW(parse_setting("7,4096,64,6800,x"), ConfigError);
}
