#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "uwbadapt/link_state.hpp"

using namespace uwbadapt;

TEST(LinkState, FirstPathPower) {
  EXPECT_THROW(fp_power(0, 0, 0, 128, 16), NumericError);
  // sum of squares equal to N^2 leaves only the receiver constant
  EXPECT_NEAR(fp_power(3, 4, 0, 5, 16), -113.77, 1e-9);
  EXPECT_NEAR(fp_power(1000, 2000, 1500, 128, 64), -95.28, 5e-3);
  EXPECT_THROW(fp_power(1, 1, 1, 0.5, 16), NumericError);
}

TEST(LinkState, ReceivedPower) {
  EXPECT_NEAR(rx_power(1.0 / 131072.0, 1, 16), -113.77, 1e-9);
  EXPECT_NEAR(rx_power(5000, 1024, 64), -93.78, 5e-3);
  EXPECT_NEAR(rx_power(5000, 1024, 16) - rx_power(5000, 1024, 64), 7.97, 1e-9);
  EXPECT_THROW(rx_power(0, 128, 16), NumericError);
  EXPECT_THROW(rx_power(-1, 128, 16), NumericError);
}

TEST(LinkState, PowersMonotone) {
  double prev_fp = -1e9, prev_rx = -1e9;
  for (double x = 10; x < 1e6; x *= 1.7) {
    const double fp = fp_power(x, 2 * x, x, 256, 64);
    const double rx = rx_power(x, 256, 64);
    EXPECT_GT(fp, prev_fp);
    EXPECT_GT(rx, prev_rx);
    prev_fp = fp;
    prev_rx = rx;
  }
  double last_fp = 1e9, last_rx = 1e9;
  for (double n = 1; n < 5000; n *= 2) {
    const double fp = fp_power(500, 800, 300, n, 16);
    const double rx = rx_power(2000, n, 16);
    EXPECT_LT(fp, last_fp);
    EXPECT_LT(rx, last_rx);
    last_fp = fp;
    last_rx = rx;
  }
}

namespace {
RawDiagnostics diag() {
  RawDiagnostics d;
  d.f1 = 300;
  d.f2 = 400;
  d.f3 = 200;
  d.cir_power = 9000;
  d.noise_std = 50;
  d.rx_pacc = 900;
  d.lde_threshold = 100;
  d.pp_amp = 500;
  d.fp_index = 740;
  d.pp_index = 745;
  return d;
}
}  // namespace

TEST(LinkState, DerivedRatios) {
  const auto f = derive_features(diag(), 64);
  EXPECT_DOUBLE_EQ(f.q1, 8.0);
  EXPECT_DOUBLE_EQ(f.q2, 4.0);
  EXPECT_NEAR(f.nlos_db, f.rx_power_dbm - f.fp_power_dbm, 1e-12);
  EXPECT_NEAR(f.pr, f.rx_power_dbm / f.fp_power_dbm, 1e-12);
}

TEST(LinkState, EqualPowersGiveNoNlos) {
  // pick cir_power so that rx equals fp: cir * 2^17 = f1^2 + f2^2 + f3^2
  auto d = diag();
  d.cir_power = (d.f1 * d.f1 + d.f2 * d.f2 + d.f3 * d.f3) / 131072.0;
  const auto f = derive_features(d, 16);
  EXPECT_NEAR(f.nlos_db, 0.0, 1e-9);
  EXPECT_NEAR(f.pr, 1.0, 1e-12);
  EXPECT_FALSE(f.likely_nlos());
  EXPECT_FALSE(f.power_inconsistent);
}

TEST(LinkState, NlosIndicatorAboveTenDb) {
  DerivedFeatures f;
  f.nlos_db = 12;
  EXPECT_TRUE(f.likely_nlos());
  f.nlos_db = 10;
  EXPECT_FALSE(f.likely_nlos());
}

TEST(LinkState, InconsistentPowerIsFlagged) {
  auto d = diag();
  d.cir_power = 1e-3;
  EXPECT_TRUE(derive_features(d, 16).power_inconsistent);
}

TEST(LinkState, InvalidDiagnosticsRejected) {
  auto d = diag();
  d.noise_std = 0;
  EXPECT_THROW(derive_features(d, 16), NumericError);
  d = diag();
  d.lde_threshold = 0;
  EXPECT_THROW(derive_features(d, 16), NumericError);
  d = diag();
  d.rx_pacc = 0;
  EXPECT_THROW(derive_features(d, 16), NumericError);
}

TEST(LinkState, StateAtMinimaIsZero) {
  LinkFeatures lo{}, hi{};
  for (std::size_t i = 0; i < kNumLinkFeatures; ++i) {
    lo[i] = -10.0 * static_cast<double>(i + 1);
    hi[i] = static_cast<double>(i + 1);
  }
  const FeatureScaler scaler(lo, hi);
  const auto v = build_state(lo, 0.0, make_setting(3, 128, 16, 110, 0), scaler);
  for (double x : v) EXPECT_DOUBLE_EQ(x, 0.0);
}

TEST(LinkState, StateLayoutAndPrrSlot) {
  const FeatureScaler scaler;
  LinkFeatures f{};
  f.fill(0.5);
  const auto s = make_setting(7, 4096, 64, 6800, 10.5);
  const auto v = build_state(f, 0.37, s, scaler);
  ASSERT_EQ(v.size(), 14u);
  EXPECT_DOUBLE_EQ(v[kPrrSlot], 0.37);
  for (std::size_t i = 0; i < kNumLinkFeatures; ++i) EXPECT_DOUBLE_EQ(v[i], 0.5);
  for (std::size_t i = kPrrSlot + 1; i < kStateSize; ++i) EXPECT_DOUBLE_EQ(v[i], 1.0);
  EXPECT_EQ(build_state(f, 0.37, s, scaler), v);
}

TEST(LinkState, ScalerClampsOutOfRange) {
  LinkFeatures lo{}, hi{};
  hi.fill(1.0);
  const FeatureScaler scaler(lo, hi);
  LinkFeatures f{};
  f.fill(7.0);
  f[0] = -3.0;
  const auto v = build_state(f, 1.5, make_setting(3, 128, 16, 110, 0), scaler);
  EXPECT_DOUBLE_EQ(v[0], 0.0);
  EXPECT_DOUBLE_EQ(v[1], 1.0);
  EXPECT_DOUBLE_EQ(v[kPrrSlot], 1.0);
  for (double x : v) {
    EXPECT_TRUE(std::isfinite(x));
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, 1.0);
  }
}

TEST(LinkState, ScalerRequiresIncreasingRange) {
  LinkFeatures lo{}, hi{};
  EXPECT_THROW(FeatureScaler(lo, hi), ConfigError);
  std::vector<LinkFeatures> constant(5, LinkFeatures{});
  const auto fitted = FeatureScaler::fit(constant);
  for (std::size_t i = 0; i < kNumLinkFeatures; ++i) EXPECT_LT(fitted.min()[i], fitted.max()[i]);
}

TEST(LinkState, SentinelState) {
  const auto s = make_setting(5, 1024, 64, 110, 10.5);
  const auto v = sentinel_state(s);
  for (std::size_t i = 0; i <= kPrrSlot; ++i) EXPECT_DOUBLE_EQ(v[i], 0.0);
  const auto enc = encode_setting(s);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(v[kPrrSlot + 1 + i], enc[i]);
}

TEST(Discretizer, Extremes) {
  const TernaryDiscretizer d;
  std::array<double, kStateSize> lo{}, hi{};
  hi.fill(1.0);
  EXPECT_EQ(d.discretize(lo), 0u);
  EXPECT_EQ(d.discretize(hi), 19682u);
}

TEST(Discretizer, DigitVectorsAreABijection) {
  // build a state that lands on each digit vector via the default thresholds
  const TernaryDiscretizer d;
  const std::array<double, 3> level{0.1, 0.5, 0.9};
  std::vector<bool> hit(kNumDiscreteStates, false);
  for (std::size_t idx = 0; idx < kNumDiscreteStates; ++idx) {
    const auto digits = index_to_digits(idx);
    EXPECT_EQ(digits_to_index(digits), idx);
    std::array<double, kStateSize> v{};
    for (std::size_t i = 0; i < kDiscreteDims; ++i) v[i] = level[static_cast<std::size_t>(digits[i])];
    const auto got = d.discretize(v);
    ASSERT_LT(got, kNumDiscreteStates);
    EXPECT_FALSE(hit[got]);
    hit[got] = true;
  }
  for (bool h : hit) EXPECT_TRUE(h);
}

TEST(Discretizer, CellCount) { EXPECT_EQ(kNumDiscreteStates * 72, 1417176u); }

TEST(Discretizer, PercentileFit) {
  std::vector<std::array<double, kDiscreteDims>> rows;
  for (int k = 0; k <= 300; ++k) {
    std::array<double, kDiscreteDims> r{};
    r.fill(static_cast<double>(k));
    rows.push_back(r);
  }
  const auto d = TernaryDiscretizer::fit(rows);
  for (std::size_t i = 0; i < kDiscreteDims; ++i) {
    EXPECT_NEAR(d.low()[i], 100.0, 1e-9);
    EXPECT_NEAR(d.high()[i], 200.0, 1e-9);
  }
  EXPECT_THROW(TernaryDiscretizer({}, {}), ConfigError);
}

TEST(Discretizer, DegenerateColumnStillIncreasing) {
  std::vector<std::array<double, kDiscreteDims>> rows(10);
  for (auto& r : rows) r.fill(0.0);
  const auto d = TernaryDiscretizer::fit(rows);
  for (std::size_t i = 0; i < kDiscreteDims; ++i) EXPECT_LT(d.low()[i], d.high()[i]);
}

TEST(StateEncoder, JsonRoundTrip) {
  LinkFeatures lo{}, hi{};
  for (std::size_t i = 0; i < kNumLinkFeatures; ++i) {
    lo[i] = -static_cast<double>(i);
    hi[i] = 3.0 + static_cast<double>(i);
  }
  TernaryDiscretizer::Thresholds tl{}, th{};
  for (std::size_t i = 0; i < kDiscreteDims; ++i) {
    tl[i] = 0.2 + 0.01 * static_cast<double>(i);
    th[i] = 0.7;
  }
  StateEncoder enc{FeatureScaler(lo, hi), TernaryDiscretizer(tl, th)};
  const auto back = StateEncoder::from_json(nlohmann::json::parse(enc.to_json().dump()));
  EXPECT_EQ(back.scaler.min(), enc.scaler.min());
  EXPECT_EQ(back.scaler.max(), enc.scaler.max());
  EXPECT_EQ(back.discretizer.low(), enc.discretizer.low());
  EXPECT_EQ(back.discretizer.high(), enc.discretizer.high());
  EXPECT_THROW(StateEncoder::from_json(nlohmann::json::object()), SchemaError);
}
