#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "error.hpp"
#include "phy_actions.hpp"

namespace uwbadapt {

/// Scalar receiver diagnostics reported for one received frame.
struct RawDiagnostics {
  double f1 = 0;             // first-path amplitude, harmonic 1
  double f2 = 0;             // harmonic 2
  double f3 = 0;             // harmonic 3
  double cir_power = 0;      // accumulator units
  double noise_std = 1;      // N_c
  double rx_pacc = 1;        // preamble accumulation count
  double fp_index = 0;
  double lde_threshold = 1;
  double pp_amp = 0;
  double pp_index = 0;

  bool valid() const {
    return rx_pacc >= 1 && noise_std > 0 && lde_threshold > 0 && f1 >= 0 && f2 >= 0 && f3 >= 0 &&
           cir_power >= 0 && pp_amp >= 0;
  }
};

/// Receiver-chain constant (dB) subtracted from the accumulator power.
inline double prf_offset_db(int prf_mhz) {
  switch (prf_mhz) {
    case 16: return 113.77;
    case 64: return 121.74;
    default: throw ConfigError("unsupported PRF " + std::to_string(prf_mhz));
  }
}

/// First-path power level in dBm from the three harmonic amplitudes.
inline double fp_power(double f1, double f2, double f3, double rx_pacc, int prf_mhz) {
  if (rx_pacc < 1) throw NumericError("preamble accumulation count must be >= 1");
  const double sum = f1 * f1 + f2 * f2 + f3 * f3;
  if (!(sum > 0)) throw NumericError("first-path power undefined: all harmonics are zero");
  return 10.0 * std::log10(sum / (rx_pacc * rx_pacc)) - prf_offset_db(prf_mhz);
}

/// Total received power level in dBm from the CIR power register.
inline double rx_power(double cir_power, double rx_pacc, int prf_mhz) {
  if (rx_pacc < 1) throw NumericError("preamble accumulation count must be >= 1");
  if (!(cir_power > 0)) throw NumericError("CIR power must be positive");
  return 10.0 * std::log10(cir_power * 131072.0 / (rx_pacc * rx_pacc)) - prf_offset_db(prf_mhz);
}

inline constexpr double kNlosIndicatorDb = 10.0;

struct DerivedFeatures {
  double fp_power_dbm = 0;
  double rx_power_dbm = 0;
  double nlos_db = 0;   // rx - fp
  double pr = 0;        // rx / fp
  double q1 = 0;        // F2 / N_c
  double q2 = 0;        // F2 / LDE
  /// First path reported stronger than the total received power.
  bool power_inconsistent = false;

  bool likely_nlos() const { return nlos_db > kNlosIndicatorDb; }
};

inline DerivedFeatures derive_features(const RawDiagnostics& d, int prf_mhz) {
  if (!d.valid()) throw NumericError("diagnostics violate their invariants");
  DerivedFeatures f;
  f.fp_power_dbm = fp_power(d.f1, d.f2, d.f3, d.rx_pacc, prf_mhz);
  f.rx_power_dbm = rx_power(d.cir_power, d.rx_pacc, prf_mhz);
  f.nlos_db = f.rx_power_dbm - f.fp_power_dbm;
  f.pr = f.rx_power_dbm / f.fp_power_dbm;
  f.q1 = d.f2 / d.noise_std;
  f.q2 = d.f2 / d.lde_threshold;
  f.power_inconsistent = f.nlos_db < 0;
  return f;
}

/// The eight diagnostic state dimensions, in state order.
inline constexpr std::size_t kNumLinkFeatures = 8;
inline constexpr std::array<const char*, kNumLinkFeatures> kLinkFeatureNames{
    "rx_power", "fp_power", "nlos", "noise_std", "q1", "rx_pacc", "lde", "q2"};

using LinkFeatures = std::array<double, kNumLinkFeatures>;

inline LinkFeatures select_link_features(const DerivedFeatures& f, const RawDiagnostics& d) {
  return {f.rx_power_dbm, f.fp_power_dbm, f.nlos_db, d.noise_std,
          f.q1,           d.rx_pacc,      d.lde_threshold, f.q2};
}

/// Agent observation: 8 scaled diagnostics, PRR, 5 encoded setting fields.
inline constexpr std::size_t kStateSize = 14;
inline constexpr std::size_t kPrrSlot = 8;
using StateVector = std::array<double, kStateSize>;

/// Per-feature min-max scaler with clamping.
class FeatureScaler {
 public:
  FeatureScaler() {
    lo_.fill(0.0);
    hi_.fill(1.0);
  }
  FeatureScaler(const LinkFeatures& lo, const LinkFeatures& hi) : lo_(lo), hi_(hi) {
    for (std::size_t i = 0; i < kNumLinkFeatures; ++i)
      if (!(lo_[i] < hi_[i]))
        throw ConfigError(std::string("scaler range empty for ") + kLinkFeatureNames[i]);
  }

  /// Fits min/max per feature. A feature that is constant on the sample gets
  /// a unit-width range so that the invariant min < max holds.
  static FeatureScaler fit(std::span<const LinkFeatures> samples) {
    if (samples.empty()) throw ConfigError("cannot fit scaler on an empty sample");
    LinkFeatures lo = samples.front(), hi = samples.front();
    for (const auto& s : samples)
      for (std::size_t i = 0; i < kNumLinkFeatures; ++i) {
        lo[i] = std::min(lo[i], s[i]);
        hi[i] = std::max(hi[i], s[i]);
      }
    for (std::size_t i = 0; i < kNumLinkFeatures; ++i)
      if (!(hi[i] > lo[i])) hi[i] = lo[i] + 1.0;
    return FeatureScaler(lo, hi);
  }

  double scale(std::size_t i, double v) const {
    return std::clamp((v - lo_[i]) / (hi_[i] - lo_[i]), 0.0, 1.0);
  }
  LinkFeatures scale(const LinkFeatures& f) const {
    LinkFeatures out{};
    for (std::size_t i = 0; i < kNumLinkFeatures; ++i) out[i] = scale(i, f[i]);
    return out;
  }
  const LinkFeatures& min() const noexcept { return lo_; }
  const LinkFeatures& max() const noexcept { return hi_; }

 private:
  LinkFeatures lo_{}, hi_{};
};

inline StateVector build_state(const LinkFeatures& features, double prr, const PhySetting& s,
                               const FeatureScaler& scaler) {
  StateVector v{};
  const auto scaled = scaler.scale(features);
  std::copy(scaled.begin(), scaled.end(), v.begin());
  v[kPrrSlot] = std::clamp(prr, 0.0, 1.0);
  const auto enc = encode_setting(s);
  std::copy(enc.begin(), enc.end(), v.begin() + kPrrSlot + 1);
  return v;
}

/// Observation for a block without receptions: zero diagnostics and PRR,
/// setting slots encoded as usual.
inline StateVector sentinel_state(const PhySetting& s) {
  StateVector v{};
  const auto enc = encode_setting(s);
  std::copy(enc.begin(), enc.end(), v.begin() + kPrrSlot + 1);
  return v;
}

/// Ternary split of the 9 discretized dimensions (8 features + PRR).
inline constexpr std::size_t kDiscreteDims = 9;
inline constexpr std::size_t kNumDiscreteStates = 19683;  // 3^9

class TernaryDiscretizer {
 public:
  using Thresholds = std::array<double, kDiscreteDims>;

  TernaryDiscretizer() {
    low_.fill(1.0 / 3.0);
    high_.fill(2.0 / 3.0);
  }
  TernaryDiscretizer(const Thresholds& low, const Thresholds& high) : low_(low), high_(high) {
    for (std::size_t i = 0; i < kDiscreteDims; ++i)
      if (!(low_[i] < high_[i])) throw ConfigError("discretizer thresholds must increase");
  }

  /// Thresholds at the 33rd and 66th percentile of each dimension. Ties that
  /// collapse both percentiles pull the low threshold just below the high one.
  static TernaryDiscretizer fit(std::span<const std::array<double, kDiscreteDims>> samples) {
    if (samples.empty()) throw ConfigError("cannot fit discretizer on an empty sample");
    Thresholds low{}, high{};
    std::vector<double> col(samples.size());
    for (std::size_t i = 0; i < kDiscreteDims; ++i) {
      for (std::size_t k = 0; k < samples.size(); ++k) col[k] = samples[k][i];
      std::sort(col.begin(), col.end());
      auto pct = [&](double q) {
        const double pos = q * static_cast<double>(col.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, col.size() - 1);
        return col[lo] + (pos - static_cast<double>(lo)) * (col[hi] - col[lo]);
      };
      low[i] = pct(1.0 / 3.0);
      high[i] = pct(2.0 / 3.0);
      if (!(low[i] < high[i])) low[i] = high[i] - 1e-9 * std::max(1.0, std::abs(high[i]));
    }
    return TernaryDiscretizer(low, high);
  }

  int digit(std::size_t dim, double v) const {
    if (v < low_[dim]) return 0;
    if (v < high_[dim]) return 1;
    return 2;
  }

  /// Index = sum_i digit_i * 3^i over state[0..8].
  std::size_t discretize(std::span<const double> state) const {
    if (state.size() < kDiscreteDims) throw ConfigError("state too short to discretize");
    std::size_t index = 0, radix = 1;
    for (std::size_t i = 0; i < kDiscreteDims; ++i, radix *= 3)
      index += static_cast<std::size_t>(digit(i, state[i])) * radix;
    return index;
  }

  const Thresholds& low() const noexcept { return low_; }
  const Thresholds& high() const noexcept { return high_; }

 private:
  Thresholds low_{}, high_{};
};

inline std::size_t digits_to_index(const std::array<int, kDiscreteDims>& digits) {
  std::size_t index = 0, radix = 1;
  for (std::size_t i = 0; i < kDiscreteDims; ++i, radix *= 3)
    index += static_cast<std::size_t>(digits[i]) * radix;
  return index;
}

inline std::array<int, kDiscreteDims> index_to_digits(std::size_t index) {
  std::array<int, kDiscreteDims> d{};
  for (std::size_t i = 0; i < kDiscreteDims; ++i, index /= 3) d[i] = static_cast<int>(index % 3);
  return d;
}

/// Fitted scaler plus discretizer, persisted together as
/// {feature name -> {min, max, t_low, t_high}}. Thresholds are in scaled units.
struct StateEncoder {
  FeatureScaler scaler;
  TernaryDiscretizer discretizer;

  StateVector encode(const LinkFeatures& f, double prr, const PhySetting& s) const {
    return build_state(f, prr, s, scaler);
  }
  std::size_t state_index(const StateVector& v) const { return discretizer.discretize(v); }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < kDiscreteDims; ++i) {
      const bool is_prr = i == kPrrSlot;
      const char* name = is_prr ? "prr" : kLinkFeatureNames[i];
      j[name] = {{"min", is_prr ? 0.0 : scaler.min()[i]},
                 {"max", is_prr ? 1.0 : scaler.max()[i]},
                 {"t_low", discretizer.low()[i]},
                 {"t_high", discretizer.high()[i]}};
    }
    return j;
  }

  static StateEncoder from_json(const nlohmann::json& j) {
    LinkFeatures lo{}, hi{};
    TernaryDiscretizer::Thresholds tl{}, th{};
    try {
      for (std::size_t i = 0; i < kDiscreteDims; ++i) {
        const bool is_prr = i == kPrrSlot;
        const auto& e = j.at(is_prr ? "prr" : kLinkFeatureNames[i]);
        if (!is_prr) {
          lo[i] = e.at("min").get<double>();
          hi[i] = e.at("max").get<double>();
        }
        tl[i] = e.at("t_low").get<double>();
        th[i] = e.at("t_high").get<double>();
      }
    } catch (const nlohmann::json::exception& ex) {
      throw SchemaError(std::string("state encoder JSON: ") + ex.what());
    }
    return {FeatureScaler(lo, hi), TernaryDiscretizer(tl, th)};
  }
};

}  // namespace uwbadapt
