#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "link_state.hpp"
#include "phy_actions.hpp"
#include "rng.hpp"

namespace uwbadapt {

/// Closed-form link budget of one synthetic link. margin_db holds the
/// receiver margin per channel (3, 5, 7) at the reference setting
/// {PSR 128, 16 MHz, 6.8 Mbps, 0 dB}; every other setting adds its
/// processing, rate, PRF and TX gains.
struct LinkProfile {
  std::string tag;
  std::string anchor;
  double distance_m = 1.0;
  int obstructions = 0;
  std::array<double, 3> margin_db{};
};

struct SynthConfig {
  int nodes = 8;
  std::size_t attempts_per_combination = 100;
  double area_w_m = 41.0;
  double area_h_m = 26.0;
  double tx_power_dbm = -14.0;
  double sensitivity_dbm = -93.0;
  double pl0_db = 40.0;
  double path_loss_exponent = 2.2;
  double obstruction_loss_db = 7.0;
  double obstruction_spacing_m = 6.0;
  std::array<double, 3> channel_offset_db{0.0, 2.0, 4.0};
  double fading_sigma_db = 1.0;
  double direction_sigma_db = 0.5;
  /// Logistic width of PRR against margin.
  double prr_slope_db = 1.5;
  std::uint64_t seed = 1;
  /// Appended verbatim after the geometric links.
  std::vector<LinkProfile> extra_links;

  void validate() const {
    if (nodes < 0) throw ConfigError("nodes must be >= 0");
    if (attempts_per_combination == 0) throw ConfigError("attempts_per_combination must be >= 1");
    if (!(prr_slope_db > 0)) throw ConfigError("prr_slope_db must be positive");
    if (!(area_w_m > 0 && area_h_m > 0)) throw ConfigError("area must be positive");
  }
};

namespace synth {

inline std::size_t channel_slot(int channel) {
  return channel == 3 ? 0 : channel == 5 ? 1 : 2;
}

/// Gain of a setting relative to the reference setting, in dB.
inline double setting_gain_db(const PhySetting& s) {
  return s.tx_gain_db + 10.0 * std::log10(s.psr / 128.0) + (s.data_rate_kbps == 110 ? 4.0 : 0.0) +
         (s.prf_mhz == 64 ? 1.0 : 0.0);
}

}  // namespace synth

inline double synthetic_margin(const LinkProfile& l, const PhySetting& s) {
  return l.margin_db[synth::channel_slot(s.channel)] + synth::setting_gain_db(s);
}

inline double synthetic_prr(const LinkProfile& l, const PhySetting& s, double slope_db = 1.5) {
  return 1.0 / (1.0 + std::exp(-synthetic_margin(l, s) / slope_db));
}

/// Node placement and per-link budgets for a config. Deterministic in seed.
inline std::vector<LinkProfile> synthetic_links(const SynthConfig& cfg) {
  cfg.validate();
  auto rng = derive_rng(cfg.seed, {0x6e6f646573ULL});
  std::vector<std::array<double, 2>> pos(static_cast<std::size_t>(cfg.nodes));
  for (auto& p : pos) p = {uniform01(rng) * cfg.area_w_m, uniform01(rng) * cfg.area_h_m};

  std::vector<LinkProfile> links;
  for (int t = 0; t < cfg.nodes; ++t)
    for (int a = 0; a < cfg.nodes; ++a) {
      if (t == a) continue;
      const auto lo = static_cast<std::uint64_t>(std::min(t, a));
      const auto hi = static_cast<std::uint64_t>(std::max(t, a));
      auto pair_rng = derive_rng(cfg.seed, {1, lo, hi});
      auto dir_rng = derive_rng(cfg.seed, {2, static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(a)});
      std::normal_distribution<double> fade(0.0, cfg.fading_sigma_db);
      std::normal_distribution<double> dir(0.0, cfg.direction_sigma_db);

      const auto& pt = pos[static_cast<std::size_t>(t)];
      const auto& pa = pos[static_cast<std::size_t>(a)];
      LinkProfile l;
      l.tag = "A" + std::to_string(t);
      l.anchor = "A" + std::to_string(a);
      l.distance_m = std::max(1.0, std::hypot(pt[0] - pa[0], pt[1] - pa[1]));
      l.obstructions = static_cast<int>(l.distance_m / cfg.obstruction_spacing_m) +
                       static_cast<int>(uniform_index(pair_rng, 2));
      const double common = cfg.pl0_db + 10.0 * cfg.path_loss_exponent * std::log10(l.distance_m) +
                            cfg.obstruction_loss_db * l.obstructions;
      for (std::size_t c = 0; c < 3; ++c) {
        const double pl = common + cfg.channel_offset_db[c] + fade(pair_rng);
        l.margin_db[c] = cfg.tx_power_dbm - pl - cfg.sensitivity_dbm + dir(dir_rng);
      }
      links.push_back(std::move(l));
    }
  for (const auto& l : cfg.extra_links) links.push_back(l);
  return links;
}

/// Emits every synthetic attempt (links x 72 settings x attempts) in a fixed
/// order. Each (link, setting) block draws from its own RNG stream.
template <class Fn>
void for_each_synthetic_record(const SynthConfig& cfg, Fn&& fn) {
  const auto links = synthetic_links(cfg);
  const auto& space = action_space();
  std::uint64_t seq = 0;
  for (std::size_t li = 0; li < links.size(); ++li) {
    const auto& l = links[li];
    for (std::size_t ai = 0; ai < space.size(); ++ai) {
      const auto& s = space[ai];
      auto rng = derive_rng(cfg.seed, {3, li, ai});
      std::normal_distribution<double> unit(0.0, 1.0);
      const double margin = synthetic_margin(l, s);
      const double prr = synthetic_prr(l, s, cfg.prr_slope_db);
      const double a_db = prf_offset_db(s.prf_mhz);
      for (std::size_t k = 0; k < cfg.attempts_per_combination; ++k) {
        RangeRecord r;
        r.seq = seq++;
        r.tag_id = l.tag;
        r.anchor_id = l.anchor;
        r.setting = s;
        r.true_dist_m = l.distance_m;
        r.received = bernoulli(rng, prr);
        if (r.received) {
          const double rx_dbm = cfg.sensitivity_dbm + l.margin_db[synth::channel_slot(s.channel)] +
                                s.tx_gain_db + unit(rng);
          const double nlos_db = l.obstructions > 0
                                     ? 5.0 + 2.5 * l.obstructions + std::abs(2.0 * unit(rng))
                                     : std::abs(1.5 * unit(rng));
          const double fp_dbm = rx_dbm - nlos_db;
          const double acc_frac = std::clamp(0.55 + 0.04 * margin + 0.03 * unit(rng), 0.2, 0.97);
          RawDiagnostics d;
          d.rx_pacc = std::max(1.0, std::round(s.psr * acc_frac));
          const double n2 = d.rx_pacc * d.rx_pacc;
          d.cir_power = std::pow(10.0, (rx_dbm + a_db) / 10.0) * n2 / 131072.0;
          const double fp_sum = std::pow(10.0, (fp_dbm + a_db) / 10.0) * n2;
          std::array<double, 3> w{0.3 + 0.1 * uniform01(rng), 0.4 + 0.1 * uniform01(rng),
                                  0.3 + 0.1 * uniform01(rng)};
          const double wsum = w[0] + w[1] + w[2];
          d.f1 = std::sqrt(fp_sum * w[0] / wsum);
          d.f2 = std::sqrt(fp_sum * w[1] / wsum);
          d.f3 = std::sqrt(fp_sum * w[2] / wsum);
          d.noise_std = std::sqrt(d.rx_pacc) * (2.0 + 0.5 * uniform01(rng)) *
                        (1.0 + 0.1 * static_cast<double>(synth::channel_slot(s.channel)));
          d.lde_threshold = d.noise_std * (11.0 + uniform01(rng));
          d.pp_amp = d.f2 * std::pow(10.0, nlos_db / 20.0) * (0.8 + 0.2 * uniform01(rng));
          d.fp_index = std::round(740.0 + 3.0 * unit(rng));
          d.pp_index = d.fp_index + std::round(l.obstructions > 0 ? 3.0 * l.obstructions + 10.0 * uniform01(rng)
                                                                  : 2.0 * uniform01(rng));
          r.diagnostics = d;
          const double bias = l.obstructions > 0 ? 0.05 * l.obstructions + 0.1 * uniform01(rng) : 0.02;
          const double sigma = 0.08 + 0.25 / (1.0 + std::exp(margin / 4.0));
          r.est_range_m = l.distance_m + bias + sigma * unit(rng);
        }
        fn(r);
      }
    }
  }
}

inline DatasetStore generate_synthetic(const SynthConfig& cfg) {
  StoreBuilder b;
  for_each_synthetic_record(cfg, [&](const RangeRecord& r) { b.add(r); });
  return b.finish(cfg.attempts_per_combination);
}

}  // namespace uwbadapt
