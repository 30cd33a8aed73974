#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "energy_model.hpp"
#include "environment.hpp"
#include "error.hpp"

namespace uwbadapt {

/// Stand-in for an infinite F-value (perfect correlation or separation).
inline constexpr double kFValueCap = 1e12;

/// Pearson correlation with population moments.
inline double cross_correlation(std::span<const double> f, std::span<const double> g) {
  if (f.size() != g.size() || f.size() < 2)
    throw ConfigError("cross_correlation needs two vectors of equal length >= 2");
  const double n = static_cast<double>(f.size());
  const double mf = std::accumulate(f.begin(), f.end(), 0.0) / n;
  const double mg = std::accumulate(g.begin(), g.end(), 0.0) / n;
  double cov = 0, vf = 0, vg = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    cov += (f[i] - mf) * (g[i] - mg);
    vf += (f[i] - mf) * (f[i] - mf);
    vg += (g[i] - mg) * (g[i] - mg);
  }
  if (!(vf > 0) || !(vg > 0)) throw NumericError("correlation undefined: zero variance");
  return std::clamp(cov / std::sqrt(vf * vg), -1.0, 1.0);
}

/// F = xcor^2 / (1 - xcor^2) * dof. |xcor| = 1 yields kFValueCap.
inline double f_value(double xcor, double dof, std::vector<std::string>* warnings = nullptr) {
  const double r2 = xcor * xcor;
  if (r2 >= 1.0) {
    if (warnings) warnings->push_back("perfect correlation: F-value capped");
    return kFValueCap;
  }
  return r2 / (1.0 - r2) * dof;
}

/// One-way ANOVA F statistic of `feature` grouped by `labels`.
inline double anova_f(std::span<const double> feature, std::span<const int> labels,
                      std::vector<std::string>* warnings = nullptr) {
  if (feature.size() != labels.size()) throw ConfigError("anova_f: length mismatch");
  std::map<int, std::vector<double>> groups;
  for (std::size_t i = 0; i < feature.size(); ++i) groups[labels[i]].push_back(feature[i]);
  if (groups.size() < 2) throw ConfigError("anova_f needs at least 2 classes");
  for (const auto& [k, g] : groups)
    if (g.size() < 2) throw ConfigError("anova_f needs at least 2 samples per class");

  const double n = static_cast<double>(feature.size());
  const double grand = std::accumulate(feature.begin(), feature.end(), 0.0) / n;
  double ssb = 0, ssw = 0;
  for (const auto& [k, g] : groups) {
    const double m = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double v : g) ssw += (v - m) * (v - m);
  }
  const double k = static_cast<double>(groups.size());
  const double msb = ssb / (k - 1.0);
  const double msw = ssw / (n - k);
  const double scale = std::max(1.0, grand * grand);
  if (msb <= 1e-24 * scale) return 0.0;
  if (msw <= 1e-24 * scale) {
    if (warnings) warnings->push_back("perfect class separation: ANOVA F capped");
    return kFValueCap;
  }
  return msb / msw;
}

enum class DofConvention {
  /// dof = number of features - 1.
  FeatureCountMinusOne,
  /// dof = number of samples - 2.
  SamplesMinusTwo,
};

struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::vector<double> target_g;
  std::vector<int> target_class;

  std::size_t rows() const { return target_g.size(); }

  void validate() const {
    if (names.size() != columns.size()) throw ConfigError("feature matrix: names/columns mismatch");
    if (target_g.size() < 2) throw ConfigError("feature matrix needs >= 2 rows");
    if (!target_class.empty() && target_class.size() != target_g.size())
      throw ConfigError("feature matrix: class target length mismatch");
    for (const auto& c : columns) {
      if (c.size() != target_g.size()) throw ConfigError("feature matrix: column length mismatch");
      for (double v : c)
        if (!std::isfinite(v)) throw NumericError("feature matrix contains non-finite values");
    }
  }
};

struct FeatureScore {
  std::string name;
  double f_regression = 0;
  double f_classification = 0;
  std::size_t rank_regression = 0;      // 1-based
  std::size_t rank_classification = 0;  // 1-based
};

struct FeatureRanking {
  std::vector<FeatureScore> scores;  // sorted by name
  std::vector<std::string> warnings;

  std::vector<std::string> by_regression() const { return order(&FeatureScore::rank_regression); }
  std::vector<std::string> by_classification() const { return order(&FeatureScore::rank_classification); }

 private:
  std::vector<std::string> order(std::size_t FeatureScore::*rank) const {
    std::vector<const FeatureScore*> p;
    for (const auto& s : scores) p.push_back(&s);
    std::sort(p.begin(), p.end(), [&](auto* a, auto* b) { return a->*rank < b->*rank; });
    std::vector<std::string> out;
    for (auto* s : p) out.push_back(s->name);
    return out;
  }
};

/// Ranks each feature by its regression F-value against G and by its
/// ANOVA F-value against the best-setting class. Constant columns are
/// excluded; ties are broken by name so column order does not matter.
inline FeatureRanking rank_features(const FeatureMatrix& m,
                                    DofConvention dof_mode = DofConvention::FeatureCountMinusOne) {
  m.validate();
  FeatureRanking out;
  std::vector<std::size_t> usable;
  for (std::size_t c = 0; c < m.columns.size(); ++c) {
    const auto& col = m.columns[c];
    const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
    if (*mn == *mx) out.warnings.push_back("constant feature '" + m.names[c] + "' excluded");
    else usable.push_back(c);
  }
  const double dof = dof_mode == DofConvention::FeatureCountMinusOne
                         ? static_cast<double>(m.columns.size()) - 1.0
                         : static_cast<double>(m.rows()) - 2.0;

  // Classes with fewer than two samples cannot enter the ANOVA.
  std::vector<std::size_t> cls_rows;
  if (!m.target_class.empty()) {
    std::map<int, std::size_t> count;
    for (int c : m.target_class) ++count[c];
    for (std::size_t i = 0; i < m.rows(); ++i)
      if (count[m.target_class[i]] >= 2) cls_rows.push_back(i);
    std::size_t kept_classes = 0;
    for (auto& [c, n] : count) kept_classes += n >= 2;
    if (kept_classes < 2) {
      out.warnings.push_back("fewer than 2 usable classes: classification F-values set to 0");
      cls_rows.clear();
    }
  }
  const bool g_constant =
      std::all_of(m.target_g.begin(), m.target_g.end(), [&](double v) { return v == m.target_g.front(); });
  if (g_constant) out.warnings.push_back("constant G target: regression F-values set to 0");

  for (std::size_t c : usable) {
    FeatureScore s;
    s.name = m.names[c];
    if (!g_constant) s.f_regression = f_value(cross_correlation(m.columns[c], m.target_g), dof, &out.warnings);
    if (!cls_rows.empty()) {
      std::vector<double> f;
      std::vector<int> l;
      for (std::size_t i : cls_rows) {
        f.push_back(m.columns[c][i]);
        l.push_back(m.target_class[i]);
      }
      s.f_classification = anova_f(f, l, &out.warnings);
    }
    out.scores.push_back(s);
  }
  std::sort(out.scores.begin(), out.scores.end(), [](auto& a, auto& b) { return a.name < b.name; });

  auto assign = [&](double FeatureScore::*value, std::size_t FeatureScore::*rank) {
    std::vector<FeatureScore*> p;
    for (auto& s : out.scores) p.push_back(&s);
    std::stable_sort(p.begin(), p.end(), [&](auto* a, auto* b) { return a->*value > b->*value; });
    for (std::size_t i = 0; i < p.size(); ++i) p[i]->*rank = i + 1;
  };
  assign(&FeatureScore::f_regression, &FeatureScore::rank_regression);
  assign(&FeatureScore::f_classification, &FeatureScore::rank_classification);
  return out;
}

/// Best setting of a link: argmax expected reward, ties to the lower energy.
inline std::size_t best_setting(const DatasetStore& store, const EnergyTable& energy, std::size_t link) {
  std::size_t best = 0;
  double best_r = -1;
  for (std::size_t a = 0; a < action_space().size(); ++a) {
    const double r = reward(store.prr(link, a), energy.normalized(a));
    if (r > best_r || (r == best_r && energy.energy(a) < energy.energy(best))) {
      best = a;
      best_r = r;
    }
  }
  return best;
}

/// One row per received range with every candidate diagnostic, its
/// combination PRR, G of that combination, and the link's best setting.
inline FeatureMatrix build_feature_matrix(const DatasetStore& store, const EnergyTable& energy) {
  FeatureMatrix m;
  m.names = {"f1",       "f2",       "f3",  "cir_power", "noise_std", "rx_pacc", "fp_index",
             "lde",      "pp_amp",   "pp_index", "fp_power", "rx_power", "nlos", "pr",
             "q1",       "q2",       "prr"};
  m.columns.assign(m.names.size(), {});
  for (std::size_t l = 0; l < store.num_links(); ++l) {
    const int cls = static_cast<int>(best_setting(store, energy, l));
    for (std::size_t a = 0; a < action_space().size(); ++a) {
      const auto& st = store.stats(l, a);
      const double g = objective_g(st.prr, energy.normalized(a));
      for (const auto& fs : st.feature_pool) {
        const auto& r = fs.raw;
        const auto& d = fs.derived;
        const double row[] = {r.f1,        r.f2,        r.f3,         r.cir_power, r.noise_std, r.rx_pacc,
                              r.fp_index,  r.lde_threshold, r.pp_amp, r.pp_index,  d.fp_power_dbm,
                              d.rx_power_dbm, d.nlos_db, d.pr,        d.q1,        d.q2,        st.prr};
        for (std::size_t c = 0; c < m.names.size(); ++c) m.columns[c].push_back(row[c]);
        m.target_g.push_back(g);
        m.target_class.push_back(cls);
      }
    }
  }
  return m;
}

inline void write_ranking_csv(std::ostream& os, const FeatureRanking& r) {
  os << "feature,f_value_regression,f_value_classification,rank_r,rank_c\n";
  std::vector<const FeatureScore*> p;
  for (const auto& s : r.scores) p.push_back(&s);
  std::sort(p.begin(), p.end(), [](auto* a, auto* b) { return a->rank_regression < b->rank_regression; });
  os.precision(10);
  for (auto* s : p)
    os << s->name << ',' << s->f_regression << ',' << s->f_classification << ',' << s->rank_regression
       << ',' << s->rank_classification << '\n';
}

}  // namespace uwbadapt
