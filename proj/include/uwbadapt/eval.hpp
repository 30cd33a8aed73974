#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "dqn_agent.hpp"
#include "environment.hpp"
#include "q_agent.hpp"

namespace uwbadapt {

/// A setting-selection strategy driven one block at a time.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;
  /// Called when a run starts on `env`'s current link. Returns the setting
  /// for iteration 0; by default the caller's random start.
  virtual std::size_t start(const ReplayEnvironment& env, std::size_t random_action, Rng& rng) {
    (void)env;
    (void)rng;
    return random_action;
  }
  /// Next setting given the outcome of the previous block.
  virtual std::size_t act(const StepOutcome& last, Rng& rng) = 0;
  /// Feedback on the block that followed `last`; next.action was applied.
  virtual void learn(const StepOutcome& last, const StepOutcome& next, Rng& rng) {
    (void)last;
    (void)next;
    (void)rng;
  }
};

class FixedPolicy : public Policy {
 public:
  FixedPolicy(std::size_t action, std::string name) : action_(action), name_(std::move(name)) {
    if (action >= action_space().size()) throw ConfigError("fixed policy action out of range");
  }
  explicit FixedPolicy(const PhySetting& s) : FixedPolicy(action_space().index_of(s), default_name(s)) {}

  std::string name() const override { return name_; }
  std::unique_ptr<Policy> clone() const override { return std::make_unique<FixedPolicy>(*this); }
  /// Comma-free so it can sit in a CSV field, e.g. fixed:7/128/64/6800/0.
  static std::string default_name(const PhySetting& s) {
    return "fixed:" + std::to_string(s.channel) + '/' + std::to_string(s.psr) + '/' + std::to_string(s.prf_mhz) +
           '/' + std::to_string(s.data_rate_kbps) + '/' + detail::format_double(s.tx_gain_db);
  }
  std::size_t start(const ReplayEnvironment&, std::size_t, Rng&) override { return action_; }
  std::size_t act(const StepOutcome&, Rng&) override { return action_; }

 private:
  std::size_t action_;
  std::string name_;
};

/// Argmax of expected reward on the link it was started on.
class OraclePolicy : public Policy {
 public:
  std::string name() const override { return "oracle"; }
  std::unique_ptr<Policy> clone() const override { return std::make_unique<OraclePolicy>(*this); }
  std::size_t start(const ReplayEnvironment& env, std::size_t, Rng&) override {
    best_ = 0;
    for (std::size_t a = 1; a < action_space().size(); ++a)
      if (env.expected_reward(a) > env.expected_reward(best_)) best_ = a;
    return best_;
  }
  std::size_t act(const StepOutcome&, Rng&) override { return best_; }

 private:
  std::size_t best_ = 0;
};

struct LinearSearchResult {
  std::size_t best_action = 0;
  std::vector<double> rewards;  // measured reward in visiting order
  std::vector<std::size_t> order;
};

/// Index of the highest measured reward, ties to the lower-energy setting.
inline std::size_t best_measured(std::span<const double> measured, const EnergyTable& energy) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < measured.size(); ++a)
    if (measured[a] > measured[best] || (measured[a] == measured[best] && energy.energy(a) < energy.energy(best)))
      best = a;
  return best;
}

/// One block on every setting of `link` in index order, then the argmax.
inline LinearSearchResult linear_search(ReplayEnvironment env, std::size_t link, Rng& rng) {
  env.switch_link(link);
  LinearSearchResult out;
  std::vector<double> measured(action_space().size());
  for (std::size_t a = 0; a < action_space().size(); ++a) {
    measured[a] = env.step(a, rng).reward;
    out.rewards.push_back(measured[a]);
    out.order.push_back(a);
  }
  out.best_action = best_measured(measured, env.energy());
  return out;
}

/// Sweeps all settings, random start first and the rest in random order,
/// reporting the one being tried; afterwards it keeps the best measured.
class LinearSearchPolicy : public Policy {
 public:
  std::string name() const override { return "linear"; }
  std::unique_ptr<Policy> clone() const override { return std::make_unique<LinearSearchPolicy>(*this); }
  std::size_t start(const ReplayEnvironment& env, std::size_t random_action, Rng& rng) override {
    energy_ = &env.energy();
    order_.resize(action_space().size());
    std::iota(order_.begin(), order_.end(), 0);
    std::swap(order_[0], order_[random_action]);
    std::shuffle(order_.begin() + 1, order_.end(), rng);
    measured_.assign(order_.size(), -1.0);
    pos_ = 0;
    return random_action;
  }
  std::size_t act(const StepOutcome& last, Rng&) override {
    if (measured_[last.action] < 0) measured_[last.action] = last.reward;
    if (++pos_ < order_.size()) return order_[pos_];
    return best_measured(measured_, *energy_);
  }

 private:
  const EnergyTable* energy_ = nullptr;
  std::vector<std::size_t> order_;
  std::vector<double> measured_;
  std::size_t pos_ = 0;
};

inline constexpr double kEvalEpsilon = 0.1;

class QPolicy : public Policy {
 public:
  struct Options {
    bool online = true;
    double alpha = 0.8;
    double gamma = 0.5;
    double epsilon = kEvalEpsilon;
  };

  QPolicy(std::shared_ptr<const QTable> table, Options opt, std::string name = "q-learning")
      : proto_(std::move(table)), opt_(opt), name_(std::move(name)) {
    if (!proto_ || proto_->cols() != action_space().size()) throw ConfigError("Q policy needs a 72-column table");
  }

  std::string name() const override { return name_; }
  std::unique_ptr<Policy> clone() const override {
    auto p = std::make_unique<QPolicy>(proto_, opt_, name_);
    if (table_) p->table_ = std::make_shared<QTable>(*table_);
    return p;
  }
  std::size_t start(const ReplayEnvironment& env, std::size_t random_action, Rng&) override {
    encoder_ = &env.encoder();
    return random_action;
  }
  std::size_t act(const StepOutcome& last, Rng& rng) override {
    return select_eval(table().row(encoder_->state_index(last.state)), opt_.epsilon, rng);
  }
  void learn(const StepOutcome& last, const StepOutcome& next, Rng&) override {
    if (!opt_.online) return;
    if (!table_) table_ = std::make_shared<QTable>(*proto_);
    bellman_update(*table_, encoder_->state_index(last.state), next.action, next.reward,
                   encoder_->state_index(next.state), opt_.alpha, opt_.gamma);
  }

 private:
  const QTable& table() const { return table_ ? *table_ : *proto_; }

  std::shared_ptr<const QTable> proto_;
  std::shared_ptr<QTable> table_;  // private copy once online updates start
  Options opt_;
  std::string name_;
  const StateEncoder* encoder_ = nullptr;
};

class DqnPolicy : public Policy {
 public:
  struct Options {
    bool online = true;
    double epsilon = kEvalEpsilon;
  };

  DqnPolicy(DqnAgent agent, Options opt, std::string name = "dqn")
      : agent_(std::move(agent)), opt_(opt), name_(std::move(name)) {}

  std::string name() const override { return name_; }
  std::unique_ptr<Policy> clone() const override { return std::make_unique<DqnPolicy>(*this); }
  std::size_t act(const StepOutcome& last, Rng& rng) override { return agent_.act_eval(last.state, opt_.epsilon, rng); }
  void learn(const StepOutcome& last, const StepOutcome& next, Rng& rng) override {
    if (!opt_.online) return;
    agent_.observe({last.state.begin(), last.state.end()}, next.action, next.reward,
                   {next.state.begin(), next.state.end()}, rng);
  }
  const DqnAgent& agent() const noexcept { return agent_; }

 private:
  DqnAgent agent_;
  Options opt_;
  std::string name_;
};

/// Within 5% of the best achievable reward.
inline bool is_optimal(double r_selected, double r_best) {
  if (!(r_best > 0)) throw ConfigError("is_optimal needs r_best > 0");
  return r_selected >= 0.95 * r_best;
}

/// Worker count for evaluation: UWB_ADAPT_THREADS if set, else the
/// hardware concurrency.
inline std::size_t eval_threads() {
  if (const char* v = std::getenv("UWB_ADAPT_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end == v || *end != '\0' || n < 1) throw ConfigError("UWB_ADAPT_THREADS must be a positive integer");
    return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

struct ConfidenceBand {
  double mean = 0, lo = 0, hi = 0;
};

/// mean +- 1.96 * sd / sqrt(n) with the sample standard deviation.
inline ConfidenceBand confidence_band(std::span<const double> v) {
  if (v.empty()) throw ConfigError("confidence band of an empty sample");
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  const double half = v.size() > 1 ? 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  return {m, std::max(0.0, m - half), std::min(1.0, m + half)};
}

enum class LearningScope {
  /// Every link starts from a fresh copy of the policy.
  PerLink,
  /// One copy per repetition visits all links in turn and keeps learning.
  SharedAcrossLinks,
};

struct StaticEvalConfig {
  std::size_t max_iterations = 72;
  std::size_t repetitions = 5;
  std::uint64_t seed = 1;
  LearningScope scope = LearningScope::PerLink;
  std::size_t threads = 0;  // 0: eval_threads()
};

struct PolicyCurve {
  std::string policy;
  std::vector<ConfidenceBand> fraction;  // per iteration
  /// [rep][link][iteration] expected reward of the configured setting.
  std::vector<std::vector<std::vector<double>>> selected_reward;
};

struct StaticEvalResult {
  std::vector<std::size_t> links;  // evaluated links (best reward > 0)
  std::vector<double> r_best;      // parallel to links
  std::vector<PolicyCurve> curves;

  const PolicyCurve& curve(const std::string& name) const {
    for (const auto& c : curves)
      if (c.policy == name) return c;
    throw ConfigError("no curve for policy '" + name + "'");
  }
};

namespace detail {
/// Iterations 0..max of one policy on one link; returns the expected reward
/// of each configured setting.
inline std::vector<double> run_static_link(Policy& p, ReplayEnvironment& env, std::size_t start_action,
                                           std::size_t max_iterations, Rng& rng) {
  std::vector<double> trace;
  trace.reserve(max_iterations + 1);
  std::size_t a = p.start(env, start_action, rng);
  StepOutcome last = env.step(a, rng);
  trace.push_back(env.expected_reward(a));
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    a = p.act(last, rng);
    StepOutcome next = env.step(a, rng);
    p.learn(last, next, rng);
    trace.push_back(env.expected_reward(a));
    last = std::move(next);
  }
  return trace;
}
}  // namespace detail

/// Fraction of links whose configured setting is within 5% of the best
/// expected reward, per iteration, averaged over repetitions.
inline StaticEvalResult static_eval(const std::vector<const Policy*>& policies, const ReplayEnvironment& env,
                                    const StaticEvalConfig& cfg) {
  if (policies.empty()) throw ConfigError("static_eval needs at least one policy");
  if (cfg.repetitions == 0) throw ConfigError("static_eval needs repetitions >= 1");
  StaticEvalResult res;
  for (std::size_t l = 0; l < env.store().num_links(); ++l) {
    double best = 0;
    for (std::size_t a = 0; a < action_space().size(); ++a) best = std::max(best, env.expected_reward(l, a));
    if (best > 0) {
      res.links.push_back(l);
      res.r_best.push_back(best);
    }
  }
  if (res.links.empty()) throw ConfigError("no link with a positive best reward");
  const std::size_t nl = res.links.size(), nr = cfg.repetitions, ni = cfg.max_iterations + 1;
  const std::size_t threads = cfg.threads ? cfg.threads : eval_threads();

  auto start_action = [&](std::size_t rep, std::size_t link) {
    auto r = derive_rng(cfg.seed, {0x5374ULL, rep, link});
    return uniform_index(r, action_space().size());
  };

  for (std::size_t pi = 0; pi < policies.size(); ++pi) {
    PolicyCurve curve;
    curve.policy = policies[pi]->name();
    curve.selected_reward.assign(nr, std::vector<std::vector<double>>(nl));
    if (cfg.scope == LearningScope::PerLink) {
      parallel_for(nr * nl, threads, [&](std::size_t job) {
        const std::size_t rep = job / nl, li = job % nl;
        auto p = policies[pi]->clone();
        ReplayEnvironment e = env;
        e.switch_link(res.links[li]);
        auto rng = derive_rng(cfg.seed, {0x70ULL, pi, rep, li});
        curve.selected_reward[rep][li] =
            detail::run_static_link(*p, e, start_action(rep, res.links[li]), cfg.max_iterations, rng);
      });
    } else {
      parallel_for(nr, threads, [&](std::size_t rep) {
        auto p = policies[pi]->clone();
        ReplayEnvironment e = env;
        auto rng = derive_rng(cfg.seed, {0x73ULL, pi, rep});
        std::vector<std::size_t> order(nl);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t li : order) {
          e.switch_link(res.links[li]);
          curve.selected_reward[rep][li] =
              detail::run_static_link(*p, e, start_action(rep, res.links[li]), cfg.max_iterations, rng);
        }
      });
    }
    for (std::size_t it = 0; it < ni; ++it) {
      std::vector<double> per_rep(nr);
      for (std::size_t rep = 0; rep < nr; ++rep) {
        std::size_t hits = 0;
        for (std::size_t li = 0; li < nl; ++li) hits += is_optimal(curve.selected_reward[rep][li][it], res.r_best[li]);
        per_rep[rep] = static_cast<double>(hits) / static_cast<double>(nl);
      }
      curve.fraction.push_back(confidence_band(per_rep));
    }
    res.curves.push_back(std::move(curve));
  }
  return res;
}

inline void write_static_curve_csv(std::ostream& os, const StaticEvalResult& r) {
  os << "iteration,policy,fraction_optimal,ci_lo,ci_hi\n";
  os.precision(10);
  for (const auto& c : r.curves)
    for (std::size_t it = 0; it < c.fraction.size(); ++it)
      os << it << ',' << c.policy << ',' << c.fraction[it].mean << ',' << c.fraction[it].lo << ','
         << c.fraction[it].hi << '\n';
}

// ---------------------------------------------------------------------------
// Dynamic protocol

struct ScheduleSegment {
  LinkId link;
  double duration_s = 5.0;
};

struct ScenarioSchedule {
  std::vector<ScheduleSegment> segments;
  double ranging_rate_hz = 50.0;

  void validate(const DatasetStore& store) const {
    if (segments.empty()) throw ConfigError("schedule has no segments");
    if (!(ranging_rate_hz > 0)) throw ConfigError("ranging rate must be positive");
    for (const auto& s : segments) {
      if (!(s.duration_s > 0)) throw ConfigError("segment durations must be positive");
      if (!store.find_link(s.link)) throw ConfigError("schedule link " + to_string(s.link) + " not in dataset");
    }
  }

  /// Agent steps in segment i for blocks of `block` ranges.
  std::size_t steps_in(std::size_t i, std::size_t block) const {
    const double n = segments.at(i).duration_s * ranging_rate_hz / static_cast<double>(block);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n)));
  }
  std::size_t total_steps(std::size_t block) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < segments.size(); ++i) n += steps_in(i, block);
    return n;
  }

  nlohmann::json to_json() const {
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : segments) segs.push_back({{"link", to_string(s.link)}, {"duration_s", s.duration_s}});
    return {{"ranging_rate_hz", ranging_rate_hz}, {"segments", segs}};
  }
  static ScenarioSchedule from_json(const nlohmann::json& j) {
    ScenarioSchedule s;
    try {
      s.ranging_rate_hz = j.value("ranging_rate_hz", 50.0);
      for (const auto& seg : j.at("segments"))
        s.segments.push_back({parse_link(seg.at("link").get<std::string>()), seg.value("duration_s", 5.0)});
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("schedule: ") + e.what());
    }
    return s;
  }
  static ScenarioSchedule load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open schedule " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("schedule " + path + ": " + e.what());
    }
    return from_json(j);
  }
};

/// Mean PRR over all settings; lower means a harder link.
inline double link_mean_prr(const DatasetStore& store, std::size_t link) {
  double s = 0;
  for (std::size_t a = 0; a < action_space().size(); ++a) s += store.prr(link, a);
  return s / static_cast<double>(action_space().size());
}

/// Eight links spread over the difficulty range, walked 1..8 then back to 3
/// in 13 five-second segments. Links 2 and 8 are the two hardest.
inline ScenarioSchedule default_schedule(const DatasetStore& store) {
  std::vector<std::size_t> act = store.active_links();
  if (act.size() < 8) throw ConfigError("default schedule needs at least 8 active links");
  std::stable_sort(act.begin(), act.end(),
                   [&](std::size_t a, std::size_t b) { return link_mean_prr(store, a) > link_mean_prr(store, b); });
  std::vector<std::size_t> pick;  // easiest first
  for (std::size_t k = 0; k < 8; ++k) pick.push_back(act[k * (act.size() - 1) / 7]);
  // Slot order for links 1..8: pick indices, hardest two in slots 2 and 8.
  const std::size_t slot[8] = {0, 6, 1, 2, 3, 4, 5, 7};
  const std::size_t walk[13] = {1, 2, 3, 4, 5, 6, 7, 8, 7, 6, 5, 4, 3};
  ScenarioSchedule s;
  for (std::size_t w : walk) s.segments.push_back({store.link(pick[slot[w - 1]]), 5.0});
  return s;
}

struct DynamicSample {
  double t_s = 0;
  std::size_t segment = 0;
  std::string link;
  double prr = 0;
  double energy_wus = 0;
  std::optional<double> error_mm;
  std::size_t action = 0;
};

struct DynamicEvalResult {
  std::string policy;
  std::vector<DynamicSample> series;
  double avg_prr = 0;  // fraction
  double avg_energy_wus = 0;
  std::optional<double> avg_error_mm;

  nlohmann::json summary() const {
    nlohmann::json j = {{"policy", policy},
                        {"avg_prr_percent", 100.0 * avg_prr},
                        {"avg_energy_wus", avg_energy_wus},
                        {"steps", series.size()}};
    j["avg_error_mm"] = avg_error_mm ? nlohmann::json(*avg_error_mm) : nlohmann::json(nullptr);
    return j;
  }
};

/// Follows the schedule, re-selecting the setting each block. Uses a copy of
/// the policy so the caller's instance is not modified.
inline DynamicEvalResult dynamic_eval(const Policy& proto, const ScenarioSchedule& schedule,
                                      const ReplayEnvironment& base, std::uint64_t seed) {
  schedule.validate(base.store());
  auto policy = proto.clone();
  ReplayEnvironment env = base;
  auto rng = derive_rng(seed, {0x6479ULL});
  const std::size_t block = env.config().block_size;
  const double dt = static_cast<double>(block) / schedule.ranging_rate_hz;

  DynamicEvalResult res;
  res.policy = policy->name();
  env.switch_link(schedule.segments.front().link);
  const std::size_t start = uniform_index(rng, action_space().size());
  std::optional<StepOutcome> last;
  std::size_t k = 0;
  for (std::size_t seg = 0; seg < schedule.segments.size(); ++seg) {
    env.switch_link(schedule.segments[seg].link);
    for (std::size_t i = 0; i < schedule.steps_in(seg, block); ++i, ++k) {
      const std::size_t a = last ? policy->act(*last, rng) : policy->start(env, start, rng);
      StepOutcome next = env.step(a, rng);
      if (last) policy->learn(*last, next, rng);
      res.series.push_back({static_cast<double>(k) * dt, seg, to_string(schedule.segments[seg].link),
                            next.prr_block, next.energy_wus, next.mean_range_error_mm, a});
      last = std::move(next);
    }
  }
  double prr = 0, energy = 0, err = 0, recomputed = 0;
  std::size_t n_err = 0;
  for (const auto& s : res.series) {
    prr += s.prr;
    energy += s.energy_wus;
    recomputed += range_energy(action_space().at(s.action), env.energy().params());
    if (s.error_mm) {
      err += *s.error_mm;
      ++n_err;
    }
  }
  const double n = static_cast<double>(res.series.size());
  res.avg_prr = prr / n;
  res.avg_energy_wus = energy / n;
  if (std::abs(recomputed / n - res.avg_energy_wus) > 1e-9 * std::max(1.0, res.avg_energy_wus))
    throw NumericError("dynamic energy average disagrees with the energy model");
  if (n_err) res.avg_error_mm = err / static_cast<double>(n_err);
  return res;
}

inline void write_dynamic_series_csv(std::ostream& os, const std::vector<DynamicEvalResult>& runs) {
  os << "t_s,policy,prr,energy_wus,error_mm,channel,psr,prf,rate,gain\n";
  os.precision(10);
  for (const auto& r : runs)
    for (const auto& s : r.series) {
      const auto& st = action_space().at(s.action);
      os << s.t_s << ',' << r.policy << ',' << s.prr << ',' << s.energy_wus << ',';
      if (s.error_mm) os << *s.error_mm;
      os << ',' << st.channel << ',' << st.psr << ',' << st.prf_mhz << ',' << st.data_rate_kbps << ','
         << st.tx_gain_db << '\n';
    }
}

// ---------------------------------------------------------------------------
// Latency

struct TimingReport {
  std::string policy;
  std::size_t decisions = 0;
  double mean_decision_ms = 0;
  double mean_train_step_ms = 0;
  std::string hardware;

  nlohmann::json to_json() const {
    return {{"policy", policy},
            {"decisions", decisions},
            {"mean_decision_ms", mean_decision_ms},
            {"mean_train_step_ms", mean_train_step_ms},
            {"hardware", hardware}};
  }
};

inline std::string hardware_descriptor() {
  std::string model = "unknown cpu";
  std::ifstream in("/proc/cpuinfo");
  for (std::string line; std::getline(in, line);)
    if (line.rfind("model name", 0) == 0) {
      model = line.substr(line.find(':') + 2);
      break;
    }
  return model + ", " + std::to_string(std::thread::hardware_concurrency()) + " hw threads";
}

/// Wall-clock means of act() and learn() over n decisions on the current link.
inline TimingReport timing_report(const Policy& proto, const ReplayEnvironment& base, std::size_t n,
                                  std::uint64_t seed = 1) {
  if (n == 0) throw ConfigError("timing_report needs at least one decision");
  using clock = std::chrono::steady_clock;
  auto policy = proto.clone();
  ReplayEnvironment env = base;
  auto rng = derive_rng(seed, {0x746dULL});
  StepOutcome last = env.step(policy->start(env, uniform_index(rng, action_space().size()), rng), rng);
  clock::duration decide{}, train{};
  for (std::size_t i = 0; i < n; ++i) {
    auto t0 = clock::now();
    const std::size_t a = policy->act(last, rng);
    decide += clock::now() - t0;
    StepOutcome next = env.step(a, rng);
    t0 = clock::now();
    policy->learn(last, next, rng);
    train += clock::now() - t0;
    last = std::move(next);
  }
  const auto ms = [&](clock::duration d) {
    return std::chrono::duration<double, std::milli>(d).count() / static_cast<double>(n);
  };
  return {policy->name(), n, ms(decide), ms(train), hardware_descriptor()};
}

}  // namespace uwbadapt
