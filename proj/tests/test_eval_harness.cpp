#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "uwbadapt/eval.hpp"
#include "uwbadapt/synthetic.hpp"

using namespace uwbadapt;

namespace {

ReplayEnvironment synth_env(MeasurementMode mode = MeasurementMode::Bernoulli) {
  static const auto store = [] {
    SynthConfig c;
    c.nodes = 4;
    c.attempts_per_combination = 25;
    c.seed = 3;
    return std::make_shared<const DatasetStore>(generate_synthetic(c));
  }();
  EnvConfig cfg;
  cfg.mode = mode;
  return ReplayEnvironment(store, fit_state_encoder(*store), cfg);
}

StaticEvalConfig small_cfg() {
  StaticEvalConfig c;
  c.repetitions = 2;
  c.threads = 1;
  c.seed = 9;
  return c;
}

}  // namespace

TEST(IsOptimal, Boundaries) {
  EXPECT_TRUE(is_optimal(1.0, 1.0));
  EXPECT_TRUE(is_optimal(0.95, 1.0));
  EXPECT_FALSE(is_optimal(0.94, 1.0));
  EXPECT_TRUE(is_optimal(1.2, 1.0));
  EXPECT_THROW(is_optimal(0.5, 0.0), ConfigError);
  EXPECT_THROW(is_optimal(0.5, -1.0), ConfigError);
}

TEST(LinearSearch, PicksMaxMeasured) {
  const auto env = synth_env();
  Rng rng = derive_rng(4);
  const auto r = linear_search(env, 0, rng);
  ASSERT_EQ(r.rewards.size(), 72u);
  ASSERT_EQ(r.order.size(), 72u);
  const double top = *std::max_element(r.rewards.begin(), r.rewards.end());
  EXPECT_EQ(r.rewards[r.best_action], top);
}

TEST(LinearSearch, ExpectedModeFindsArgmax) {
  const auto env = synth_env(MeasurementMode::Expected);
  for (std::size_t l : env.store().active_links()) {
    Rng rng = derive_rng(5, {l});
    const auto r = linear_search(env, l, rng);
    double best = 0;
    for (std::size_t a = 0; a < 72; ++a) best = std::max(best, env.expected_reward(l, a));
    EXPECT_DOUBLE_EQ(env.expected_reward(l, r.best_action), best);
  }
}

TEST(BestMeasured, TiesGoToLowerEnergy) {
  const EnergyTable energy;
  std::vector<double> m(72, 0.3);
  EXPECT_EQ(best_measured(m, energy), energy.argmin());
}

TEST(StaticEval, OracleIsOptimalFromTheStart) {
  const auto env = synth_env(MeasurementMode::Expected);
  OraclePolicy oracle;
  const auto r = static_eval({&oracle}, env, small_cfg());
  for (const auto& band : r.curve("oracle").fraction) EXPECT_DOUBLE_EQ(band.mean, 1.0);
}

TEST(StaticEval, FractionsAreBoundedAndLinearCompletes) {
  const auto env = synth_env(MeasurementMode::Expected);
  LinearSearchPolicy lin;
  FixedPolicy fixed(make_setting(7, 128, 64, 6800, 0));
  const auto r = static_eval({&lin, &fixed}, env, small_cfg());
  ASSERT_EQ(r.curves.size(), 2u);
  for (const auto& c : r.curves) {
    ASSERT_EQ(c.fraction.size(), 73u);
    for (const auto& b : c.fraction) {
      EXPECT_GE(b.mean, 0.0);
      EXPECT_LE(b.mean, 1.0);
      EXPECT_LE(b.lo, b.mean);
      EXPECT_GE(b.hi, b.mean);
    }
  }
  // all settings measured exactly: the sweep ends on the argmax
  EXPECT_DOUBLE_EQ(r.curve("linear").fraction[72].mean, 1.0);
  for (double rb : r.r_best) EXPECT_GT(rb, 0.0);
  EXPECT_THROW(r.curve("missing"), ConfigError);
}

TEST(StaticEval, FixedPolicyCurveIsFlat) {
  const auto env = synth_env();
  FixedPolicy fixed(make_setting(5, 1024, 64, 110, 10.5));
  const auto r = static_eval({&fixed}, env, small_cfg());
  const auto& f = r.curve(fixed.name()).fraction;
  for (const auto& b : f) EXPECT_DOUBLE_EQ(b.mean, f.front().mean);
}

TEST(StaticEval, SharedScopeRuns) {
  const auto env = synth_env(MeasurementMode::Expected);
  OraclePolicy oracle;
  auto cfg = small_cfg();
  cfg.scope = LearningScope::SharedAcrossLinks;
  cfg.max_iterations = 5;
  const auto r = static_eval({&oracle}, env, cfg);
  EXPECT_EQ(r.curve("oracle").fraction.size(), 6u);
  EXPECT_DOUBLE_EQ(r.curve("oracle").fraction.back().mean, 1.0);
}

TEST(StaticEval, ThreadCountDoesNotChangeResults) {
  const auto env = synth_env();
  LinearSearchPolicy lin;
  auto cfg = small_cfg();
  const auto a = static_eval({&lin}, env, cfg);
  cfg.threads = 3;
  const auto b = static_eval({&lin}, env, cfg);
  EXPECT_EQ(a.curves[0].selected_reward, b.curves[0].selected_reward);
}

TEST(StaticEval, Validation) {
  const auto env = synth_env();
  OraclePolicy oracle;
  EXPECT_THROW(static_eval({}, env, small_cfg()), ConfigError);
  auto cfg = small_cfg();
  cfg.repetitions = 0;
  EXPECT_THROW(static_eval({&oracle}, env, cfg), ConfigError);
}

TEST(StaticEval, CsvHeader) {
  const auto env = synth_env(MeasurementMode::Expected);
  OraclePolicy oracle;
  auto cfg = small_cfg();
  cfg.max_iterations = 2;
  std::ostringstream os;
  write_static_curve_csv(os, static_eval({&oracle}, env, cfg));
  const auto s = os.str();
  EXPECT_EQ(s.rfind("iteration,policy,fraction_optimal,ci_lo,ci_hi\n", 0), 0u);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 4);
}

TEST(ConfidenceBand, Formula) {
  const std::vector<double> v{0.2, 0.4, 0.6};
  const auto b = confidence_band(v);
  EXPECT_NEAR(b.mean, 0.4, 1e-12);
  EXPECT_NEAR(b.hi - b.mean, 1.96 * 0.2 / std::sqrt(3.0), 1e-12);
  const std::vector<double> one{0.7};
  EXPECT_DOUBLE_EQ(confidence_band(one).lo, 0.7);
  EXPECT_THROW(confidence_band(std::vector<double>{}), ConfigError);
  const std::vector<double> ends{0.0, 1.0};
  EXPECT_GE(confidence_band(ends).lo, 0.0);
  EXPECT_LE(confidence_band(ends).hi, 1.0);
}

TEST(ParallelFor, VisitsEveryIndexOnceAndRethrows) {
  std::vector<int> hit(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { ++hit[i]; });
  EXPECT_TRUE(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw NumericError("x"); }), NumericError);
}

TEST(Schedule, DefaultHas325Steps) {
  const auto env = synth_env();
  const auto s = default_schedule(env.store());
  ASSERT_EQ(s.segments.size(), 13u);
  EXPECT_EQ(s.total_steps(10), 325u);
  for (std::size_t i = 0; i < 13; ++i) {
    EXPECT_EQ(s.steps_in(i, 10), 25u);
    EXPECT_EQ(s.steps_in(i, 10) * 10, 250u);  // attempts per segment
  }
  // walk 1..8 then back to 3
  EXPECT_EQ(s.segments[8].link, s.segments[6].link);
  EXPECT_EQ(s.segments[12].link, s.segments[2].link);
  EXPECT_NO_THROW(s.validate(env.store()));
}

TEST(Schedule, JsonRoundTripAndErrors) {
  const auto env = synth_env();
  const auto s = default_schedule(env.store());
  const auto back = ScenarioSchedule::from_json(s.to_json());
  ASSERT_EQ(back.segments.size(), s.segments.size());
  for (std::size_t i = 0; i < s.segments.size(); ++i) EXPECT_EQ(back.segments[i].link, s.segments[i].link);
  EXPECT_DOUBLE_EQ(back.ranging_rate_hz, 50.0);

  ScenarioSchedule bad;
  bad.segments.push_back({parse_link("nobody->nowhere"), 5.0});
  EXPECT_THROW(bad.validate(env.store()), ConfigError);
  EXPECT_THROW(ScenarioSchedule{}.validate(env.store()), ConfigError);
  EXPECT_THROW(ScenarioSchedule::from_json(nlohmann::json::object()), SchemaError);
  EXPECT_THROW(ScenarioSchedule::load("/nonexistent/schedule.json"), IoError);
}

TEST(DynamicEval, FixedPolicyEnergyAndLength) {
  const auto env = synth_env();
  const auto s = default_schedule(env.store());
  const PhySetting low = make_setting(7, 128, 64, 6800, 0);
  FixedPolicy fixed(low);
  const auto r = dynamic_eval(fixed, s, env, 1);
  ASSERT_EQ(r.series.size(), 325u);
  for (const auto& x : r.series) EXPECT_DOUBLE_EQ(x.energy_wus, range_energy(low, env.energy().params()));
  EXPECT_NEAR(r.avg_energy_wus, range_energy(low, env.energy().params()), 1e-9);
  EXPECT_NEAR(r.series[1].t_s - r.series[0].t_s, 0.2, 1e-12);
  EXPECT_EQ(r.series.back().segment, 12u);
}

TEST(DynamicEval, ReproducibleAndAveragesMatchSeries) {
  const auto env = synth_env();
  const auto s = default_schedule(env.store());
  LinearSearchPolicy lin;
  const auto a = dynamic_eval(lin, s, env, 17), b = dynamic_eval(lin, s, env, 17);
  ASSERT_EQ(a.series.size(), b.series.size());
  for (std::size_t i = 0; i < a.series.size(); ++i) {
    EXPECT_EQ(a.series[i].action, b.series[i].action);
    EXPECT_EQ(a.series[i].prr, b.series[i].prr);
  }
  double prr = 0, energy = 0;
  for (const auto& x : a.series) {
    prr += x.prr;
    energy += x.energy_wus;
    EXPECT_GE(x.prr, 0.0);
    EXPECT_LE(x.prr, 1.0);
  }
  EXPECT_NEAR(a.avg_prr, prr / 325.0, 1e-12);
  EXPECT_NEAR(a.avg_energy_wus, energy / 325.0, 1e-9);
  const auto j = a.summary();
  EXPECT_NEAR(j.at("avg_prr_percent").get<double>(), 100 * a.avg_prr, 1e-9);
  EXPECT_EQ(j.at("steps").get<std::size_t>(), 325u);
}

TEST(DynamicEval, CsvHeader) {
  const auto env = synth_env();
  FixedPolicy fixed(make_setting(3, 128, 64, 6800, 0));
  const auto r = dynamic_eval(fixed, default_schedule(env.store()), env, 2);
  std::ostringstream os;
  write_dynamic_series_csv(os, {r});
  const auto s = os.str();
  EXPECT_EQ(s.rfind("t_s,policy,prr,energy_wus,error_mm,channel,psr,prf,rate,gain\n", 0), 0u);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 326);
  EXPECT_EQ(fixed.name(), "fixed:3/128/64/6800/0");
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) EXPECT_EQ(std::count(line.begin(), line.end(), ','), 9) << line;
}

TEST(Timing, ReportFields) {
  const auto env = synth_env();
  auto table = std::make_shared<const QTable>(kNumDiscreteStates, 72);
  QPolicy q(table, {});
  EXPECT_THROW(timing_report(q, env, 0), ConfigError);
  const auto tq = timing_report(q, env, 200);
  EXPECT_EQ(tq.decisions, 200u);
  EXPECT_GE(tq.mean_decision_ms, 0.0);
  EXPECT_GE(tq.mean_train_step_ms, 0.0);
  EXPECT_FALSE(tq.hardware.empty());

  DqnTrainConfig cfg = DqnTrainConfig::static_profile();
  DqnPolicy d(DqnAgent(kStateSize, 72, cfg), {});
  const auto td = timing_report(d, env, 200);
  EXPECT_LT(tq.mean_decision_ms, td.mean_decision_ms);
  EXPECT_EQ(td.to_json().at("policy").get<std::string>(), "dqn");
}

TEST(Policies, CloneIsIndependent) {
  const auto env = synth_env();
  auto table = std::make_shared<const QTable>(kNumDiscreteStates, 72);
  QPolicy q(table, {});
  Rng rng = derive_rng(6);
  auto p = q.clone();
  const auto first = env.step(p->start(env, 0, rng), rng);
  const auto a = p->act(first, rng);
  const auto second = env.step(a, rng);
  p->learn(first, second, rng);
  // prototype table untouched by the clone's online update
  for (float v : table->values()) ASSERT_EQ(v, 0.0f);
  EXPECT_THROW(FixedPolicy(72, "bad"), ConfigError);
  EXPECT_THROW(QPolicy(std::make_shared<const QTable>(4, 3), {}), ConfigError);
}
