// uwb_adapt: command-line front end.
//
// Precedence: built-in defaults < --config JSON file < command-line flags.
// Exit codes: 0 ok, 1 internal, 2 usage / missing dataset, 3 I/O, 4 schema,
// 5 configuration, 6 numeric.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "uwbadapt.hpp"

#ifndef UWB_ADAPT_VERSION
#define UWB_ADAPT_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace uwbadapt;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitSchema = 4;
constexpr int kExitConfig = 5;
constexpr int kExitNumeric = 6;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  // global
  std::string dataset;
  std::uint64_t seed = 1;
  std::string profile;  // empty: static, except eval-dynamic
  std::size_t steps = 0;  // 0: trainer default
  std::string out = "out";
  // dataset loading
  std::size_t attempts = 500;
  std::string mapping;
  // gen-synth
  int nodes = 8;
  std::size_t synth_attempts = 100;
  // energy
  double phr_bits = 19;
  bool phr_base_rate = false;
  // features
  std::string dof = "feature-count";
  // train-q
  double q_alpha = 0.8;
  double q_gamma = 0.5;
  double lambda = 0;  // 0: default, rescaled to the step count
  std::size_t switch_period = 100;
  // eval
  std::size_t repetitions = 5;
  std::size_t iterations = 72;
  std::string scope = "per-link";
  std::string static_mode = "expected";
  bool frozen = false;
  double eval_epsilon = kEvalEpsilon;
  std::size_t runs = 5;
  std::string schedule;
  // timing
  std::size_t decisions = 1000;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(Options, dataset, seed, profile, steps, out, attempts, mapping, nodes,
                                                synth_attempts, phr_bits, phr_base_rate, dof, q_alpha, q_gamma,
                                                lambda, switch_period, repetitions, iterations, scope, static_mode,
                                                frozen, eval_epsilon, runs, schedule, decisions)

json read_json(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw IoError(std::string("cannot open ") + what + " " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(std::string(what) + " " + path + ": " + e.what());
  }
}

/// Values from a config file, or from the "config" member of a run manifest.
void apply_config_file(const std::string& path, Options& o) {
  json j = read_json(path, "config file");
  if (j.contains("config") && j.contains("subcommand")) j = j["config"];
  if (!j.is_object()) throw SchemaError("config file " + path + " must hold a JSON object");
  const json known = Options{};
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw ConfigError("unknown key '" + k + "' in config file " + path);
  try {
    json merged = o;
    merged.update(j);
    o = merged.get<Options>();
  } catch (const json::exception& e) {
    throw SchemaError("config file " + path + ": " + e.what());
  }
}

/// --config has to be applied before the flags so they can override it.
std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

std::uint64_t file_digest(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

class Run {
 public:
  Run(std::string sub, Options o) : sub_(std::move(sub)), opt_(std::move(o)) {}

  const Options& opt() const { return opt_; }
  fs::path dir(const char* name) const {
    fs::path d = fs::path(opt_.out) / name;
    fs::create_directories(d);
    return d;
  }
  void input(const fs::path& p) { inputs_[p.string()] = hex(file_digest(p)); }
  void output(const fs::path& p) { outputs_[p.string()] = hex(file_digest(p)); }
  void note(const std::string& k, json v) { extra_[k] = std::move(v); }

  void write_manifest() const {
    const json m = {{"subcommand", sub_}, {"version", UWB_ADAPT_VERSION}, {"config", opt_},
                    {"inputs", inputs_},  {"outputs", outputs_},         {"details", extra_}};
    const auto d = dir("manifests");
    for (const auto& name : {sub_ + ".json", std::string("run_manifest.json")}) {
      std::ofstream f(d / name);
      if (!f) throw IoError("cannot write manifest in " + d.string());
      f << m.dump(2) << '\n';
    }
  }

 private:
  std::string sub_;
  Options opt_;
  std::map<std::string, std::string> inputs_, outputs_;
  json extra_ = json::object();
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw IoError("cannot write " + p.string());
  return f;
}

FrameModelParams frame_params(const Options& o) {
  FrameModelParams p;
  p.phr_bits = o.phr_bits;
  p.phr_at_base_rate = o.phr_base_rate;
  p.validate();
  return p;
}

std::shared_ptr<const DatasetStore> load_store(Run& run) {
  const auto& o = run.opt();
  if (o.dataset.empty()) throw UsageError("--dataset is required for this subcommand");
  if (!fs::is_regular_file(o.dataset)) throw UsageError("dataset not found: " + o.dataset);
  LoadOptions lo;
  lo.attempts_per_combination = o.attempts;
  if (!o.mapping.empty()) {
    lo.mapping = ColumnMapping::from_json(read_json(o.mapping, "column mapping"));
    run.input(o.mapping);
  }
  run.input(o.dataset);
  return std::make_shared<const DatasetStore>(load_dataset(o.dataset, lo));
}

fs::path encoder_path(const Run& run) { return run.dir("models") / "state_encoder.json"; }

/// Training writes the encoder; evaluation reuses it so states match the model.
StateEncoder encoder_for(Run& run, const DatasetStore& store, bool training) {
  const auto p = encoder_path(run);
  if (!training && fs::exists(p)) {
    run.input(p);
    return StateEncoder::from_json(read_json(p.string(), "state encoder"));
  }
  auto enc = fit_state_encoder(store);
  if (training) {
    auto f = open_out(p);
    f << enc.to_json().dump(2) << '\n';
    f.close();
    run.output(p);
  }
  return enc;
}

std::string resolved_profile(const Options& o) {
  DqnTrainConfig::profile(o.profile);  // validates
  return o.profile;
}

/// Keeps the end-of-training epsilon when the step budget changes.
double scaled_lambda(double base, std::size_t default_steps, std::size_t steps) {
  return base * static_cast<double>(default_steps) / static_cast<double>(steps);
}

QTrainConfig q_config(const Options& o) {
  QTrainConfig c;
  c.alpha = o.q_alpha;
  c.gamma = o.q_gamma;
  c.seed = o.seed;
  c.link_switch_period = o.switch_period;
  const std::size_t def = c.steps;
  if (o.steps) c.steps = o.steps;
  c.epsilon.lambda = o.lambda > 0 ? o.lambda : scaled_lambda(c.epsilon.lambda, def, c.steps);
  c.validate();
  return c;
}

DqnTrainConfig dqn_config(const Options& o, const std::string& profile) {
  auto c = DqnTrainConfig::profile(profile);
  c.seed = o.seed;
  c.link_switch_period = o.switch_period;
  const std::size_t def = c.steps;
  if (o.steps) c.steps = o.steps;
  c.epsilon.lambda = o.lambda > 0 ? o.lambda : scaled_lambda(c.epsilon.lambda, def, c.steps);
  c.validate();
  return c;
}

fs::path q_table_path(const Run& run) { return run.dir("models") / "q_table.bin"; }
fs::path dqn_stem(const Run& run, const std::string& profile) { return run.dir("models") / ("dqn_" + profile); }

std::shared_ptr<const QTable> load_q(Run& run) {
  const auto p = q_table_path(run);
  if (!fs::exists(p)) throw IoError("no Q-table at " + p.string() + "; run train-q first");
  run.input(p);
  return std::make_shared<const QTable>(QTable::load(p.string()));
}

DqnAgent load_dqn(Run& run, const std::string& profile) {
  const auto stem = dqn_stem(run, profile);
  if (!fs::exists(stem.string() + ".json")) throw IoError("no DQN checkpoint at " + stem.string() + "; run train-dqn first");
  run.input(stem.string() + ".json");
  run.input(stem.string() + ".bin");
  const auto net = Mlp::load(stem.string());
  auto cfg = DqnTrainConfig::profile(profile);
  cfg.shape = net.shape();
  DqnAgent agent(net.shape().front(), net.shape().back(), cfg);
  agent.load_weights(net);
  return agent;
}

void merge_summary(Run& run, const std::string& key, json value) {
  const auto p = run.dir("results") / "summary.json";
  json s = json::object();
  if (fs::exists(p)) s = read_json(p.string(), "summary");
  s[key] = std::move(value);
  auto f = open_out(p);
  f << s.dump(2) << '\n';
  f.close();
  run.output(p);
}

// ---------------------------------------------------------------------------

void cmd_gen_synth(Run& run) {
  const auto& o = run.opt();
  SynthConfig c;
  c.nodes = o.nodes;
  c.attempts_per_combination = o.synth_attempts;
  c.seed = o.seed;
  c.validate();
  const fs::path path = o.dataset.empty() ? fs::path(o.out) / "synthetic.csv" : fs::path(o.dataset);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto f = open_out(path);
  CsvRecordWriter w(f);
  std::size_t rows = 0;
  for_each_synthetic_record(c, [&](const RangeRecord& r) {
    w.write(r);
    ++rows;
  });
  f.close();
  if (!f) throw IoError("write failed for " + path.string());
  run.output(path);
  run.note("rows", rows);
  run.note("links", synthetic_links(c).size());
  std::cout << "wrote " << rows << " records to " << path.string() << '\n';
}

void cmd_ingest(Run& run) {
  const auto& o = run.opt();
  const auto store = load_store(run);
  // canonical copy, so later steps can run without the mapping
  const auto canon = run.dir("results") / "dataset.csv";
  {
    std::ifstream in(o.dataset);
    auto f = open_out(canon);
    CsvRecordWriter w(f);
    LoadOptions lo;
    if (!o.mapping.empty()) lo.mapping = ColumnMapping::from_json(read_json(o.mapping, "column mapping"));
    read_records_csv(in, [&](const RangeRecord& r, std::size_t) { w.write(r); }, lo.mapping);
  }
  run.output(canon);
  std::size_t received = 0;
  json links = json::array();
  for (std::size_t l = 0; l < store->num_links(); ++l) {
    std::size_t rx = 0;
    for (std::size_t a = 0; a < action_space().size(); ++a) rx += store->stats(l, a).received;
    received += rx;
    links.push_back({{"link", to_string(store->link(l))}, {"received", rx}, {"mean_prr", link_mean_prr(*store, l)}});
  }
  const json summary = {{"links", store->num_links()},
                        {"active_links", store->active_links().size()},
                        {"received", received},
                        {"power_inconsistent", store->inconsistent_power_records()},
                        {"per_link", links}};
  const auto p = run.dir("results") / "dataset_summary.json";
  auto f = open_out(p);
  f << summary.dump(2) << '\n';
  f.close();
  run.output(p);
  std::cout << store->num_links() << " links, " << store->active_links().size() << " active, " << received
            << " received ranges\n";
}

void cmd_features(Run& run) {
  const auto& o = run.opt();
  const auto store = load_store(run);
  DofConvention dof;
  if (o.dof == "feature-count") dof = DofConvention::FeatureCountMinusOne;
  else if (o.dof == "samples") dof = DofConvention::SamplesMinusTwo;
  else throw ConfigError("--dof must be feature-count or samples");
  const EnergyTable energy(action_space(), frame_params(o));
  const auto ranking = rank_features(build_feature_matrix(*store, energy), dof);
  const auto p = run.dir("results") / "feature_ranking.csv";
  auto f = open_out(p);
  write_ranking_csv(f, ranking);
  f.close();
  run.output(p);
  for (const auto& w : ranking.warnings) std::cerr << "warning: " << w << '\n';
  run.note("warnings", ranking.warnings);
  write_ranking_csv(std::cout, ranking);
}

void cmd_energy(Run& run) {
  const auto p = frame_params(run.opt());
  const EnergyTable table(action_space(), p);
  std::cout << "channel,psr,prf,rate,gain,e_tx_wus,e_rx_wus,e_total_wus,e_normalized\n";
  std::cout.precision(10);
  for (std::size_t a = 0; a < action_space().size(); ++a) {
    const auto& s = action_space()[a];
    std::cout << s.channel << ',' << s.psr << ',' << s.prf_mhz << ',' << s.data_rate_kbps << ',' << s.tx_gain_db
              << ',' << frame_energy(s, Direction::Tx, p) << ',' << frame_energy(s, Direction::Rx, p) << ','
              << table.energy(a) << ',' << table.normalized(a) << '\n';
  }
}

void cmd_train_q(Run& run) {
  const auto store = load_store(run);
  const auto cfg = q_config(run.opt());
  UwbTabularEnv env(ReplayEnvironment(store, encoder_for(run, *store, true), {.frame = frame_params(run.opt())}));
  const auto table = train_q(env, cfg);
  const auto p = q_table_path(run);
  table.save(p.string());
  run.output(p);
  run.note("train_config", {{"steps", cfg.steps},
                            {"alpha", cfg.alpha},
                            {"gamma", cfg.gamma},
                            {"lambda", cfg.epsilon.lambda},
                            {"link_switch_period", cfg.link_switch_period},
                            {"seed", cfg.seed}});
  std::cout << "wrote " << p.string() << " (" << cfg.steps << " steps)\n";
}

void cmd_train_dqn(Run& run) {
  const auto store = load_store(run);
  const auto profile = resolved_profile(run.opt());
  const auto cfg = dqn_config(run.opt(), profile);
  UwbVectorEnv env(ReplayEnvironment(store, encoder_for(run, *store, true), {.frame = frame_params(run.opt())}));
  const auto agent = train_dqn(env, cfg);
  const auto stem = dqn_stem(run, profile);
  agent.main().save(stem.string(), {{"profile", profile}, {"train_config", cfg.to_json()}});
  const auto side = stem.string() + "_config.json";
  {
    auto f = open_out(side);
    f << json{{"profile", profile}, {"train_config", cfg.to_json()}}.dump(2) << '\n';
  }
  for (const auto& p : {stem.string() + ".json", stem.string() + ".bin", side}) run.output(p);
  run.note("train_config", cfg.to_json());
  run.note("parameter_digest", hex(parameter_digest(agent.main())));
  std::cout << "wrote " << stem.string() << ".{json,bin} (" << cfg.steps << " steps, profile " << profile << ")\n";
}

void cmd_eval_static(Run& run) {
  const auto& o = run.opt();
  const auto store = load_store(run);
  const auto profile = resolved_profile(o);
  EnvConfig ec;
  ec.frame = frame_params(o);
  if (o.static_mode == "expected") ec.mode = MeasurementMode::Expected;
  else if (o.static_mode == "bernoulli") ec.mode = MeasurementMode::Bernoulli;
  else throw ConfigError("--static-mode must be expected or bernoulli");
  const ReplayEnvironment env(store, encoder_for(run, *store, false), ec);

  LinearSearchPolicy linear;
  QPolicy q(load_q(run), {.online = !o.frozen, .epsilon = o.eval_epsilon});
  DqnPolicy dqn(load_dqn(run, profile), {.online = !o.frozen, .epsilon = o.eval_epsilon});
  StaticEvalConfig sc;
  sc.seed = o.seed;
  sc.repetitions = o.repetitions;
  sc.max_iterations = o.iterations;
  if (o.scope == "per-link") sc.scope = LearningScope::PerLink;
  else if (o.scope == "shared") sc.scope = LearningScope::SharedAcrossLinks;
  else throw ConfigError("--scope must be per-link or shared");
  const auto res = static_eval({&linear, &q, &dqn}, env, sc);

  const auto p = run.dir("results") / "static_curve.csv";
  auto f = open_out(p);
  write_static_curve_csv(f, res);
  f.close();
  run.output(p);
  json s = {{"links_evaluated", res.links.size()}, {"profile", profile}, {"policies", json::object()}};
  for (const auto& c : res.curves) {
    json at = json::object();
    for (std::size_t it : {std::size_t{0}, std::size_t{1}, std::size_t{10}, o.iterations})
      if (it < c.fraction.size()) at[std::to_string(it)] = c.fraction[it].mean;
    s["policies"][c.policy] = at;
    std::cout << c.policy << ": fraction optimal at iteration 1 = " << c.fraction.at(std::min<std::size_t>(1, o.iterations)).mean
              << ", at " << o.iterations << " = " << c.fraction.back().mean << '\n';
  }
  merge_summary(run, "static", s);
}

void cmd_eval_dynamic(Run& run) {
  const auto& o = run.opt();
  const auto store = load_store(run);
  const auto profile = resolved_profile(o);
  if (o.runs == 0) throw ConfigError("--runs must be >= 1");
  const ReplayEnvironment env(store, encoder_for(run, *store, false), {.frame = frame_params(o)});
  ScenarioSchedule schedule;
  if (o.schedule.empty()) {
    schedule = default_schedule(*store);
  } else {
    schedule = ScenarioSchedule::load(o.schedule);
    run.input(o.schedule);
  }
  schedule.validate(*store);
  {
    const auto sp = run.dir("results") / "schedule.json";
    auto f = open_out(sp);
    f << schedule.to_json().dump(2) << '\n';
    f.close();
    run.output(sp);
  }

  QPolicy q(load_q(run), {.online = !o.frozen, .epsilon = o.eval_epsilon});
  DqnPolicy dqn(load_dqn(run, profile), {.online = !o.frozen, .epsilon = o.eval_epsilon});
  FixedPolicy low(make_setting(7, 128, 64, 6800, 0));
  FixedPolicy high(env.energy().argmax(), "fixed:max-energy");
  const std::vector<const Policy*> policies{&dqn, &q, &low, &high};

  std::vector<DynamicEvalResult> first_runs;
  json summary = {{"profile", profile}, {"runs", o.runs}, {"policies", json::array()}};
  for (const auto* p : policies) {
    double prr = 0, energy = 0, err = 0;
    std::size_t n_err = 0;
    for (std::size_t k = 0; k < o.runs; ++k) {
      auto r = dynamic_eval(*p, schedule, env, o.seed + k);
      prr += r.avg_prr;
      energy += r.avg_energy_wus;
      if (r.avg_error_mm) {
        err += *r.avg_error_mm;
        ++n_err;
      }
      if (k == 0) first_runs.push_back(std::move(r));
    }
    const double n = static_cast<double>(o.runs);
    json row = {{"policy", p->name()}, {"avg_prr_percent", 100 * prr / n}, {"avg_energy_wus", energy / n}};
    row["avg_error_mm"] = n_err ? json(err / static_cast<double>(n_err)) : json(nullptr);
    summary["policies"].push_back(row);
    std::cout << p->name() << ": PRR " << 100 * prr / n << "%, energy " << energy / n << " Wus\n";
  }
  const auto sp = run.dir("results") / "dynamic_series.csv";
  auto f = open_out(sp);
  write_dynamic_series_csv(f, first_runs);
  f.close();
  run.output(sp);
  merge_summary(run, "dynamic", summary);
}

void cmd_baseline(Run& run) {
  const auto& o = run.opt();
  const auto store = load_store(run);
  const ReplayEnvironment env(store, fit_state_encoder(*store), {.frame = frame_params(o)});
  const auto p = run.dir("results") / "baseline.csv";
  auto f = open_out(p);
  f << "link,channel,psr,prf,rate,gain,measured_reward,expected_reward,best_expected_reward,optimal\n";
  std::size_t evaluated = 0, hits = 0;
  for (std::size_t l = 0; l < store->num_links(); ++l) {
    double best = 0;
    for (std::size_t a = 0; a < action_space().size(); ++a) best = std::max(best, env.expected_reward(l, a));
    if (!(best > 0)) continue;
    auto rng = derive_rng(o.seed, {0x6273ULL, l});
    const auto r = linear_search(env, l, rng);
    const double got = env.expected_reward(l, r.best_action);
    const bool ok = is_optimal(got, best);
    ++evaluated;
    hits += ok;
    const auto& s = action_space()[r.best_action];
    f << to_string(store->link(l)) << ',' << s.channel << ',' << s.psr << ',' << s.prf_mhz << ','
      << s.data_rate_kbps << ',' << s.tx_gain_db << ',' << r.rewards[r.best_action] << ',' << got << ',' << best
      << ',' << (ok ? 1 : 0) << '\n';
  }
  f.close();
  run.output(p);
  run.note("links_evaluated", evaluated);
  std::cout << "linear search: " << hits << " of " << evaluated << " links within 5% of the best expected reward\n";
}

std::string file_safe(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return s;
}

/// Rows of a CSV grouped by the `policy` column.
std::map<std::string, std::vector<std::vector<std::string>>> csv_by_policy(const fs::path& p,
                                                                          std::vector<std::string>& header) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string() + "; run the evaluation first");
  std::string line;
  std::getline(in, line);
  header.clear();
  for (auto v : detail::split_csv(line)) header.emplace_back(v);
  const auto col = std::find(header.begin(), header.end(), "policy") - header.begin();
  if (col == static_cast<long>(header.size())) throw SchemaError(p.string() + " has no policy column");
  std::map<std::string, std::vector<std::vector<std::string>>> out;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    for (auto v : detail::split_csv(line)) row.emplace_back(v);
    if (row.size() != header.size()) throw SchemaError("ragged row in " + p.string());
    out[row[col]].push_back(std::move(row));
  }
  return out;
}

void emit_plot(Run& run, const fs::path& src, const std::string& prefix, const std::vector<std::string>& cols,
               const std::string& xlabel, const std::string& ylabel) {
  std::vector<std::string> header;
  const auto groups = csv_by_policy(src, header);
  run.input(src);
  std::vector<std::size_t> idx;
  for (const auto& c : cols) {
    const auto it = std::find(header.begin(), header.end(), c);
    if (it == header.end()) throw SchemaError(src.string() + " lacks column " + c);
    idx.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  const auto dir = run.dir("results") / "plot";
  fs::create_directories(dir);
  std::ostringstream gp;
  gp << "set datafile commentschars '#'\nset xlabel '" << xlabel << "'\nset ylabel '" << ylabel << "'\nplot ";
  bool first = true;
  for (const auto& [policy, rows] : groups) {
    const auto dat = dir / (prefix + "_" + file_safe(policy) + ".dat");
    auto f = open_out(dat);
    f << '#';
    for (const auto& c : cols) f << ' ' << c;
    f << '\n';
    for (const auto& r : rows) {
      for (std::size_t k = 0; k < idx.size(); ++k) f << (k ? " " : "") << (r[idx[k]].empty() ? "NaN" : r[idx[k]]);
      f << '\n';
    }
    f.close();
    run.output(dat);
    gp << (first ? "" : ", ") << "'" << dat.filename().string() << "' using 1:2 with lines title '" << policy << "'";
    first = false;
  }
  const auto script = dir / (prefix + ".gp");
  auto f = open_out(script);
  f << gp.str() << '\n';
  f.close();
  run.output(script);
}

void cmd_plot(Run& run) {
  const auto res = fs::path(run.opt().out) / "results";
  bool any = false;
  if (fs::exists(res / "static_curve.csv")) {
    emit_plot(run, res / "static_curve.csv", "static", {"iteration", "fraction_optimal", "ci_lo", "ci_hi"},
              "iteration", "fraction of links optimal");
    any = true;
  }
  if (fs::exists(res / "dynamic_series.csv")) {
    emit_plot(run, res / "dynamic_series.csv", "dynamic", {"t_s", "prr", "energy_wus", "error_mm"}, "time (s)",
              "PRR");
    any = true;
  }
  if (!any) throw IoError("no results under " + res.string() + "; run eval-static or eval-dynamic first");
  std::cout << "plot data written to " << (res / "plot").string() << '\n';
}

void cmd_timing(Run& run) {
  const auto& o = run.opt();
  const auto store = load_store(run);
  const auto profile = resolved_profile(o);
  const ReplayEnvironment env(store, encoder_for(run, *store, false), {.frame = frame_params(o)});
  QPolicy q(load_q(run), {});
  DqnPolicy dqn(load_dqn(run, profile), {});
  json reports = json::array();
  for (const Policy* p : std::vector<const Policy*>{&q, &dqn}) {
    const auto t = timing_report(*p, env, o.decisions, o.seed);
    reports.push_back(t.to_json());
    std::cout << t.policy << ": " << t.mean_decision_ms << " ms per decision, " << t.mean_train_step_ms
              << " ms per online update (" << t.hardware << ")\n";
  }
  const auto path = run.dir("results") / "timing.json";
  auto f = open_out(path);
  f << reports.dump(2) << '\n';
  f.close();
  run.output(path);
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"Adaptive UWB PHY configuration: data, training and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file or run manifest; flags override its values");
  app.add_option("--dataset", opt.dataset, "dataset CSV (output path for gen-synth)");
  app.add_option("--seed", opt.seed, "seed for all randomness");
  app.add_option("--profile", opt.profile, "DQN hyperparameter profile")->check(CLI::IsMember({"static", "dynamic"}));
  app.add_option("--steps", opt.steps, "training steps (0: trainer default)");
  app.add_option("--out", opt.out, "output root holding models/, results/, manifests/");
  app.add_option("--attempts", opt.attempts, "attempts per combination assumed for success-only datasets");
  app.add_option("--mapping", opt.mapping, "JSON column mapping for foreign CSV layouts");
  app.add_option("--phr-bits", opt.phr_bits, "PHR length in bits");
  app.add_flag("--phr-base-rate", opt.phr_base_rate, "send the PHR of 6.8 Mbps frames at the base symbol rate");

  struct Sub {
    const char* name;
    const char* help;
    void (*fn)(Run&);
  };
  const std::vector<Sub> subs{
      {"gen-synth", "write a seeded synthetic dataset", cmd_gen_synth},
      {"ingest", "validate a dataset and write a canonical copy and summary", cmd_ingest},
      {"features", "rank link features by F-value", cmd_features},
      {"energy", "print the per-setting energy table as CSV", cmd_energy},
      {"train-q", "train the tabular agent", cmd_train_q},
      {"train-dqn", "train the deep Q agent", cmd_train_dqn},
      {"eval-static", "fraction-optimal curves over all links", cmd_eval_static},
      {"eval-dynamic", "scheduled walk over links", cmd_eval_dynamic},
      {"baseline", "exhaustive linear search on every link", cmd_baseline},
      {"plot", "gnuplot data from evaluation results", cmd_plot},
      {"timing", "decision and update latency", cmd_timing},
  };
  std::map<CLI::App*, const Sub*> by_app;
  for (const auto& s : subs) {
    auto* sc = app.add_subcommand(s.name, s.help);
    by_app[sc] = &s;
    const std::string n = s.name;
    if (n == "gen-synth") {
      sc->add_option("--nodes", opt.nodes, "node count");
      sc->add_option("--synth-attempts", opt.synth_attempts, "attempts per link and setting");
    } else if (n == "features") {
      sc->add_option("--dof", opt.dof, "F-value degrees of freedom")->check(CLI::IsMember({"feature-count", "samples"}));
    } else if (n == "train-q" || n == "train-dqn") {
      sc->add_option("--lambda", opt.lambda, "epsilon decay rate (0: default scaled to --steps)");
      sc->add_option("--switch-period", opt.switch_period, "steps between link switches");
      if (n == "train-q") {
        sc->add_option("--alpha", opt.q_alpha, "learning rate");
        sc->add_option("--gamma", opt.q_gamma, "discount factor");
      }
    } else if (n == "eval-static" || n == "eval-dynamic") {
      sc->add_flag("--frozen", opt.frozen, "no online updates during evaluation");
      sc->add_option("--eval-epsilon", opt.eval_epsilon, "exploration rate during evaluation");
      if (n == "eval-static") {
        sc->add_option("--repetitions", opt.repetitions, "repetitions per link");
        sc->add_option("--iterations", opt.iterations, "iterations per run");
        sc->add_option("--scope", opt.scope, "learning scope")->check(CLI::IsMember({"per-link", "shared"}));
        sc->add_option("--static-mode", opt.static_mode, "block PRR model")
            ->check(CLI::IsMember({"expected", "bernoulli"}));
      } else {
        sc->add_option("--runs", opt.runs, "seeded runs averaged per policy");
        sc->add_option("--schedule", opt.schedule, "schedule JSON (default: built-in walk)");
      }
    } else if (n == "timing") {
      sc->add_option("--decisions", opt.decisions, "decisions to time");
    }
  }

  try {
    if (const auto cfg = find_config_arg(argc, argv); !cfg.empty()) apply_config_file(cfg, opt);
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  const Sub* sub = nullptr;
  for (auto* sc : app.get_subcommands()) sub = by_app.at(sc);
  if (opt.profile.empty()) opt.profile = std::string(sub->name) == "eval-dynamic" ? "dynamic" : "static";
  Run run(sub->name, opt);
  try {
    sub->fn(run);
    run.write_manifest();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
