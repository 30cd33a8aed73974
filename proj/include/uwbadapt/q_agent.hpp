#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "environment.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace uwbadapt {

/// Dense state x action table of 32-bit values, zero-initialized.
class QTable {
 public:
  QTable() = default;
  QTable(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, 0.0f), visits_(rows * cols, 0) {
    if (rows == 0 || cols == 0) throw ConfigError("Q-table dimensions must be positive");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t cells() const noexcept { return values_.size(); }

  float operator()(std::size_t s, std::size_t a) const { return values_[check(s, a)]; }
  float& operator()(std::size_t s, std::size_t a) { return values_[check(s, a)]; }
  std::span<const float> row(std::size_t s) const {
    check(s, 0);
    return {values_.data() + s * cols_, cols_};
  }
  std::uint32_t visits(std::size_t s, std::size_t a) const { return visits_[check(s, a)]; }
  void count_visit(std::size_t s, std::size_t a) { ++visits_[check(s, a)]; }

  float max_value(std::size_t s) const {
    auto r = row(s);
    return *std::max_element(r.begin(), r.end());
  }
  const std::vector<float>& values() const noexcept { return values_; }

  friend bool operator==(const QTable& a, const QTable& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.values_ == b.values_;
  }

  /// Layout: "UWBQTAB1" magic, u32 rows, u32 cols (little endian), then
  /// rows*cols float32 values row-major.
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write Q-table " + path);
    out.write(kMagic, 8);
    write_u32(out, static_cast<std::uint32_t>(rows_));
    write_u32(out, static_cast<std::uint32_t>(cols_));
    for (float v : values_) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      write_u32(out, bits);
    }
    if (!out) throw IoError("short write on " + path);
  }

  static QTable load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open Q-table " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw SchemaError("not a Q-table file: " + path);
    const auto rows = read_u32(in), cols = read_u32(in);
    QTable t(rows, cols);
    for (auto& v : t.values_) {
      const auto bits = read_u32(in);
      std::memcpy(&v, &bits, 4);
    }
    if (!in) throw SchemaError("truncated Q-table file: " + path);
    return t;
  }

 private:
  static constexpr char kMagic[8] = {'U', 'W', 'B', 'Q', 'T', 'A', 'B', '1'};

  std::size_t check(std::size_t s, std::size_t a) const {
    if (s >= rows_ || a >= cols_) throw std::out_of_range("Q-table index out of range");
    return s * cols_ + a;
  }
  static void write_u32(std::ostream& o, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    o.write(reinterpret_cast<const char*>(b), 4);
  }
  static std::uint32_t read_u32(std::istream& i) {
    unsigned char b[4] = {};
    i.read(reinterpret_cast<char*>(b), 4);
    return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  std::size_t rows_ = 0, cols_ = 0;
  std::vector<float> values_;
  std::vector<std::uint32_t> visits_;
};

struct EpsilonSchedule {
  double eps_min = 0.01;
  double eps_max = 1.0;
  double lambda = 3.91e-5;

  void validate() const {
    if (!(0 <= eps_min && eps_min <= eps_max && eps_max <= 1)) throw ConfigError("need 0 <= eps_min <= eps_max <= 1");
    if (!(lambda > 0)) throw ConfigError("lambda must be positive");
  }
};

/// Exponential decay from eps_max toward eps_min.
inline double epsilon(std::size_t step, const EpsilonSchedule& s) {
  return s.eps_min + (s.eps_max - s.eps_min) * std::exp(-s.lambda * static_cast<double>(step));
}

/// Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)).
inline void bellman_update(QTable& t, std::size_t s, std::size_t a, double r, std::size_t s_next,
                           double alpha, double gamma) {
  const double q = t(s, a);
  const double target = r + gamma * static_cast<double>(t.max_value(s_next));
  t(s, a) = static_cast<float>(q + alpha * (target - q));
  t.count_visit(s, a);
}

/// First index of the maximum.
template <class T>
std::size_t argmax(std::span<const T> row) {
  if (row.empty()) throw ConfigError("argmax of an empty row");
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

/// Indices of the k largest values, value descending then index ascending.
template <class T>
std::vector<std::size_t> top_k(std::span<const T> row, std::size_t k) {
  std::vector<std::size_t> idx(row.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) { return row[a] > row[b] || (row[a] == row[b] && a < b); });
  idx.resize(k);
  return idx;
}

/// Epsilon-greedy: uniform action with probability eps, else argmax.
template <class T>
std::size_t select_train(std::span<const T> row, double eps, Rng& rng) {
  if (uniform01(rng) < eps) return uniform_index(rng, row.size());
  return argmax(row);
}

inline constexpr std::size_t kEvalTopK = 10;

/// Evaluation policy: argmax with probability 1-eps, otherwise uniform over
/// the ten highest-valued actions.
template <class T>
std::size_t select_eval(std::span<const T> row, double eps, Rng& rng, std::size_t k = kEvalTopK) {
  if (uniform01(rng) < eps) {
    const auto top = top_k(row, k);
    return top[uniform_index(rng, top.size())];
  }
  return argmax(row);
}

struct QTrainConfig {
  std::size_t steps = 500000;
  double alpha = 0.8;
  double gamma = 0.5;
  std::size_t link_switch_period = 100;
  std::uint64_t seed = 1;
  EpsilonSchedule epsilon{0.01, 1.0, 3.91e-5};
  /// Upper bound on rewards, used for the value-range check.
  double reward_max = 2.0;

  void validate() const {
    if (!(alpha > 0 && alpha <= 1)) throw ConfigError("alpha must lie in (0, 1]");
    if (!(gamma >= 0 && gamma < 1)) throw ConfigError("gamma must lie in [0, 1)");
    if (link_switch_period == 0) throw ConfigError("link_switch_period must be >= 1");
    epsilon.validate();
  }
};

/// Tabular Q-learning. Each step: pick an epsilon-greedy action, step the
/// environment, apply one Bellman update; every link_switch_period steps the
/// environment moves to a new random link.
template <TabularEnvironment Env>
QTable train_q(Env& env, const QTrainConfig& cfg) {
  cfg.validate();
  QTable table(env.num_states(), env.num_actions());
  auto rng = derive_rng(cfg.seed, {0x7174ULL});
  const double bound = cfg.reward_max / (1.0 - cfg.gamma) + 1e-4;
  std::size_t s = env.reset(rng);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    if (step > 0 && step % cfg.link_switch_period == 0) env.switch_random_link(rng);
    const double eps = epsilon(step, cfg.epsilon);
    const std::size_t a = select_train(table.row(s), eps, rng);
    const auto tr = env.step(a, rng);
    bellman_update(table, s, a, tr.reward, tr.next_state, cfg.alpha, cfg.gamma);
    const float q = table(s, a);
    if (!std::isfinite(q) || q < -1e-4 || q > bound)
      throw NumericError("Q-value left its admissible range during training");
    s = tr.next_state;
  }
  return table;
}

}  // namespace uwbadapt
