#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "error.hpp"
#include "rng.hpp"

namespace uwbadapt {

struct Experience {
  std::vector<double> state;
  std::size_t action = 0;
  double reward = 0;
  std::vector<double> next_state;
  double priority = 1.0;
};

/// Binary tree of partial sums over a fixed number of leaves.
class SumTree {
 public:
  explicit SumTree(std::size_t leaves = 1) {
    leaves_ = 1;
    while (leaves_ < leaves) leaves_ <<= 1;
    nodes_.assign(2 * leaves_, 0.0);
  }

  void set(std::size_t i, double value) {
    std::size_t n = i + leaves_;
    nodes_[n] = value;
    for (n >>= 1; n >= 1; n >>= 1) nodes_[n] = nodes_[2 * n] + nodes_[2 * n + 1];
  }
  double get(std::size_t i) const { return nodes_[i + leaves_]; }
  double total() const { return nodes_[1]; }

  /// Leaf whose cumulative interval contains mass in [0, total).
  std::size_t find(double mass) const {
    std::size_t n = 1;
    while (n < leaves_) {
      const double left = nodes_[2 * n];
      if (mass < left || nodes_[2 * n + 1] <= 0.0) {
        n = 2 * n;
      } else {
        mass -= left;
        n = 2 * n + 1;
      }
    }
    return n - leaves_;
  }

 private:
  std::size_t leaves_ = 1;
  std::vector<double> nodes_;
};

/// (1/n * 1/prob)^beta.
inline double importance_weight(double prob, std::size_t n, double beta) {
  if (!(prob > 0 && prob <= 1.0 + 1e-12) || n == 0) throw ConfigError("importance_weight: need prob in (0,1], n >= 1");
  return std::pow(1.0 / (static_cast<double>(n) * prob), beta);
}

struct ReplayConfig {
  std::size_t capacity = 50000;
  double zeta = 0.6;
  double beta = 0.4;
  double priority_floor = 1e-3;

  void validate() const {
    if (capacity == 0) throw ConfigError("replay capacity must be >= 1");
    if (!(zeta >= 0) || !(beta >= 0)) throw ConfigError("zeta and beta must be non-negative");
    if (!(priority_floor > 0)) throw ConfigError("priority floor must be positive");
  }
};

struct SampledExperience {
  std::size_t index;
  double probability;
  double weight;
};

/// Ring buffer of experiences sampled with probability p_i^zeta / sum_k p_k^zeta.
class PrioritizedReplay {
 public:
  explicit PrioritizedReplay(ReplayConfig cfg = {}) : cfg_(cfg), tree_(cfg.capacity) {
    cfg_.validate();
    items_.reserve(std::min<std::size_t>(cfg_.capacity, 1 << 16));
  }

  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return cfg_.capacity; }
  const ReplayConfig& config() const noexcept { return cfg_; }
  const Experience& at(std::size_t i) const { return items_.at(i); }

  /// Largest priority assigned so far (1 before any insertion).
  double max_priority() const noexcept { return max_priority_; }

  /// Stores e, overwriting the oldest item once full. Returns its slot.
  std::size_t push(Experience e) {
    e.priority = std::max(e.priority, cfg_.priority_floor);
    std::size_t slot;
    if (items_.size() < cfg_.capacity) {
      slot = items_.size();
      items_.push_back(std::move(e));
    } else {
      slot = next_;
      items_[slot] = std::move(e);
    }
    next_ = (slot + 1) % cfg_.capacity;
    commit(slot);
    return slot;
  }

  void update_priority(std::size_t i, double p) {
    items_.at(i).priority = std::max(p, cfg_.priority_floor);
    commit(i);
  }

  double probability(std::size_t i) const { return tree_.get(i) / tree_.total(); }

  /// Draws with replacement, attaching probability and importance weight.
  std::vector<SampledExperience> sample(std::size_t batch, Rng& rng) const {
    if (items_.empty()) throw ConfigError("cannot sample from an empty replay memory");
    std::vector<SampledExperience> out;
    out.reserve(batch);
    const double total = tree_.total();
    for (std::size_t k = 0; k < batch; ++k) {
      std::size_t i = tree_.find(uniform01(rng) * total);
      if (i >= items_.size()) i = items_.size() - 1;
      const double prob = probability(i);
      out.push_back({i, prob, importance_weight(prob, items_.size(), cfg_.beta)});
    }
    return out;
  }

 private:
  void commit(std::size_t i) {
    const double p = items_[i].priority;
    max_priority_ = std::max(max_priority_, p);
    tree_.set(i, std::pow(p, cfg_.zeta));
  }

  ReplayConfig cfg_;
  SumTree tree_;
  std::vector<Experience> items_;
  std::size_t next_ = 0;
  double max_priority_ = 1.0;
};

}  // namespace uwbadapt
