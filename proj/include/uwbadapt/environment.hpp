#pragma once

#include <concepts>
#include <memory>
#include <optional>
#include <vector>

#include "dataset.hpp"
#include "energy_model.hpp"
#include "link_state.hpp"
#include "rng.hpp"

namespace uwbadapt {

namespace detail {
inline void check_unit(double v, const char* what) {
  if (!(v >= -1e-12 && v <= 1.0 + 1e-12)) throw ConfigError(std::string(what) + " must lie in [0, 1]");
}
}  // namespace detail

/// PRR + PRR * (1 - normalized energy). Range [0, 2]; zero iff PRR is zero.
inline double reward(double prr, double e_norm) {
  detail::check_unit(prr, "prr");
  detail::check_unit(e_norm, "normalized energy");
  return prr + prr * (1.0 - e_norm);
}

/// PRR + (1 - normalized energy).
inline double objective_g(double prr, double e_norm) {
  detail::check_unit(prr, "prr");
  detail::check_unit(e_norm, "normalized energy");
  return prr + (1.0 - e_norm);
}

/// Fits the scaler on every received sample of the store and the ternary
/// thresholds on the scaled samples paired with their combination PRR.
inline StateEncoder fit_state_encoder(const DatasetStore& store) {
  std::vector<LinkFeatures> feats;
  std::vector<double> prrs;
  for (std::size_t l = 0; l < store.num_links(); ++l)
    for (std::size_t a = 0; a < action_space().size(); ++a) {
      const auto& st = store.stats(l, a);
      for (const auto& fs : st.feature_pool) {
        feats.push_back(fs.features);
        prrs.push_back(st.prr);
      }
    }
  if (feats.empty()) throw ConfigError("dataset has no received ranges to fit the state encoder");
  StateEncoder enc;
  enc.scaler = FeatureScaler::fit(feats);
  std::vector<std::array<double, kDiscreteDims>> rows(feats.size());
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const auto scaled = enc.scaler.scale(feats[i]);
    std::copy(scaled.begin(), scaled.end(), rows[i].begin());
    rows[i][kPrrSlot] = prrs[i];
  }
  enc.discretizer = TernaryDiscretizer::fit(rows);
  return enc;
}

enum class MeasurementMode {
  /// Block PRR from block_size Bernoulli draws at the stored PRR.
  Bernoulli,
  /// Block PRR equals the stored PRR; no sampling noise on reliability.
  Expected,
};

struct EnvConfig {
  std::size_t block_size = 10;
  MeasurementMode mode = MeasurementMode::Bernoulli;
  FrameModelParams frame;
};

struct StepOutcome {
  StateVector state{};
  double reward = 0;
  double prr_block = 0;
  double energy_wus = 0;
  std::optional<double> mean_range_error_mm;
  std::size_t action = 0;
};

/// Trace-driven environment over an immutable store. Holds only the current
/// link; randomness comes from the caller's generator.
class ReplayEnvironment {
 public:
  ReplayEnvironment(std::shared_ptr<const DatasetStore> store, StateEncoder encoder, EnvConfig cfg = {})
      : store_(std::move(store)), encoder_(std::move(encoder)), cfg_(cfg),
        energy_(action_space(), cfg.frame) {
    if (!store_ || store_->num_links() == 0) throw ConfigError("environment needs a non-empty dataset");
    if (cfg_.block_size == 0) throw ConfigError("block_size must be >= 1");
    link_ = store_->active_links().empty() ? 0 : store_->active_links().front();
  }

  void switch_link(std::size_t link) {
    if (link >= store_->num_links()) throw ConfigError("link index out of range");
    link_ = link;
  }
  void switch_link(const LinkId& id) { link_ = store_->link_index(id); }
  std::size_t current_link() const noexcept { return link_; }

  /// Configures `action` for one block of attempts on the current link.
  StepOutcome step(std::size_t action, Rng& rng) const {
    const auto& setting = action_space().at(action);
    const auto& st = store_->stats(link_, action);
    StepOutcome out;
    out.action = action;
    out.energy_wus = energy_.energy(action);

    std::size_t receptions = 0;
    const FeatureSample* observed = nullptr;
    double err_sum = 0;
    if (cfg_.mode == MeasurementMode::Expected) {
      out.prr_block = st.prr;
      if (!st.feature_pool.empty() && st.prr > 0) {
        observed = &st.feature_pool[uniform_index(rng, st.feature_pool.size())];
        out.mean_range_error_mm = st.mean_abs_range_error_mm;
      }
    } else {
      for (std::size_t k = 0; k < cfg_.block_size; ++k) {
        if (!bernoulli(rng, st.prr) || st.feature_pool.empty()) continue;
        const auto& fs = st.feature_pool[uniform_index(rng, st.feature_pool.size())];
        if (!observed) observed = &fs;
        err_sum += fs.range_error_mm;
        ++receptions;
      }
      out.prr_block = static_cast<double>(receptions) / static_cast<double>(cfg_.block_size);
      if (receptions) out.mean_range_error_mm = err_sum / static_cast<double>(receptions);
    }
    if (observed && out.prr_block > 0) {
      out.state = encoder_.encode(observed->features, out.prr_block, setting);
    } else {
      out.prr_block = 0;
      out.state = sentinel_state(setting);
    }
    out.reward = reward(out.prr_block, energy_.normalized(action));
    return out;
  }

  /// Reward at the stored PRR and exact energy of the setting.
  double expected_reward(std::size_t link, std::size_t action) const {
    return reward(store_->prr(link, action), energy_.normalized(action));
  }
  double expected_reward(std::size_t action) const { return expected_reward(link_, action); }

  std::size_t random_active_link(Rng& rng) const {
    const auto& act = store_->active_links();
    if (act.empty()) return uniform_index(rng, store_->num_links());
    return act[uniform_index(rng, act.size())];
  }

  const DatasetStore& store() const noexcept { return *store_; }
  std::shared_ptr<const DatasetStore> store_ptr() const noexcept { return store_; }
  const StateEncoder& encoder() const noexcept { return encoder_; }
  const EnergyTable& energy() const noexcept { return energy_; }
  const EnvConfig& config() const noexcept { return cfg_; }

 private:
  std::shared_ptr<const DatasetStore> store_;
  StateEncoder encoder_;
  EnvConfig cfg_;
  EnergyTable energy_;
  std::size_t link_ = 0;
};

// ---------------------------------------------------------------------------
// Agent-facing environment shapes

struct TabularTransition {
  std::size_t next_state;
  double reward;
};

template <class E>
concept TabularEnvironment = requires(E& e, Rng& rng, std::size_t a) {
  { e.num_states() } -> std::convertible_to<std::size_t>;
  { e.num_actions() } -> std::convertible_to<std::size_t>;
  { e.reset(rng) } -> std::convertible_to<std::size_t>;
  { e.step(a, rng) } -> std::same_as<TabularTransition>;
  e.switch_random_link(rng);
};

struct VectorTransition {
  std::vector<double> next_state;
  double reward;
};

template <class E>
concept VectorEnvironment = requires(E& e, Rng& rng, std::size_t a) {
  { e.state_dim() } -> std::convertible_to<std::size_t>;
  { e.num_actions() } -> std::convertible_to<std::size_t>;
  { e.reset(rng) } -> std::same_as<std::vector<double>>;
  { e.step(a, rng) } -> std::same_as<VectorTransition>;
  e.switch_random_link(rng);
};

/// Shared link bookkeeping for the two adapters: reset picks a random active
/// link and a random start action; switching keeps the agent's last state.
class UwbEnvBase {
 public:
  explicit UwbEnvBase(ReplayEnvironment env) : env_(std::move(env)) {}

  std::size_t num_actions() const noexcept { return action_space().size(); }
  void switch_random_link(Rng& rng) { env_.switch_link(env_.random_active_link(rng)); }
  ReplayEnvironment& env() noexcept { return env_; }
  const ReplayEnvironment& env() const noexcept { return env_; }

 protected:
  StepOutcome start(Rng& rng) {
    switch_random_link(rng);
    return env_.step(uniform_index(rng, num_actions()), rng);
  }
  ReplayEnvironment env_;
};

class UwbTabularEnv : public UwbEnvBase {
 public:
  using UwbEnvBase::UwbEnvBase;
  std::size_t num_states() const noexcept { return kNumDiscreteStates; }
  std::size_t reset(Rng& rng) { return env_.encoder().state_index(start(rng).state); }
  TabularTransition step(std::size_t a, Rng& rng) {
    const auto o = env_.step(a, rng);
    return {env_.encoder().state_index(o.state), o.reward};
  }
};

class UwbVectorEnv : public UwbEnvBase {
 public:
  using UwbEnvBase::UwbEnvBase;
  std::size_t state_dim() const noexcept { return kStateSize; }
  std::vector<double> reset(Rng& rng) {
    const auto s = start(rng).state;
    return {s.begin(), s.end()};
  }
  VectorTransition step(std::size_t a, Rng& rng) {
    const auto o = env_.step(a, rng);
    return {{o.state.begin(), o.state.end()}, o.reward};
  }
};

}  // namespace uwbadapt
