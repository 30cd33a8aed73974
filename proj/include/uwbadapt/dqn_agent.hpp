#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "environment.hpp"
#include "nn.hpp"
#include "q_agent.hpp"
#include "replay.hpp"

namespace uwbadapt {

enum class TargetUpdate {
  /// current[a] += alpha * delta * w with signed TD error delta.
  SignedTd,
  /// current[a] += alpha * |delta| * w, as the update is printed in the
  /// original pseudocode. Kept for comparison runs.
  AbsoluteTd,
};

enum class InitialPriority {
  /// New experiences enter with the largest priority seen so far.
  MaxPriority,
  /// New experiences enter with their TD error under the current networks.
  TdError,
};

struct DqnTrainConfig {
  std::size_t steps = 200000;
  double alpha = 0.8;
  double gamma = 0.5;
  std::size_t main_update_period = 5;
  std::size_t target_update_period = 25;
  std::size_t batch_size = 10;
  EpsilonSchedule epsilon{0.01, 1.0, 1.96e-5};
  std::size_t link_switch_period = 100;
  std::uint64_t seed = 1;
  ReplayConfig replay;
  AdamConfig adam;
  /// Full layer chain {input, hidden..., output}; empty means the default
  /// Q-network chain with the environment's input and output widths.
  std::vector<std::size_t> shape;
  TargetUpdate target_update = TargetUpdate::SignedTd;
  InitialPriority initial_priority = InitialPriority::MaxPriority;
  /// Divide the batch's importance weights by their maximum.
  bool normalize_weights = true;

  void validate() const {
    if (!(alpha > 0 && alpha <= 1)) throw ConfigError("alpha must lie in (0, 1]");
    if (!(gamma >= 0 && gamma < 1)) throw ConfigError("gamma must lie in [0, 1)");
    if (main_update_period == 0) throw ConfigError("main_update_period must be >= 1");
    if (target_update_period < main_update_period)
      throw ConfigError("target_update_period must be >= main_update_period");
    if (batch_size == 0 || batch_size > replay.capacity) throw ConfigError("batch_size must lie in [1, capacity]");
    if (link_switch_period == 0) throw ConfigError("link_switch_period must be >= 1");
    epsilon.validate();
    replay.validate();
  }

  /// Main update 5, target update 25, alpha = gamma = 0.7, batch 10.
  static DqnTrainConfig static_profile() {
    DqnTrainConfig c;
    c.main_update_period = 5;
    c.target_update_period = 25;
    c.alpha = 0.7;
    c.gamma = 0.7;
    c.batch_size = 10;
    return c;
  }
  /// Main update 20, target update 100, alpha = gamma = 0.55, batch 256.
  static DqnTrainConfig dynamic_profile() {
    DqnTrainConfig c;
    c.main_update_period = 20;
    c.target_update_period = 100;
    c.alpha = 0.55;
    c.gamma = 0.55;
    c.batch_size = 256;
    return c;
  }
  static DqnTrainConfig profile(const std::string& name) {
    if (name == "static") return static_profile();
    if (name == "dynamic") return dynamic_profile();
    throw ConfigError("unknown profile '" + name + "' (expected static or dynamic)");
  }

  nlohmann::json to_json() const {
    return {{"steps", steps},
            {"alpha", alpha},
            {"gamma", gamma},
            {"main_update_period", main_update_period},
            {"target_update_period", target_update_period},
            {"batch_size", batch_size},
            {"eps_min", epsilon.eps_min},
            {"eps_max", epsilon.eps_max},
            {"lambda", epsilon.lambda},
            {"link_switch_period", link_switch_period},
            {"seed", seed},
            {"replay_capacity", replay.capacity},
            {"zeta", replay.zeta},
            {"beta", replay.beta},
            {"priority_floor", replay.priority_floor},
            {"adam_learning_rate", adam.learning_rate},
            {"shape", shape},
            {"target_update", target_update == TargetUpdate::SignedTd ? "signed" : "absolute"},
            {"initial_priority", initial_priority == InitialPriority::MaxPriority ? "max" : "td"},
            {"normalize_weights", normalize_weights}};
  }
};

inline Eigen::VectorXd to_vector(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// |r + gamma * max_a Q_target(s', a) - Q(s, a)| + floor.
inline double td_priority(double r, double gamma, const Mlp& target_net, std::span<const double> s_next,
                          double q_sa, double floor = 1e-3) {
  return std::abs(r + gamma * target_net.forward(s_next).maxCoeff() - q_sa) + floor;
}

/// Same, reading Q(s, a) from the main network.
inline double td_priority(double r, double gamma, const Mlp& target_net, const Mlp& main_net,
                          std::span<const double> s, std::size_t a, std::span<const double> s_next,
                          double floor = 1e-3) {
  return td_priority(r, gamma, target_net, s_next, main_net.forward(s)(static_cast<Eigen::Index>(a)), floor);
}

struct TargetBatch {
  TrainBatch batch;
  std::vector<double> priorities;  // |delta| + floor, one per sample
};

/// Training data for one minibatch: rows are the main network's current
/// outputs with only the taken action moved by alpha * delta * w.
inline TargetBatch build_targets(std::span<const SampledExperience> sampled, const PrioritizedReplay& memory,
                                 const Mlp& main_net, const Mlp& target_net, double alpha, double gamma,
                                 TargetUpdate mode = TargetUpdate::SignedTd, bool normalize_weights = false) {
  double w_max = 0;
  for (const auto& smp : sampled) w_max = std::max(w_max, smp.weight);
  const double w_scale = normalize_weights && w_max > 0 ? 1.0 / w_max : 1.0;
  const auto b = static_cast<Eigen::Index>(sampled.size());
  const auto in = static_cast<Eigen::Index>(main_net.input_size());
  Eigen::MatrixXd s(in, b), s_next(in, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto& e = memory.at(sampled[static_cast<std::size_t>(j)].index);
    s.col(j) = to_vector(e.state);
    s_next.col(j) = to_vector(e.next_state);
  }
  TargetBatch out;
  out.batch.inputs = s;
  out.batch.targets = main_net.forward_batch(s);
  const Eigen::MatrixXd future = target_net.forward_batch(s_next);
  out.priorities.resize(sampled.size());
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto& smp = sampled[static_cast<std::size_t>(j)];
    const auto& e = memory.at(smp.index);
    const auto a = static_cast<Eigen::Index>(e.action);
    const double delta = e.reward + gamma * future.col(j).maxCoeff() - out.batch.targets(a, j);
    out.priorities[static_cast<std::size_t>(j)] = std::abs(delta) + memory.config().priority_floor;
    const double step = mode == TargetUpdate::SignedTd ? delta : std::abs(delta);
    out.batch.targets(a, j) += alpha * step * smp.weight * w_scale;
  }
  return out;
}

/// Argmax of the network output, ties to the lowest index.
inline std::size_t greedy_policy(const Mlp& net, std::span<const double> state) {
  const Eigen::VectorXd q = net.forward(state);
  return argmax(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())));
}

/// Evaluation variant: exploration restricted to the ten best actions.
inline std::size_t eval_policy(const Mlp& net, std::span<const double> state, double eps, Rng& rng) {
  const Eigen::VectorXd q = net.forward(state);
  return select_eval(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())), eps, rng);
}

/// FNV-1a over the parameter bytes.
inline std::uint64_t parameter_digest(const Mlp& net) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : net.flat_parameters()) {
    unsigned char b[8];
    std::memcpy(b, &v, 8);
    for (auto c : b) h = (h ^ c) * 1099511628211ULL;
  }
  return h;
}

inline Mlp clone_weights(const Mlp& src) { return src; }

/// Main network, target network, optimizer and replay memory.
class DqnAgent {
 public:
  DqnAgent(std::size_t state_dim, std::size_t num_actions, DqnTrainConfig cfg)
      : cfg_(std::move(cfg)), replay_(cfg_.replay), opt_(cfg_.adam) {
    cfg_.validate();
    auto shape = cfg_.shape;
    if (shape.empty()) {
      shape = q_network_shape();
      shape.front() = state_dim;
      shape.back() = num_actions;
    }
    if (shape.front() != state_dim || shape.back() != num_actions)
      throw ConfigError("network shape does not match the environment");
    main_ = Mlp(shape, cfg_.seed);
    target_ = clone_weights(main_);
  }

  const Mlp& main() const noexcept { return main_; }
  const Mlp& target() const noexcept { return target_; }
  const PrioritizedReplay& memory() const noexcept { return replay_; }
  const DqnTrainConfig& config() const noexcept { return cfg_; }
  std::size_t steps_observed() const noexcept { return steps_; }
  std::size_t updates() const noexcept { return updates_; }

  /// Replaces both networks, e.g. with a checkpoint. Memory and optimizer
  /// state are not part of a checkpoint and restart empty.
  void load_weights(const Mlp& net) {
    if (net.shape() != main_.shape()) throw ConfigError("checkpoint shape does not match the agent");
    main_ = net;
    target_ = net;
    replay_ = PrioritizedReplay(cfg_.replay);
    opt_ = AdamOptimizer(cfg_.adam);
  }

  std::size_t act_train(std::span<const double> state, double eps, Rng& rng) const {
    if (uniform01(rng) < eps) return uniform_index(rng, main_.output_size());
    return greedy_policy(main_, state);
  }
  std::size_t act_greedy(std::span<const double> state) const { return greedy_policy(main_, state); }
  std::size_t act_eval(std::span<const double> state, double eps, Rng& rng) const {
    return eval_policy(main_, state, eps, rng);
  }

  /// Stores one transition, then runs the periodic main and target updates.
  void observe(std::vector<double> s, std::size_t a, double r, std::vector<double> s_next, Rng& rng) {
    Experience e{std::move(s), a, r, std::move(s_next), replay_.max_priority()};
    if (cfg_.initial_priority == InitialPriority::TdError)
      e.priority = td_priority(r, cfg_.gamma, target_, main_, e.state, a, e.next_state, cfg_.replay.priority_floor);
    replay_.push(std::move(e));
    ++steps_;
    if (steps_ % cfg_.main_update_period == 0 && replay_.size() >= cfg_.batch_size) learn(rng);
    if (steps_ % cfg_.target_update_period == 0) target_ = clone_weights(main_);
  }

  /// One prioritized minibatch update; returns the pre-step loss.
  double learn(Rng& rng) {
    const auto sampled = replay_.sample(cfg_.batch_size, rng);
    auto tb = build_targets(sampled, replay_, main_, target_, cfg_.alpha, cfg_.gamma, cfg_.target_update,
                            cfg_.normalize_weights);
    for (std::size_t j = 0; j < sampled.size(); ++j) replay_.update_priority(sampled[j].index, tb.priorities[j]);
    ++updates_;
    return fit_batch(main_, tb.batch, opt_);
  }

 private:
  DqnTrainConfig cfg_;
  Mlp main_, target_;
  PrioritizedReplay replay_;
  AdamOptimizer opt_;
  std::size_t steps_ = 0;
  std::size_t updates_ = 0;
};

/// Deep Q-learning loop: epsilon-greedy on the main network, experience
/// stored with priority, periodic minibatch fits and target syncs.
template <VectorEnvironment Env>
DqnAgent train_dqn(Env& env, const DqnTrainConfig& cfg) {
  DqnAgent agent(env.state_dim(), env.num_actions(), cfg);
  auto rng = derive_rng(cfg.seed, {0x64716eULL});
  auto s = env.reset(rng);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    if (step > 0 && step % cfg.link_switch_period == 0) env.switch_random_link(rng);
    const std::size_t a = agent.act_train(s, epsilon(step, cfg.epsilon), rng);
    auto tr = env.step(a, rng);
    auto next = tr.next_state;
    agent.observe(std::move(s), a, tr.reward, std::move(tr.next_state), rng);
    s = std::move(next);
  }
  return agent;
}

}  // namespace uwbadapt
