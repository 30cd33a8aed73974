#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "error.hpp"
#include "rng.hpp"

namespace uwbadapt {

/// Hidden widths of the deep Q-network; input 14, output 72.
inline const std::vector<std::size_t>& q_network_shape() {
  static const std::vector<std::size_t> shape{14, 128, 256, 512, 256, 128, 72};
  return shape;
}

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  bool relu = true;
};

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;
};

/// Fully connected network: ReLU on every hidden layer, linear output.
/// Batches are column-major, one sample per column.
class Mlp {
 public:
  enum class Init { Random, Zero };

  Mlp() = default;

  /// shape = {input, hidden..., output}. Random init is He-uniform on ReLU
  /// layers and Glorot-uniform on the output layer, biases zero.
  explicit Mlp(std::vector<std::size_t> shape, std::uint64_t seed = 0, Init init = Init::Random)
      : shape_(std::move(shape)), seed_(seed) {
    if (shape_.size() < 2) throw ConfigError("network needs at least input and output widths");
    for (auto w : shape_)
      if (w == 0) throw ConfigError("layer widths must be positive");
    auto rng = derive_rng(seed, {0x6e6eULL});
    for (std::size_t i = 0; i + 1 < shape_.size(); ++i) {
      DenseLayer l;
      const auto in = static_cast<Eigen::Index>(shape_[i]);
      const auto out = static_cast<Eigen::Index>(shape_[i + 1]);
      l.relu = i + 2 < shape_.size();
      l.weight = Eigen::MatrixXd::Zero(out, in);
      l.bias = Eigen::VectorXd::Zero(out);
      if (init == Init::Random) {
        const double limit = l.relu ? std::sqrt(6.0 / static_cast<double>(in))
                                    : std::sqrt(6.0 / static_cast<double>(in + out));
        for (Eigen::Index r = 0; r < out; ++r)
          for (Eigen::Index c = 0; c < in; ++c) l.weight(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
      }
      layers_.push_back(std::move(l));
    }
  }

  static Mlp q_network(std::uint64_t seed) { return Mlp(q_network_shape(), seed); }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t input_size() const { return shape_.front(); }
  std::size_t output_size() const { return shape_.back(); }
  std::uint64_t seed() const noexcept { return seed_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const {
    if (static_cast<std::size_t>(x.rows()) != input_size())
      throw ConfigError("input width " + std::to_string(x.rows()) + " != " + std::to_string(input_size()));
    Eigen::MatrixXd a = x;
    for (const auto& l : layers_) {
      Eigen::MatrixXd z = l.weight * a;
      z.colwise() += l.bias;
      a = l.relu ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    }
    return a;
  }

  Eigen::VectorXd forward(std::span<const double> input) const {
    if (input.size() != input_size())
      throw ConfigError("input length " + std::to_string(input.size()) + " != " + std::to_string(input_size()));
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
    for (const auto& l : layers_) {
      Eigen::VectorXd z = l.weight * a + l.bias;
      a = l.relu ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
    }
    return a;
  }

  /// Mean squared error over every output of every sample, and its gradient.
  double loss_and_gradient(const Eigen::MatrixXd& x, const Eigen::MatrixXd& target, MlpGradients* grad) const {
    if (x.cols() != target.cols() || static_cast<std::size_t>(target.rows()) != output_size())
      throw ConfigError("batch shape mismatch");
    std::vector<Eigen::MatrixXd> acts{x};
    for (const auto& l : layers_) {
      Eigen::MatrixXd z = l.weight * acts.back();
      z.colwise() += l.bias;
      acts.push_back(l.relu ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z);
    }
    const Eigen::MatrixXd resid = acts.back() - target;
    const double denom = static_cast<double>(resid.size());
    const double loss = resid.squaredNorm() / denom;
    if (!grad) return loss;

    grad->weight.resize(layers_.size());
    grad->bias.resize(layers_.size());
    Eigen::MatrixXd delta = resid * (2.0 / denom);
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const auto& l = layers_[i];
      if (l.relu) delta = delta.cwiseProduct((acts[i + 1].array() > 0.0).cast<double>().matrix());
      grad->weight[i] = delta * acts[i].transpose();
      grad->bias[i] = delta.rowwise().sum();
      if (i > 0) delta = l.weight.transpose() * delta;
    }
    return loss;
  }

  /// Parameters in layer order, each weight matrix row-major then its bias.
  std::vector<double> flat_parameters() const {
    std::vector<double> p;
    p.reserve(parameter_count());
    for (const auto& l : layers_) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) p.push_back(l.weight(r, c));
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) p.push_back(l.bias(r));
    }
    return p;
  }

  void set_flat_parameters(std::span<const double> p) {
    if (p.size() != parameter_count()) throw ConfigError("parameter vector has wrong length");
    std::size_t k = 0;
    for (auto& l : layers_) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = p[k++];
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = p[k++];
    }
  }

  bool all_finite() const {
    for (const auto& l : layers_)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

  /// Writes `<stem>.json` (manifest) and `<stem>.bin` (float64 parameters).
  void save(const std::string& stem, const nlohmann::json& extra = {}) const {
    const auto p = flat_parameters();
    std::ofstream bin(stem + ".bin", std::ios::binary);
    if (!bin) throw IoError("cannot write " + stem + ".bin");
    for (double v : p) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      unsigned char b[8];
      for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
      bin.write(reinterpret_cast<const char*>(b), 8);
    }
    nlohmann::json m = {{"shape", shape_},
                        {"seed", seed_},
                        {"optimizer_state", false},
                        {"parameter_count", p.size()},
                        {"blob", stem.substr(stem.find_last_of('/') + 1) + ".bin"}};
    if (!extra.is_null()) m["extra"] = extra;
    std::ofstream js(stem + ".json");
    if (!js) throw IoError("cannot write " + stem + ".json");
    js << m.dump(2) << '\n';
  }

  static Mlp load(const std::string& stem) {
    std::ifstream js(stem + ".json");
    if (!js) throw IoError("cannot open " + stem + ".json");
    nlohmann::json m;
    try {
      js >> m;
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("model manifest: ") + e.what());
    }
    Mlp net(m.at("shape").get<std::vector<std::size_t>>(), m.value("seed", std::uint64_t{0}), Init::Zero);
    std::ifstream bin(stem + ".bin", std::ios::binary);
    if (!bin) throw IoError("cannot open " + stem + ".bin");
    std::vector<double> p(net.parameter_count());
    for (auto& v : p) {
      unsigned char b[8] = {};
      bin.read(reinterpret_cast<char*>(b), 8);
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
      std::memcpy(&v, &bits, 8);
    }
    if (!bin) throw SchemaError("truncated parameter blob " + stem + ".bin");
    net.set_flat_parameters(p);
    return net;
  }

 private:
  std::vector<std::size_t> shape_;
  std::uint64_t seed_ = 0;
  std::vector<DenseLayer> layers_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(Mlp& net, const MlpGradients& g) {
    auto& layers = net.layers();
    if (m_w_.empty()) {
      for (const auto& l : layers) {
        m_w_.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
        v_w_.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
        m_b_.push_back(Eigen::VectorXd::Zero(l.bias.size()));
        v_b_.push_back(Eigen::VectorXd::Zero(l.bias.size()));
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const double lr = cfg_.learning_rate * std::sqrt(c2) / c1;
    const double eps = cfg_.epsilon * std::sqrt(c2);
    auto update = [&](auto& param, auto& m, auto& v, const auto& grad) {
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * grad;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
      param.array() -= lr * m.array() / (v.array().sqrt() + eps);
    };
    for (std::size_t i = 0; i < layers.size(); ++i) {
      update(layers[i].weight, m_w_[i], v_w_[i], g.weight[i]);
      update(layers[i].bias, m_b_[i], v_b_[i], g.bias[i]);
    }
  }

  std::size_t steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return cfg_; }

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::vector<Eigen::MatrixXd> m_w_, v_w_;
  std::vector<Eigen::VectorXd> m_b_, v_b_;
};

struct TrainBatch {
  Eigen::MatrixXd inputs;   // in x B
  Eigen::MatrixXd targets;  // out x B
};

/// One optimizer step on the batch MSE. Returns the loss before the step.
inline double fit_batch(Mlp& net, const TrainBatch& batch, AdamOptimizer& opt) {
  if (batch.inputs.cols() == 0 || batch.inputs.cols() != batch.targets.cols())
    throw ConfigError("batch must hold B >= 1 matching input/target columns");
  MlpGradients g;
  const double loss = net.loss_and_gradient(batch.inputs, batch.targets, &g);
  if (!std::isfinite(loss)) throw NumericError("non-finite training loss");
  opt.step(net, g);
  if (!net.all_finite()) throw NumericError("training step produced non-finite parameters");
  return loss;
}

}  // namespace uwbadapt
