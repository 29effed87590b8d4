#pragma once

// Dense feed-forward networks with hand-written backpropagation.
//
// Batches are row-major in the mathematical sense: one sample per row. A
// layer computes  Z = X W + 1 b^T,  A = act(Z)  with W stored in x out.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "idslab/error.hpp"
#include "json.hpp"

namespace idslab::nn {

enum class Activation { relu, leaky_relu, sigmoid, tanh, linear, softmax };

inline constexpr double kLeakySlope = 0.2;

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::linear: return "linear";
    case Activation::softmax: return "softmax";
  }
  return "linear";
}

inline Activation activation_from_string(std::string_view s) {
  for (auto a : {Activation::relu, Activation::leaky_relu, Activation::sigmoid, Activation::tanh,
                 Activation::linear, Activation::softmax}) {
    if (to_string(a) == s) return a;
  }
  throw ArgumentError("unknown activation '" + std::string(s) + "'");
}

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct Layer {
  MatrixX<Scalar> weights;  // fan_in x fan_out
  VectorX<Scalar> bias;     // fan_out
  Activation activation = Activation::linear;

  Eigen::Index fan_in() const { return weights.rows(); }
  Eigen::Index fan_out() const { return weights.cols(); }
};

template <typename Scalar>
struct DenseNet {
  std::vector<Layer<Scalar>> layers;

  Eigen::Index input_size() const { return layers.empty() ? 0 : layers.front().fan_in(); }
  Eigen::Index output_size() const { return layers.empty() ? 0 : layers.back().fan_out(); }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
  }

  bool all_finite() const {
    for (const auto& l : layers)
      if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }
};

/// Per-layer inputs and pre-activations retained for backward().
template <typename Scalar>
struct Tape {
  std::vector<MatrixX<Scalar>> inputs;
  std::vector<MatrixX<Scalar>> preactivations;
  std::vector<MatrixX<Scalar>> outputs;
};

template <typename Scalar>
struct Gradients {
  std::vector<MatrixX<Scalar>> weights;
  std::vector<VectorX<Scalar>> bias;
  MatrixX<Scalar> input;  // d loss / d batch

  Scalar squared_norm() const {
    Scalar s = 0;
    for (const auto& w : weights) s += w.squaredNorm();
    for (const auto& b : bias) s += b.squaredNorm();
    return s;
  }

  void scale(Scalar factor) {
    for (auto& w : weights) w *= factor;
    for (auto& b : bias) b *= factor;
  }
};

template <typename Scalar>
struct ForwardResult {
  MatrixX<Scalar> output;
  Tape<Scalar> tape;
};

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

/// `sizes` lists input size then each layer's width, so activations.size()
/// must equal sizes.size() - 1. He-normal for relu-family layers, Xavier
/// normal otherwise; biases start at zero.
template <typename Scalar = double>
DenseNet<Scalar> init_net(std::span<const Eigen::Index> sizes, std::span<const Activation> activations,
                          std::uint64_t seed) {
  if (sizes.size() < 2) throw ArgumentError("init_net: need at least one layer");
  if (activations.size() != sizes.size() - 1)
    throw ArgumentError("init_net: one activation per layer required");
  for (auto s : sizes)
    if (s <= 0) throw ArgumentError("init_net: layer sizes must be positive");

  std::mt19937_64 rng(seed);
  DenseNet<Scalar> net;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto fan_in = sizes[l];
    const auto fan_out = sizes[l + 1];
    const auto act = activations[l];
    const bool he = act == Activation::relu || act == Activation::leaky_relu;
    const double stddev = he ? std::sqrt(2.0 / static_cast<double>(fan_in))
                             : std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
    std::normal_distribution<double> dist(0.0, stddev);
    Layer<Scalar> layer;
    layer.weights.resize(fan_in, fan_out);
    for (Eigen::Index j = 0; j < fan_out; ++j)
      for (Eigen::Index i = 0; i < fan_in; ++i) layer.weights(i, j) = static_cast<Scalar>(dist(rng));
    layer.bias = VectorX<Scalar>::Zero(fan_out);
    layer.activation = act;
    net.layers.push_back(std::move(layer));
  }
  return net;
}

template <typename Scalar = double>
DenseNet<Scalar> init_net(std::initializer_list<Eigen::Index> sizes,
                          std::initializer_list<Activation> activations, std::uint64_t seed) {
  std::vector<Eigen::Index> s(sizes);
  std::vector<Activation> a(activations);
  return init_net<Scalar>(std::span<const Eigen::Index>(s), std::span<const Activation>(a), seed);
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

template <typename Derived>
auto softmax_rows(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out = z;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    out.row(r).array() -= out.row(r).maxCoeff();
    out.row(r) = out.row(r).array().exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

template <typename Scalar>
MatrixX<Scalar> apply_activation(Activation act, const MatrixX<Scalar>& z) {
  switch (act) {
    case Activation::relu: return z.cwiseMax(Scalar(0));
    case Activation::leaky_relu:
      return z.unaryExpr([](Scalar v) { return v > 0 ? v : Scalar(kLeakySlope) * v; });
    case Activation::sigmoid:
      return z.unaryExpr([](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
    case Activation::tanh: return z.array().tanh().matrix();
    case Activation::linear: return z;
    case Activation::softmax: return softmax_rows(z);
  }
  return z;
}

/// d loss / d z given d loss / d a, the pre-activation z and the output a.
template <typename Scalar>
MatrixX<Scalar> activation_backward(Activation act, const MatrixX<Scalar>& z, const MatrixX<Scalar>& a,
                                    const MatrixX<Scalar>& grad_a) {
  switch (act) {
    case Activation::relu:
      return grad_a.cwiseProduct(z.unaryExpr([](Scalar v) { return v > 0 ? Scalar(1) : Scalar(0); }));
    case Activation::leaky_relu:
      return grad_a.cwiseProduct(
          z.unaryExpr([](Scalar v) { return v > 0 ? Scalar(1) : Scalar(kLeakySlope); }));
    case Activation::sigmoid: return grad_a.cwiseProduct(a.cwiseProduct((Scalar(1) - a.array()).matrix()));
    case Activation::tanh: return grad_a.cwiseProduct((Scalar(1) - a.array().square()).matrix());
    case Activation::linear: return grad_a;
    case Activation::softmax: {
      VectorX<Scalar> dot = grad_a.cwiseProduct(a).rowwise().sum();
      return a.cwiseProduct((grad_a.colwise() - dot));
    }
  }
  return grad_a;
}

template <typename Scalar, typename Derived>
ForwardResult<Scalar> forward(const DenseNet<Scalar>& net, const Eigen::MatrixBase<Derived>& batch) {
  if (net.layers.empty()) throw ArgumentError("forward: empty network");
  if (batch.cols() != net.input_size())
    throw ArgumentError("forward: batch has " + std::to_string(batch.cols()) + " columns, net expects " +
                        std::to_string(net.input_size()));
  ForwardResult<Scalar> result;
  MatrixX<Scalar> x = batch;
  for (const auto& layer : net.layers) {
    MatrixX<Scalar> z = x * layer.weights;
    z.rowwise() += layer.bias.transpose();
    MatrixX<Scalar> a = apply_activation(layer.activation, z);
    result.tape.inputs.push_back(std::move(x));
    result.tape.preactivations.push_back(std::move(z));
    result.tape.outputs.push_back(a);
    x = std::move(a);
  }
  result.output = std::move(x);
  return result;
}

/// Inference only; no tape is kept.
template <typename Scalar, typename Derived>
MatrixX<Scalar> predict(const DenseNet<Scalar>& net, const Eigen::MatrixBase<Derived>& batch) {
  if (net.layers.empty()) throw ArgumentError("predict: empty network");
  if (batch.cols() != net.input_size()) throw ArgumentError("predict: input dimension mismatch");
  MatrixX<Scalar> x = batch;
  for (const auto& layer : net.layers) {
    MatrixX<Scalar> z = x * layer.weights;
    z.rowwise() += layer.bias.transpose();
    x = apply_activation(layer.activation, z);
  }
  return x;
}

template <typename Scalar, typename Derived>
Gradients<Scalar> backward(const DenseNet<Scalar>& net, const Tape<Scalar>& tape,
                           const Eigen::MatrixBase<Derived>& output_gradient) {
  const std::size_t n = net.layers.size();
  if (tape.inputs.size() != n || tape.preactivations.size() != n)
    throw ArgumentError("backward: tape does not match network");
  const auto& last = tape.outputs.back();
  if (output_gradient.rows() != last.rows() || output_gradient.cols() != last.cols())
    throw ArgumentError("backward: output gradient shape mismatch");

  Gradients<Scalar> g;
  g.weights.resize(n);
  g.bias.resize(n);
  MatrixX<Scalar> grad = output_gradient;
  for (std::size_t i = n; i-- > 0;) {
    const auto& layer = net.layers[i];
    MatrixX<Scalar> dz = activation_backward(layer.activation, tape.preactivations[i], tape.outputs[i], grad);
    g.weights[i].noalias() = tape.inputs[i].transpose() * dz;
    g.bias[i] = dz.colwise().sum().transpose();
    grad.noalias() = dz * layer.weights.transpose();
  }
  g.input = std::move(grad);
  return g;
}

template <typename Scalar>
Gradients<Scalar> zero_gradients(const DenseNet<Scalar>& net) {
  Gradients<Scalar> g;
  for (const auto& l : net.layers) {
    g.weights.push_back(MatrixX<Scalar>::Zero(l.weights.rows(), l.weights.cols()));
    g.bias.push_back(VectorX<Scalar>::Zero(l.bias.size()));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

enum class Optimizer { adam, rmsprop };

template <typename Scalar>
struct OptState {
  Optimizer algo = Optimizer::adam;
  Scalar learning_rate = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);    // adam
  Scalar beta2 = Scalar(0.999);  // adam
  Scalar decay = Scalar(0.9);    // rmsprop
  Scalar epsilon = Scalar(1e-8);
  std::int64_t step = 0;
  std::vector<MatrixX<Scalar>> m_weights, v_weights;
  std::vector<VectorX<Scalar>> m_bias, v_bias;
};

template <typename Scalar>
OptState<Scalar> make_optimizer(const DenseNet<Scalar>& net, Optimizer algo, Scalar learning_rate) {
  OptState<Scalar> s;
  s.algo = algo;
  s.learning_rate = learning_rate;
  for (const auto& l : net.layers) {
    s.m_weights.push_back(MatrixX<Scalar>::Zero(l.weights.rows(), l.weights.cols()));
    s.v_weights.push_back(MatrixX<Scalar>::Zero(l.weights.rows(), l.weights.cols()));
    s.m_bias.push_back(VectorX<Scalar>::Zero(l.bias.size()));
    s.v_bias.push_back(VectorX<Scalar>::Zero(l.bias.size()));
  }
  return s;
}

namespace detail {

template <typename Scalar, typename P, typename G, typename M>
void update_tensor(OptState<Scalar>& s, P& param, const G& grad, M& m, M& v, Scalar bc1, Scalar bc2) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols())
    throw ArgumentError("opt_step: gradient shape mismatch");
  if (s.algo == Optimizer::adam) {
    m = s.beta1 * m + (Scalar(1) - s.beta1) * grad;
    v = s.beta2 * v + (Scalar(1) - s.beta2) * grad.cwiseAbs2();
    param.array() -= s.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + s.epsilon);
  } else {
    v = s.decay * v + (Scalar(1) - s.decay) * grad.cwiseAbs2();
    param.array() -= s.learning_rate * grad.array() / (v.array().sqrt() + s.epsilon);
  }
}

}  // namespace detail

/// One optimizer update. Adam uses bias-corrected moments; RMSProp divides
/// by the root of the running mean square.
template <typename Scalar>
void opt_step(DenseNet<Scalar>& net, const Gradients<Scalar>& grads, OptState<Scalar>& state) {
  if (grads.weights.size() != net.layers.size() || state.m_weights.size() != net.layers.size())
    throw ArgumentError("opt_step: layer count mismatch");
  ++state.step;
  const Scalar bc1 = Scalar(1) - std::pow(state.beta1, static_cast<Scalar>(state.step));
  const Scalar bc2 = Scalar(1) - std::pow(state.beta2, static_cast<Scalar>(state.step));
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    detail::update_tensor(state, net.layers[i].weights, grads.weights[i], state.m_weights[i],
                          state.v_weights[i], bc1, bc2);
    detail::update_tensor(state, net.layers[i].bias, grads.bias[i], state.m_bias[i], state.v_bias[i], bc1,
                          bc2);
  }
}

/// Clamps every weight and bias into [-limit, limit].
template <typename Scalar>
void clip_parameters(DenseNet<Scalar>& net, Scalar limit) {
  for (auto& l : net.layers) {
    l.weights = l.weights.cwiseMax(-limit).cwiseMin(limit);
    l.bias = l.bias.cwiseMax(-limit).cwiseMin(limit);
  }
}

template <typename Scalar>
Scalar max_abs_parameter(const DenseNet<Scalar>& net) {
  Scalar m = 0;
  for (const auto& l : net.layers) {
    if (l.weights.size() > 0) m = std::max(m, l.weights.cwiseAbs().maxCoeff());
    if (l.bias.size() > 0) m = std::max(m, l.bias.cwiseAbs().maxCoeff());
  }
  return m;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

/// Doubles are written with max_digits10, so the JSON round-trip is exact.
template <typename Scalar>
nlohmann::json to_json(const DenseNet<Scalar>& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers) {
    std::vector<double> w;
    w.reserve(l.weights.size());
    for (Eigen::Index i = 0; i < l.weights.rows(); ++i)
      for (Eigen::Index j = 0; j < l.weights.cols(); ++j) w.push_back(static_cast<double>(l.weights(i, j)));
    std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
    layers.push_back({{"in", l.fan_in()},
                      {"out", l.fan_out()},
                      {"activation", to_string(l.activation)},
                      {"weights", std::move(w)},
                      {"bias", std::move(b)}});
  }
  return {{"format", "idslab-densenet"}, {"version", 1}, {"layers", std::move(layers)}};
}

template <typename Scalar = double>
DenseNet<Scalar> from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "idslab-densenet" || j.value("version", 0) != 1)
    throw ArgumentError("not an idslab-densenet v1 document");
  DenseNet<Scalar> net;
  for (const auto& jl : j.at("layers")) {
    Layer<Scalar> l;
    auto in = jl.at("in").get<Eigen::Index>();
    auto out = jl.at("out").get<Eigen::Index>();
    auto w = jl.at("weights").get<std::vector<double>>();
    auto b = jl.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != in * out || static_cast<Eigen::Index>(b.size()) != out)
      throw ArgumentError("densenet checkpoint: parameter count mismatch");
    l.weights.resize(in, out);
    for (Eigen::Index r = 0; r < in; ++r)
      for (Eigen::Index c = 0; c < out; ++c) l.weights(r, c) = static_cast<Scalar>(w[r * out + c]);
    l.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), out).cast<Scalar>();
    l.activation = activation_from_string(jl.at("activation").get<std::string>());
    if (!net.layers.empty() && net.layers.back().fan_out() != in)
      throw ArgumentError("densenet checkpoint: layer dimensions do not chain");
    net.layers.push_back(std::move(l));
  }
  return net;
}

}  // namespace idslab::nn
