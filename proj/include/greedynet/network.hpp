// Dense layers, the MLP forward/backward passes, SGD updates and the
// arithmetic-operation accounting used to check training-cost claims.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "greedynet/matrix.hpp"
#include "greedynet/rng.hpp"

namespace greedynet {

/// Counts of fundamental arithmetic operations.
///
/// Counting convention (fixed, so exact-match tests are meaningful):
///  - `macs`: one per weight-matrix entry (bias column excluded) touched by a
///    pass. A multiply-accumulate in a matrix-vector product is one op, and
///    so is a gradient-and-update of one weight entry.
///  - `adds`: one per bias add, bias update, or residual subtraction.
///  - `mults`: one per element-wise product or scaled accumulate.
///  - `activations`: one per tanh evaluation.
/// Under this convention one autoencoder SGD example costs exactly
/// 5*d1*d2 + 3*d1 + 5*d2 operations; see ae_ops_per_example().
struct OpCounter {
  std::uint64_t macs = 0;
  std::uint64_t adds = 0;
  std::uint64_t mults = 0;
  std::uint64_t activations = 0;

  std::uint64_t total() const noexcept { return macs + adds + mults + activations; }

  OpCounter& operator+=(const OpCounter& o) noexcept {
    macs += o.macs;
    adds += o.adds;
    mults += o.mults;
    activations += o.activations;
    return *this;
  }
  friend bool operator==(const OpCounter&, const OpCounter&) = default;
};

/// Operations for one autoencoder SGD example, d1 -> d2 (tanh) -> d1 (linear).
constexpr std::uint64_t ae_ops_per_example(std::uint64_t d1, std::uint64_t d2) {
  if (d1 < 1 || d2 < 1) throw std::invalid_argument("ae_ops_per_example: dimensions must be >= 1");
  return 5 * d1 * d2 + 3 * d1 + 5 * d2;
}

/// Weight matrix of one dense layer, d_out x (d_in + 1). The last column is
/// the bias; inputs are implicitly extended with a constant 1.
struct LayerWeights {
  Matrix W;

  LayerWeights() = default;
  explicit LayerWeights(Matrix w) : W(std::move(w)) {
    if (W.cols() < 1) throw std::invalid_argument("LayerWeights: matrix needs a bias column");
  }
  LayerWeights(std::size_t d_out, std::size_t d_in) : W(d_out, d_in + 1) {}

  std::size_t d_in() const noexcept { return W.cols() - 1; }
  std::size_t d_out() const noexcept { return W.rows(); }
  double& bias(std::size_t r) noexcept { return W(r, W.cols() - 1); }
  double bias(std::size_t r) const noexcept { return W(r, W.cols() - 1); }

  friend bool operator==(const LayerWeights&, const LayerWeights&) = default;
};

/// Entries uniform in [-1/sqrt(d_in+1), 1/sqrt(d_in+1)], deterministic in seed.
inline LayerWeights init_weights(std::size_t d_out, std::size_t d_in, std::uint64_t seed) {
  if (d_out < 1 || d_in < 1) throw std::invalid_argument("init_weights: dimensions must be >= 1");
  LayerWeights lw(d_out, d_in);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_in + 1));
  Rng rng(seed);
  for (double& w : lw.W.values()) w = rng.uniform(-bound, bound);
  return lw;
}

/// W * [x; 1] without activation.
inline Vector affine(const LayerWeights& lw, std::span<const double> x) {
  require_size(x.size(), lw.d_in(), "affine");
  const std::size_t d_in = lw.d_in();
  Vector z(lw.d_out());
  for (std::size_t r = 0; r < lw.d_out(); ++r) {
    auto w = lw.W.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < d_in; ++c) s += w[c] * x[c];
    z[r] = s + w[d_in];
  }
  return z;
}

/// tanh(W * [x; 1]) element-wise.
inline Vector layer_forward(const LayerWeights& lw, std::span<const double> x) {
  Vector z = affine(lw, x);
  for (double& v : z) v = std::tanh(v);
  return z;
}

/// In-place softmax with max subtraction.
inline void softmax_inplace(std::span<double> z) {
  if (z.empty()) return;
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

enum class OutputHead {
  linear,
  softmax,
  /// Every layer is tanh; used for stacks of pre-trained hidden layers.
  tanh,
};

enum class LossKind { squared, cross_entropy };

inline const char* to_string(OutputHead h) {
  switch (h) {
    case OutputHead::linear: return "linear";
    case OutputHead::softmax: return "softmax";
    case OutputHead::tanh: return "tanh";
  }
  return "?";
}

inline OutputHead output_head_from_string(const std::string& s) {
  if (s == "linear") return OutputHead::linear;
  if (s == "softmax") return OutputHead::softmax;
  if (s == "tanh") return OutputHead::tanh;
  throw std::invalid_argument("unknown output head: " + s);
}

/// Feed-forward network: tanh on every hidden layer, `head` on the last.
struct Mlp {
  std::vector<LayerWeights> layers;
  OutputHead head = OutputHead::linear;

  std::size_t input_dim() const { return layers.front().d_in(); }
  std::size_t output_dim() const { return layers.back().d_out(); }

  /// Throws unless the stack is non-empty and consecutive shapes chain.
  void validate() const {
    if (layers.empty()) throw std::invalid_argument("Mlp: at least one layer required");
    for (std::size_t l = 1; l < layers.size(); ++l)
      if (layers[l].d_in() != layers[l - 1].d_out())
        throw std::invalid_argument("Mlp: layer " + std::to_string(l) + " input width " +
                                    std::to_string(layers[l].d_in()) + " does not match previous output " +
                                    std::to_string(layers[l - 1].d_out()));
  }

  friend bool operator==(const Mlp&, const Mlp&) = default;
};

/// Activations of every layer. Entry 0 is the input itself, the last entry
/// is the network output.
inline std::vector<Vector> forward(const Mlp& mlp, std::span<const double> x) {
  mlp.validate();
  require_size(x.size(), mlp.input_dim(), "forward");
  std::vector<Vector> acts;
  acts.reserve(mlp.layers.size() + 1);
  acts.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    Vector z = affine(mlp.layers[l], acts.back());
    const bool last = l + 1 == mlp.layers.size();
    if (!last || mlp.head == OutputHead::tanh) {
      for (double& v : z) v = std::tanh(v);
    } else if (mlp.head == OutputHead::softmax) {
      softmax_inplace(z);
    }
    acts.push_back(std::move(z));
  }
  return acts;
}

inline Vector predict(const Mlp& mlp, std::span<const double> x) { return forward(mlp, x).back(); }

/// ||x - xhat||^2
inline double reconstruction_loss(std::span<const double> x, std::span<const double> xhat) {
  require_size(xhat.size(), x.size(), "reconstruction_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - xhat[i];
    s += d * d;
  }
  return s;
}

/// Per-example loss of the network output against `target`.
inline double example_loss(const Mlp& mlp, std::span<const double> x, std::span<const double> target, LossKind kind) {
  Vector y = predict(mlp, x);
  require_size(target.size(), y.size(), "example_loss");
  if (kind == LossKind::squared) return reconstruction_loss(target, y);
  double s = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k)
    if (target[k] != 0.0) s -= target[k] * std::log(std::max(y[k], 1e-300));
  return s;
}

/// Exact gradient of the per-example loss with respect to every weight,
/// one matrix per layer with the layer's shape. Squared loss is the
/// unaveraged ||y - t||^2; cross-entropy requires a softmax head.
inline std::vector<Matrix> backprop(const Mlp& mlp, std::span<const double> x, std::span<const double> target,
                                    LossKind kind) {
  if (kind == LossKind::cross_entropy && mlp.head != OutputHead::softmax)
    throw std::invalid_argument("backprop: cross-entropy loss requires a softmax head");
  auto acts = forward(mlp, x);
  const Vector& y = acts.back();
  require_size(target.size(), y.size(), "backprop target");

  // delta = dLoss / d(pre-activation of the current layer)
  Vector delta(y.size());
  if (kind == LossKind::cross_entropy) {
    double tsum = 0.0;
    for (double t : target) tsum += t;
    for (std::size_t k = 0; k < y.size(); ++k) delta[k] = y[k] * tsum - target[k];
  } else {
    Vector g(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) g[k] = 2.0 * (y[k] - target[k]);
    switch (mlp.head) {
      case OutputHead::linear: delta = g; break;
      case OutputHead::tanh:
        for (std::size_t k = 0; k < y.size(); ++k) delta[k] = g[k] * (1.0 - y[k] * y[k]);
        break;
      case OutputHead::softmax: {
        double gp = 0.0;
        for (std::size_t k = 0; k < y.size(); ++k) gp += g[k] * y[k];
        for (std::size_t k = 0; k < y.size(); ++k) delta[k] = y[k] * (g[k] - gp);
        break;
      }
    }
  }

  std::vector<Matrix> grads(mlp.layers.size());
  for (std::size_t l = mlp.layers.size(); l-- > 0;) {
    const LayerWeights& lw = mlp.layers[l];
    const Vector& in = acts[l];
    const std::size_t d_in = lw.d_in();
    Matrix g(lw.d_out(), d_in + 1);
    for (std::size_t r = 0; r < lw.d_out(); ++r) {
      for (std::size_t c = 0; c < d_in; ++c) g(r, c) = delta[r] * in[c];
      g(r, d_in) = delta[r];
    }
    grads[l] = std::move(g);
    if (l == 0) break;
    Vector prev(d_in, 0.0);
    for (std::size_t r = 0; r < lw.d_out(); ++r)
      for (std::size_t c = 0; c < d_in; ++c) prev[c] += lw.W(r, c) * delta[r];
    for (std::size_t c = 0; c < d_in; ++c) prev[c] *= 1.0 - in[c] * in[c];
    delta = std::move(prev);
  }
  return grads;
}

/// Weight-decay coefficient applied per update for an L2 penalty lambda
/// spread over n_train examples.
inline double decay_rate(double lambda, std::size_t n_train) {
  return n_train == 0 ? 0.0 : 2.0 * lambda / static_cast<double>(n_train);
}

/// w <- w - lr * (g + decay * w). With decay == 0 this is w - lr * g exactly.
inline void apply_update(double& w, double g, double lr, double decay) noexcept { w -= lr * (g + decay * w); }

/// w <- w - lr * g, for bias entries (never decayed).
inline void apply_bias_update(double& w, double g, double lr) noexcept { w -= lr * g; }

/// W' = W - lr * (grad + (2 lambda / n_train) * W); the bias column is not decayed.
inline LayerWeights sgd_update(const LayerWeights& lw, const Matrix& grad, double lr, double lambda,
                               std::size_t n_train) {
  require_size(grad.rows(), lw.W.rows(), "sgd_update rows");
  require_size(grad.cols(), lw.W.cols(), "sgd_update cols");
  LayerWeights out = lw;
  const double decay = decay_rate(lambda, n_train);
  const std::size_t d_in = lw.d_in();
  for (std::size_t r = 0; r < out.d_out(); ++r) {
    for (std::size_t c = 0; c < d_in; ++c) apply_update(out.W(r, c), grad(r, c), lr, decay);
    apply_bias_update(out.W(r, d_in), grad(r, d_in), lr);
  }
  return out;
}

/// One counted SGD step on the squared loss of a two-layer net
/// x -> tanh(hidden) -> linear(head), updating both layers in place.
/// For an autoencoder (target == x) the counter grows by exactly
/// ae_ops_per_example(d_in, d_hidden).
class TwoLayerStep {
 public:
  TwoLayerStep(std::size_t d_in, std::size_t d_hidden, std::size_t d_out)
      : h_(d_hidden), s_(d_hidden), r_(d_out), d_in_(d_in) {}

  void operator()(LayerWeights& hidden, LayerWeights& head, std::span<const double> x,
                  std::span<const double> target, double lr, double decay, OpCounter* ops) {
    const std::size_t d1 = d_in_, d2 = h_.size(), d3 = r_.size();

    for (std::size_t j = 0; j < d2; ++j) {
      auto w = hidden.W.row(j);
      double z = 0.0;
      for (std::size_t i = 0; i < d1; ++i) z += w[i] * x[i];
      h_[j] = std::tanh(z + w[d1]);
    }
    for (std::size_t k = 0; k < d3; ++k) {
      auto w = head.W.row(k);
      double y = 0.0;
      for (std::size_t j = 0; j < d2; ++j) y += w[j] * h_[j];
      r_[k] = (y + w[d2]) - target[k];
    }

    // Head: back-propagate through the pre-update weights, then update them.
    std::fill(s_.begin(), s_.end(), 0.0);
    for (std::size_t k = 0; k < d3; ++k) {
      auto w = head.W.row(k);
      const double delta = 2.0 * r_[k];
      for (std::size_t j = 0; j < d2; ++j) {
        s_[j] += w[j] * delta;
        apply_update(w[j], delta * h_[j], lr, decay);
      }
      apply_bias_update(w[d2], delta, lr);
    }

    for (std::size_t j = 0; j < d2; ++j) {
      const double delta = s_[j] * (1.0 - h_[j] * h_[j]);
      auto w = hidden.W.row(j);
      for (std::size_t i = 0; i < d1; ++i) apply_update(w[i], delta * x[i], lr, decay);
      apply_bias_update(w[d1], delta, lr);
    }

    if (ops) {
      // forward: encoder MACs, hidden bias, tanh; decoder MACs, output bias
      ops->macs += d1 * d2 + d2 * d3;
      ops->adds += d2 + d3;
      ops->activations += d2;
      // backward: residual, head backprop + update, output-bias update,
      // tanh derivative and product, encoder update, hidden-bias update
      ops->adds += d3;
      ops->macs += 2 * d2 * d3;
      ops->adds += d3;
      ops->mults += 2 * d2;
      ops->macs += d1 * d2;
      ops->adds += d2;
    }
  }

 private:
  Vector h_, s_, r_;
  std::size_t d_in_;
};

/// Tanh codes of every row of `inputs` through one layer.
inline Matrix layer_codes(const LayerWeights& lw, const Matrix& inputs, OpCounter* ops = nullptr) {
  require_size(inputs.cols(), lw.d_in(), "layer_codes");
  Matrix out(inputs.rows(), lw.d_out());
  for (std::size_t n = 0; n < inputs.rows(); ++n) {
    Vector h = layer_forward(lw, inputs.row(n));
    std::copy(h.begin(), h.end(), out.row(n).begin());
  }
  if (ops) {
    ops->macs += inputs.rows() * lw.d_in() * lw.d_out();
    ops->adds += inputs.rows() * lw.d_out();
    ops->activations += inputs.rows() * lw.d_out();
  }
  return out;
}

}  // namespace greedynet
