// Node-by-node greedy pre-training (GN unsupervised, GCN class-guided).
//
// A layer d1 -> d2 (tanh) -> d1 (linear) is trained one hidden node at a
// time. Node i sees only its data subset S_i. The linear output layer
// makes node contributions additive, so the summed output of the already
// trained nodes is stored per example in a running output R; node i then
// trains against
//
//     O_B = A * R[x] + w_out_i * tanh(w_in_i . [x; 1])
//
// where A in [0, 1] is the amnesia factor. After node i is trained it is
// frozen and one forward pass over all N examples adds its contribution to
// R. Per layer this costs O(N E d1 + N d1 d2) instead of O(N E d1 d2).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "greedynet/dataset.hpp"
#include "greedynet/matrix.hpp"
#include "greedynet/network.hpp"
#include "greedynet/pretrain_layerwise.hpp"
#include "greedynet/rng.hpp"

namespace greedynet {

struct GreedyConfig {
  double amnesia = 0.4;
  int epochs = 300;
  double lr = 0.001;
  double lambda = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(amnesia >= 0.0 && amnesia <= 1.0)) throw std::invalid_argument("greedy: amnesia must lie in [0, 1]");
    if (epochs < 1) throw std::invalid_argument("greedy: epochs must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("greedy: lr must be > 0");
    if (lambda < 0.0) throw std::invalid_argument("greedy: lambda must be >= 0");
  }
};

enum class GreedyMode { GN, GCN };

/// Training subsets S_1..S_{d2}, one per hidden node (0-based here).
struct NodeAssignment {
  std::vector<std::vector<std::size_t>> subsets;

  std::size_t nodes() const noexcept { return subsets.size(); }
  friend bool operator==(const NodeAssignment&, const NodeAssignment&) = default;
};

/// Weights of a layer under node-wise training. Row i of `encoder` holds the
/// input weights of node i; column i of `decoder` holds its output weights
/// and the last decoder column is the shared output bias.
struct GreedyLayerState {
  LayerWeights encoder;
  LayerWeights decoder;

  static GreedyLayerState init(std::size_t d1, std::size_t d2, std::uint64_t seed) {
    return {init_weights(d2, d1, derive_seed(seed, "encoder")), init_weights(d1, d2, derive_seed(seed, "decoder"))};
  }

  std::size_t d1() const noexcept { return encoder.d_in(); }
  std::size_t d2() const noexcept { return encoder.d_out(); }
};

/// Accumulated output-layer signal of the already trained nodes, one row per
/// training example. The output bias enters with the first accumulated node.
class RunningOutput {
 public:
  RunningOutput(std::size_t n, std::size_t d1, std::size_t d2) : values_(n, d1), done_(d2, false) {}

  const Matrix& values() const noexcept { return values_; }
  std::span<const double> row(std::size_t n) const noexcept { return values_.row(n); }
  bool accumulated(std::size_t node) const { return done_.at(node); }
  bool empty() const noexcept { return !bias_included_; }
  std::size_t nodes() const noexcept { return done_.size(); }

 private:
  friend void accumulate_output(RunningOutput&, const GreedyLayerState&, std::size_t, const Matrix&, OpCounter*);

  Matrix values_;
  std::vector<bool> done_;
  bool bias_included_ = false;
};

/// Per-example gradient of ||x - O_B||^2 with respect to the weights of one node.
struct NodeGradient {
  Vector input;   // d1 + 1 entries, last is the hidden bias
  Vector output;  // d1 entries
  Vector bias;    // d1 entries when the node learns the output bias, else empty
};

/// Seed of the example-order stream of one node.
inline std::uint64_t node_seed(std::uint64_t layer_seed, std::size_t node) {
  return derive_seed(derive_seed(layer_seed, "node"), node);
}

/// Gradient of the amnesia-blended reconstruction loss for node `node` on
/// one example. `running` is that example's row of R, or empty when no node
/// has been accumulated yet; in that case the node also learns the output
/// bias and O_B = w_out * h + b.
inline void node_gradient(const GreedyLayerState& st, std::size_t node, std::span<const double> x,
                          std::span<const double> running, double amnesia, NodeGradient& g,
                          OpCounter* ops = nullptr) {
  const std::size_t d1 = st.d1();
  const std::size_t d2 = st.d2();
  const bool learn_bias = running.empty();
  const Matrix& out_w = st.decoder.W;
  auto in_w = st.encoder.W.row(node);

  double z = 0.0;
  for (std::size_t c = 0; c < d1; ++c) z += in_w[c] * x[c];
  const double h = std::tanh(z + in_w[d1]);

  g.input.resize(d1 + 1);
  g.output.resize(d1);
  g.bias.resize(learn_bias ? d1 : 0);
  double s = 0.0;
  for (std::size_t k = 0; k < d1; ++k) {
    const double o = out_w(k, node) * h;
    const double blended = learn_bias ? o + out_w(k, d2) : amnesia * running[k] + o;
    const double delta = 2.0 * (blended - x[k]);
    g.output[k] = delta * h;
    if (learn_bias) g.bias[k] = delta;
    s += out_w(k, node) * delta;
  }
  const double hidden_delta = s * (1.0 - h * h);
  for (std::size_t c = 0; c < d1; ++c) g.input[c] = hidden_delta * x[c];
  g.input[d1] = hidden_delta;

  if (ops) {
    ops->macs += 3 * d1;  // encoder dot, output product, back-propagated sum
    ops->adds += 1;
    ops->activations += 1;
    if (learn_bias) ops->adds += d1;  // output bias
    else ops->mults += d1;            // amnesia-scaled running output
    ops->adds += d1;                  // residual
    ops->mults += 2;                  // tanh derivative and product
  }
}

/// Applies one SGD step of `g` to node `node`; other nodes are untouched.
inline void apply_node_gradient(GreedyLayerState& st, std::size_t node, const NodeGradient& g, double lr,
                                double decay, OpCounter* ops = nullptr) {
  const std::size_t d1 = st.d1();
  const std::size_t d2 = st.d2();
  for (std::size_t k = 0; k < d1; ++k) apply_update(st.decoder.W(k, node), g.output[k], lr, decay);
  if (!g.bias.empty())
    for (std::size_t k = 0; k < d1; ++k) apply_bias_update(st.decoder.W(k, d2), g.bias[k], lr);
  auto in_w = st.encoder.W.row(node);
  for (std::size_t c = 0; c < d1; ++c) apply_update(in_w[c], g.input[c], lr, decay);
  apply_bias_update(in_w[d1], g.input[d1], lr);
  if (ops) {
    ops->macs += 2 * d1;
    ops->adds += 1 + g.bias.size();
  }
}

/// Trains node `node` for cfg.epochs passes over `subset` (reshuffled every
/// epoch from the node's seed). Requires every earlier node to be
/// accumulated into R and this one not yet. The first node of a layer
/// (R still empty) also learns the output bias. Returns the number of SGD
/// example visits.
inline std::size_t train_node(std::size_t node, std::span<const std::size_t> subset, const Matrix& inputs,
                              const RunningOutput& running, GreedyLayerState& st, const GreedyConfig& cfg,
                              OpCounter* ops = nullptr) {
  cfg.validate();
  if (node >= st.d2()) throw std::out_of_range("train_node: node index out of range");
  if (subset.empty()) throw std::invalid_argument("train_node: node " + std::to_string(node) + " has no training data");
  require_size(inputs.cols(), st.d1(), "train_node inputs");
  require_size(running.values().rows(), inputs.rows(), "train_node running output");
  if (running.accumulated(node)) throw std::logic_error("train_node: node already frozen");
  for (std::size_t j = 0; j < node; ++j)
    if (!running.accumulated(j))
      throw std::logic_error("train_node: node " + std::to_string(j) + " not accumulated before node " +
                             std::to_string(node));

  std::vector<std::size_t> order(subset.begin(), subset.end());
  Rng rng(node_seed(cfg.seed, node));
  const double decay = decay_rate(cfg.lambda, inputs.rows());
  const bool first = running.empty();
  NodeGradient g;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t n : order) {
      node_gradient(st, node, inputs.row(n), first ? std::span<const double>{} : running.row(n), cfg.amnesia, g, ops);
      apply_node_gradient(st, node, g, cfg.lr, decay, ops);
    }
  }
  return order.size() * static_cast<std::size_t>(cfg.epochs);
}

/// Trains the first node of a GN layer on all examples; it learns the
/// global feature and the output bias.
inline std::size_t train_seed_node(const Matrix& inputs, const RunningOutput& running, GreedyLayerState& st,
                                   const GreedyConfig& cfg, OpCounter* ops = nullptr) {
  if (inputs.rows() == 0) throw std::invalid_argument("train_seed_node: no examples");
  std::vector<std::size_t> all(inputs.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return train_node(0, all, inputs, running, st, cfg, ops);
}

/// R[n] += w_out_i * tanh(w_in_i . [x_n; 1]) for every example n. The output
/// bias is added together with the first accumulated node. Each node may be
/// accumulated once.
inline void accumulate_output(RunningOutput& running, const GreedyLayerState& st, std::size_t node,
                              const Matrix& inputs, OpCounter* ops = nullptr) {
  if (node >= running.done_.size()) throw std::out_of_range("accumulate_output: node index out of range");
  if (running.done_[node]) throw std::logic_error("accumulate_output: node " + std::to_string(node) + " already accumulated");
  require_size(inputs.rows(), running.values_.rows(), "accumulate_output rows");
  require_size(inputs.cols(), st.d1(), "accumulate_output inputs");
  const std::size_t d1 = st.d1();
  const std::size_t d2 = st.d2();
  const bool add_bias = !running.bias_included_;
  auto in_w = st.encoder.W.row(node);
  for (std::size_t n = 0; n < inputs.rows(); ++n) {
    auto x = inputs.row(n);
    double z = 0.0;
    for (std::size_t c = 0; c < d1; ++c) z += in_w[c] * x[c];
    const double h = std::tanh(z + in_w[d1]);
    auto r = running.values_.row(n);
    for (std::size_t k = 0; k < d1; ++k) {
      r[k] += st.decoder.W(k, node) * h;
      if (add_bias) r[k] += st.decoder.W(k, d2);
    }
  }
  running.done_[node] = true;
  running.bias_included_ = true;
  if (ops) {
    const std::uint64_t n = inputs.rows();
    ops->macs += n * d1;
    ops->adds += n;
    ops->activations += n;
    ops->mults += n * d1;
    if (add_bias) ops->adds += n * d1;
  }
}

/// Indices sorted by ascending reconstruction error ||x - (w_out h + b)||^2
/// of node 0 alone; ties keep the original order.
inline std::vector<std::size_t> rank_by_reconstruction_error(const Matrix& inputs, const GreedyLayerState& st,
                                                             OpCounter* ops = nullptr) {
  require_size(inputs.cols(), st.d1(), "rank_by_reconstruction_error");
  const std::size_t d1 = st.d1();
  const std::size_t d2 = st.d2();
  std::vector<double> err(inputs.rows());
  auto in_w = st.encoder.W.row(0);
  for (std::size_t n = 0; n < inputs.rows(); ++n) {
    auto x = inputs.row(n);
    double z = 0.0;
    for (std::size_t c = 0; c < d1; ++c) z += in_w[c] * x[c];
    const double h = std::tanh(z + in_w[d1]);
    double e = 0.0;
    for (std::size_t k = 0; k < d1; ++k) {
      const double diff = x[k] - (st.decoder.W(k, 0) * h + st.decoder.W(k, d2));
      e += diff * diff;
    }
    err[n] = e;
  }
  std::vector<std::size_t> perm(inputs.rows());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return err[a] < err[b]; });
  if (ops) {
    const std::uint64_t n = inputs.rows();
    ops->macs += n * 2 * d1;
    ops->adds += n * (1 + 2 * d1);
    ops->activations += n;
    ops->mults += n * d1;
  }
  return perm;
}

/// GN distribution: node 0 keeps all indices; the ranked list is cut into
/// d2-1 contiguous blocks for nodes 1..d2-1. Block sizes differ by at most
/// one, with the larger blocks first.
inline NodeAssignment distribute_gn(std::span<const std::size_t> ranked, std::size_t d2) {
  if (d2 < 2) throw std::invalid_argument("distribute_gn: d2 must be >= 2");
  NodeAssignment a;
  a.subsets.resize(d2);
  a.subsets[0].resize(ranked.size());
  std::iota(a.subsets[0].begin(), a.subsets[0].end(), std::size_t{0});
  const std::size_t blocks = d2 - 1;
  const std::size_t base = ranked.size() / blocks;
  const std::size_t extra = ranked.size() % blocks;
  std::size_t pos = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t len = base + (b < extra ? 1 : 0);
    a.subsets[b + 1].assign(ranked.begin() + static_cast<std::ptrdiff_t>(pos),
                            ranked.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return a;
}

/// Class owning node `node` under round-robin allocation.
inline int gcn_node_class(std::size_t node, int class_count) {
  return static_cast<int>(node % static_cast<std::size_t>(class_count));
}

/// GCN distribution: node j serves class j mod c, so each class owns
/// floor(d2/c) or ceil(d2/c) nodes. Each class's examples are shuffled by
/// seed and split evenly among its nodes, larger slices first.
inline NodeAssignment distribute_gcn(std::span<const int> labels, std::size_t d2, int class_count,
                                     std::uint64_t seed) {
  if (class_count < 1) throw std::invalid_argument("distribute_gcn: class count must be >= 1");
  const auto c = static_cast<std::size_t>(class_count);
  if (d2 < c)
    throw std::invalid_argument("distribute_gcn: layer width " + std::to_string(d2) + " is smaller than class count " +
                                std::to_string(c));
  std::vector<std::vector<std::size_t>> members(c);
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] < 0 || labels[n] >= class_count) throw std::invalid_argument("distribute_gcn: label out of range");
    members[static_cast<std::size_t>(labels[n])].push_back(n);
  }
  NodeAssignment a;
  a.subsets.resize(d2);
  for (std::size_t cls = 0; cls < c; ++cls) {
    std::vector<std::size_t> nodes;
    for (std::size_t j = cls; j < d2; j += c) nodes.push_back(j);
    auto& m = members[cls];
    Rng rng(derive_seed(derive_seed(seed, "gcn"), cls));
    rng.shuffle(std::span<std::size_t>(m));
    const std::size_t base = m.size() / nodes.size();
    const std::size_t extra = m.size() % nodes.size();
    std::size_t pos = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const std::size_t len = base + (k < extra ? 1 : 0);
      a.subsets[nodes[k]].assign(m.begin() + static_cast<std::ptrdiff_t>(pos),
                                 m.begin() + static_cast<std::ptrdiff_t>(pos + len));
      pos += len;
    }
  }
  return a;
}

struct GreedyLayerResult {
  LayerWeights layer;
  LayerWeights decoder;
  Matrix codes;
  NodeAssignment assignment;
  /// SGD example visits per node.
  std::vector<std::size_t> visits;
};

/// Called after node `node` has been trained and accumulated.
using NodeObserver = std::function<void(std::size_t node, const GreedyLayerState& state, const RunningOutput& running)>;

/// Trains one layer node by node. GN: seed node on all data, rank by its
/// reconstruction error, then nodes 1..d2-1 on contiguous rank blocks.
/// GCN: class-dedicated subsets, nodes trained in order. Labels are required
/// for GCN and ignored for GN.
inline GreedyLayerResult greedy_pretrain_layer(const Matrix& inputs, std::span<const int> labels, int class_count,
                                               std::size_t d2, const GreedyConfig& cfg, GreedyMode mode,
                                               OpCounter* ops = nullptr, const NodeObserver& observer = {}) {
  cfg.validate();
  if (d2 < 1) throw std::invalid_argument("greedy_pretrain_layer: d2 must be >= 1");
  if (inputs.rows() == 0 || inputs.cols() == 0) throw std::invalid_argument("greedy_pretrain_layer: empty inputs");
  if (mode == GreedyMode::GCN) {
    if (labels.empty()) throw std::invalid_argument("greedy_pretrain_layer: GCN requires labels");
    require_size(labels.size(), inputs.rows(), "greedy_pretrain_layer labels");
  }

  const std::size_t n = inputs.rows();
  auto st = GreedyLayerState::init(inputs.cols(), d2, cfg.seed);
  RunningOutput running(n, inputs.cols(), d2);
  GreedyLayerResult out;
  out.visits.assign(d2, 0);

  auto finish_node = [&](std::size_t node) {
    accumulate_output(running, st, node, inputs, ops);
    if (observer) observer(node, st, running);
  };

  if (mode == GreedyMode::GN) {
    out.visits[0] = train_seed_node(inputs, running, st, cfg, ops);
    finish_node(0);
    if (d2 >= 2) {
      auto ranked = rank_by_reconstruction_error(inputs, st, ops);
      out.assignment = distribute_gn(ranked, d2);
      for (std::size_t i = 1; i < d2; ++i) {
        out.visits[i] = train_node(i, out.assignment.subsets[i], inputs, running, st, cfg, ops);
        finish_node(i);
      }
    } else {
      out.assignment.subsets.assign(1, std::vector<std::size_t>(n));
      std::iota(out.assignment.subsets[0].begin(), out.assignment.subsets[0].end(), std::size_t{0});
    }
  } else {
    out.assignment = distribute_gcn(labels, d2, class_count, cfg.seed);
    for (std::size_t i = 0; i < d2; ++i) {
      out.visits[i] = train_node(i, out.assignment.subsets[i], inputs, running, st, cfg, ops);
      finish_node(i);
    }
  }

  out.codes = layer_codes(st.encoder, inputs, ops);
  out.layer = std::move(st.encoder);
  out.decoder = std::move(st.decoder);
  return out;
}

/// Node-by-node stack; GCN reuses the dataset labels at every layer.
inline Mlp greedy_pretrain_stack(const Dataset& ds, const std::vector<std::size_t>& arch, const GreedyConfig& cfg,
                                 GreedyMode mode, OpCounter* ops = nullptr) {
  cfg.validate();
  if (arch.empty()) throw std::invalid_argument("greedy_pretrain_stack: empty architecture");
  Mlp mlp;
  mlp.head = OutputHead::tanh;
  Matrix inputs = ds.features;
  for (std::size_t l = 0; l < arch.size(); ++l) {
    GreedyConfig layer_cfg = cfg;
    layer_cfg.seed = layer_seed(cfg.seed, l);
    auto layer = greedy_pretrain_layer(inputs, ds.labels, ds.class_count, arch[l], layer_cfg, mode, ops);
    mlp.layers.push_back(std::move(layer.layer));
    inputs = std::move(layer.codes);
  }
  return mlp;
}

}  // namespace greedynet
