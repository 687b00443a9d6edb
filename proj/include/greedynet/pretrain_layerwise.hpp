// Layer-by-layer pre-training baselines: unsupervised autoencoder (USV)
// and supervised encoder (SV) layers, stacked greedily.
#pragma once

#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "greedynet/dataset.hpp"
#include "greedynet/matrix.hpp"
#include "greedynet/network.hpp"
#include "greedynet/rng.hpp"

namespace greedynet {

struct PretrainConfig {
  int epochs = 300;
  double lr = 0.001;
  double lambda = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("pretrain: epochs must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("pretrain: lr must be > 0");
    if (lambda < 0.0) throw std::invalid_argument("pretrain: lambda must be >= 0");
  }
};

enum class LayerwiseMode { SV, USV };

/// Called after every completed epoch with the current hidden and head layers.
using EpochObserver = std::function<void(int epoch, const LayerWeights& hidden, const LayerWeights& head)>;

struct AutoencoderLayer {
  LayerWeights hidden;
  LayerWeights decoder;
  Matrix codes;
};

struct SupervisedLayer {
  LayerWeights hidden;
  Matrix codes;
};

namespace detail {

/// Per-example SGD on x -> tanh -> linear with squared loss against targets.
inline void train_two_layer(const Matrix& inputs, const Matrix& targets, LayerWeights& hidden, LayerWeights& head,
                            const PretrainConfig& cfg, OpCounter* ops, const EpochObserver& observer) {
  const std::size_t n = inputs.rows();
  TwoLayerStep step(inputs.cols(), hidden.d_out(), head.d_out());
  const double decay = decay_rate(cfg.lambda, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(cfg.seed, "order"));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t idx : order) step(hidden, head, inputs.row(idx), targets.row(idx), cfg.lr, decay, ops);
    if (observer) observer(epoch + 1, hidden, head);
  }
}

}  // namespace detail

/// Trains a d1 -> d2 (tanh) -> d1 (linear) autoencoder on the reconstruction
/// loss and returns the encoder, the decoder and the tanh codes of `inputs`.
inline AutoencoderLayer train_autoencoder_layer(const Matrix& inputs, std::size_t d2, const PretrainConfig& cfg,
                                                OpCounter* ops = nullptr, const EpochObserver& observer = {}) {
  cfg.validate();
  if (d2 < 1) throw std::invalid_argument("train_autoencoder_layer: d2 must be >= 1");
  if (inputs.rows() == 0 || inputs.cols() == 0) throw std::invalid_argument("train_autoencoder_layer: empty inputs");
  const std::size_t d1 = inputs.cols();
  AutoencoderLayer out;
  out.hidden = init_weights(d2, d1, derive_seed(cfg.seed, "encoder"));
  out.decoder = init_weights(d1, d2, derive_seed(cfg.seed, "decoder"));
  detail::train_two_layer(inputs, inputs, out.hidden, out.decoder, cfg, ops, observer);
  out.codes = layer_codes(out.hidden, inputs, ops);
  return out;
}

/// Trains d1 -> d2 (tanh) -> c (linear) against one-hot targets with squared
/// loss; keeps the hidden layer and its codes, discards the target head.
inline SupervisedLayer train_supervised_layer(const Matrix& inputs, const Matrix& targets, std::size_t d2,
                                              const PretrainConfig& cfg, OpCounter* ops = nullptr,
                                              const EpochObserver& observer = {}) {
  cfg.validate();
  if (d2 < 1) throw std::invalid_argument("train_supervised_layer: d2 must be >= 1");
  if (inputs.rows() == 0 || inputs.cols() == 0) throw std::invalid_argument("train_supervised_layer: empty inputs");
  require_size(targets.rows(), inputs.rows(), "train_supervised_layer targets");
  if (targets.cols() < 1) throw std::invalid_argument("train_supervised_layer: targets need >= 1 column");
  for (std::size_t r = 0; r < targets.rows(); ++r) {
    int ones = 0;
    for (double v : targets.row(r)) {
      if (v == 1.0) ++ones;
      else if (v != 0.0) ones = -1000;
    }
    if (ones != 1)
      throw std::invalid_argument("train_supervised_layer: target row " + std::to_string(r) + " is not one-hot");
  }
  const std::size_t d1 = inputs.cols();
  LayerWeights hidden = init_weights(d2, d1, derive_seed(cfg.seed, "encoder"));
  LayerWeights head = init_weights(targets.cols(), d2, derive_seed(cfg.seed, "target-head"));
  detail::train_two_layer(inputs, targets, hidden, head, cfg, ops, observer);
  SupervisedLayer out;
  out.codes = layer_codes(hidden, inputs, ops);
  out.hidden = std::move(hidden);
  return out;
}

/// Seed used for hidden layer `layer` of a stack built from `base`.
inline std::uint64_t layer_seed(std::uint64_t base, std::size_t layer) { return derive_seed(base, layer); }

/// Greedy layer-by-layer stack: each layer trains on the previous layer's
/// codes. Returns the hidden layers only (tanh head).
inline Mlp pretrain_stack(const Dataset& ds, const std::vector<std::size_t>& arch, LayerwiseMode mode,
                          const PretrainConfig& cfg, OpCounter* ops = nullptr) {
  cfg.validate();
  if (arch.empty()) throw std::invalid_argument("pretrain_stack: empty architecture");
  Mlp mlp;
  mlp.head = OutputHead::tanh;
  Matrix targets;
  if (mode == LayerwiseMode::SV) targets = one_hot_matrix(ds.labels, ds.class_count);
  Matrix inputs = ds.features;
  for (std::size_t l = 0; l < arch.size(); ++l) {
    PretrainConfig layer_cfg = cfg;
    layer_cfg.seed = layer_seed(cfg.seed, l);
    if (mode == LayerwiseMode::USV) {
      auto layer = train_autoencoder_layer(inputs, arch[l], layer_cfg, ops);
      mlp.layers.push_back(std::move(layer.hidden));
      inputs = std::move(layer.codes);
    } else {
      auto layer = train_supervised_layer(inputs, targets, arch[l], layer_cfg, ops);
      mlp.layers.push_back(std::move(layer.hidden));
      inputs = std::move(layer.codes);
    }
  }
  return mlp;
}

}  // namespace greedynet
