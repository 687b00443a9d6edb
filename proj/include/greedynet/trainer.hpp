// Output classifier, fine-tuning, evaluation and the end-to-end pipeline
// for the four pre-training algorithms.
#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "greedynet/dataset.hpp"
#include "greedynet/network.hpp"
#include "greedynet/pretrain_greedy.hpp"
#include "greedynet/pretrain_layerwise.hpp"
#include "greedynet/rng.hpp"

namespace greedynet {

enum class Algorithm { SV, USV, GN, GCN };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::SV: return "SV";
    case Algorithm::USV: return "USV";
    case Algorithm::GN: return "GN";
    case Algorithm::GCN: return "GCN";
  }
  return "?";
}

/// Accepts "sv", "USV", "gn", ... (case-insensitive).
inline Algorithm algorithm_from_string(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (s == "SV") return Algorithm::SV;
  if (s == "USV") return Algorithm::USV;
  if (s == "GN") return Algorithm::GN;
  if (s == "GCN") return Algorithm::GCN;
  throw std::invalid_argument("unknown algorithm: " + s);
}

inline bool is_greedy(Algorithm a) { return a == Algorithm::GN || a == Algorithm::GCN; }

struct PipelineConfig {
  Algorithm algorithm = Algorithm::GN;
  std::vector<std::size_t> arch;
  /// Pre-training epochs, lr and lambda; `amnesia` applies to GN/GCN only.
  PretrainConfig pretrain;
  double amnesia = 0.4;
  int classifier_iters = 500;
  double classifier_lr = 0.002;
  int finetune_iters = 20;
  double finetune_lr = 0.001;
  std::uint64_t seed = 0;

  GreedyConfig greedy() const {
    return {amnesia, pretrain.epochs, pretrain.lr, pretrain.lambda, derive_seed(seed, "pretrain")};
  }
  PretrainConfig layerwise() const {
    PretrainConfig p = pretrain;
    p.seed = derive_seed(seed, "pretrain");
    return p;
  }

  void validate(int class_count) const {
    if (arch.empty()) throw std::invalid_argument("pipeline: empty architecture");
    for (auto w : arch)
      if (w < 1) throw std::invalid_argument("pipeline: layer widths must be >= 1");
    if (algorithm == Algorithm::GCN)
      for (auto w : arch)
        if (w < static_cast<std::size_t>(class_count))
          throw std::invalid_argument("pipeline: GCN layer width " + std::to_string(w) + " < class count " +
                                      std::to_string(class_count));
    if (is_greedy(algorithm)) greedy().validate();
    else pretrain.validate();
    if (classifier_iters < 0 || finetune_iters < 0) throw std::invalid_argument("pipeline: iteration counts must be >= 0");
    if (!(classifier_lr > 0.0) || !(finetune_lr > 0.0)) throw std::invalid_argument("pipeline: learning rates must be > 0");
  }
};

/// Multinomial logistic regression on frozen codes: softmax + cross-entropy,
/// per-example SGD for `iters` epochs.
inline LayerWeights train_output_classifier(const Matrix& codes, std::span<const int> labels, int class_count,
                                            int iters, double lr, double lambda, std::uint64_t seed) {
  if (class_count < 1) throw std::invalid_argument("train_output_classifier: class count must be >= 1");
  if (codes.rows() == 0 || codes.cols() == 0) throw std::invalid_argument("train_output_classifier: empty codes");
  require_size(labels.size(), codes.rows(), "train_output_classifier labels");
  for (double v : codes.values())
    if (!std::isfinite(v)) throw std::invalid_argument("train_output_classifier: non-finite code");

  const std::size_t n = codes.rows(), d = codes.cols(), c = static_cast<std::size_t>(class_count);
  LayerWeights head = init_weights(c, d, derive_seed(seed, "classifier"));
  const double decay = decay_rate(lambda, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "classifier-order"));
  for (int epoch = 0; epoch < iters; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t idx : order) {
      auto x = codes.row(idx);
      Vector p = affine(head, x);
      softmax_inplace(p);
      p[static_cast<std::size_t>(labels[idx])] -= 1.0;
      for (std::size_t k = 0; k < c; ++k) {
        auto w = head.W.row(k);
        for (std::size_t j = 0; j < d; ++j) apply_update(w[j], p[k] * x[j], lr, decay);
        apply_bias_update(w[d], p[k], lr);
      }
    }
  }
  return head;
}

/// Full backpropagation through every layer with cross-entropy at the
/// softmax head; per-example SGD with fixed lr for `iters` epochs.
inline Mlp fine_tune(Mlp mlp, const Dataset& ds, int iters, double lr, double lambda, std::uint64_t seed) {
  mlp.validate();
  if (mlp.head != OutputHead::softmax) throw std::invalid_argument("fine_tune: network needs a softmax head");
  require_size(ds.dim(), mlp.input_dim(), "fine_tune input");
  require_size(static_cast<std::size_t>(ds.class_count), mlp.output_dim(), "fine_tune classes");
  if (iters <= 0) return mlp;

  const double decay = decay_rate(lambda, ds.size());
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "finetune-order"));
  Vector target(mlp.output_dim());
  for (int epoch = 0; epoch < iters; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t idx : order) {
      std::fill(target.begin(), target.end(), 0.0);
      target[static_cast<std::size_t>(ds.labels[idx])] = 1.0;
      auto grads = backprop(mlp, ds.features.row(idx), target, LossKind::cross_entropy);
      for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        Matrix& w = mlp.layers[l].W;
        const std::size_t d_in = mlp.layers[l].d_in();
        for (std::size_t r = 0; r < w.rows(); ++r) {
          for (std::size_t c = 0; c < d_in; ++c) apply_update(w(r, c), grads[l](r, c), lr, decay);
          apply_bias_update(w(r, d_in), grads[l](r, d_in), lr);
        }
      }
    }
  }
  return mlp;
}

inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] > v[best]) best = k;
  return best;
}

/// Fraction of examples whose argmax output equals the label; ties go to
/// the lowest class index.
inline double evaluate(const Mlp& mlp, const Dataset& ds) {
  if (ds.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  require_size(ds.dim(), mlp.input_dim(), "evaluate input");
  std::size_t correct = 0;
  for (std::size_t n = 0; n < ds.size(); ++n)
    if (argmax(predict(mlp, ds.features.row(n))) == static_cast<std::size_t>(ds.labels[n])) ++correct;
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

/// Mean cross-entropy of a softmax network over a dataset.
inline double mean_cross_entropy(const Mlp& mlp, const Dataset& ds) {
  if (ds.size() == 0) throw std::invalid_argument("mean_cross_entropy: empty dataset");
  double s = 0.0;
  for (std::size_t n = 0; n < ds.size(); ++n) {
    Vector p = predict(mlp, ds.features.row(n));
    s -= std::log(std::max(p[static_cast<std::size_t>(ds.labels[n])], 1e-300));
  }
  return s / static_cast<double>(ds.size());
}

struct PhaseSeconds {
  double pretrain = 0.0;
  double classifier = 0.0;
  double finetune = 0.0;

  double total() const noexcept { return pretrain + classifier + finetune; }
};

struct TrainReport {
  PipelineConfig config;
  std::string dataset;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::size_t input_dim = 0;
  int class_count = 0;
  PhaseSeconds phase_seconds;
  OpCounter pretrain_ops;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  /// Test feature entries outside [-1, 1] after normalization.
  std::size_t test_out_of_range = 0;
  Mlp network;
};

/// Pre-trains hidden layers for `cfg.algorithm`; returns a tanh-headed stack.
inline Mlp pretrain(const PipelineConfig& cfg, const Dataset& train, OpCounter* ops = nullptr) {
  switch (cfg.algorithm) {
    case Algorithm::SV: return pretrain_stack(train, cfg.arch, LayerwiseMode::SV, cfg.layerwise(), ops);
    case Algorithm::USV: return pretrain_stack(train, cfg.arch, LayerwiseMode::USV, cfg.layerwise(), ops);
    case Algorithm::GN: return greedy_pretrain_stack(train, cfg.arch, cfg.greedy(), GreedyMode::GN, ops);
    case Algorithm::GCN: return greedy_pretrain_stack(train, cfg.arch, cfg.greedy(), GreedyMode::GCN, ops);
  }
  throw std::logic_error("pretrain: unknown algorithm");
}

/// Codes of the top hidden layer for every training example.
inline Matrix top_codes(const Mlp& hidden, const Matrix& inputs) {
  Matrix codes = inputs;
  for (const auto& lw : hidden.layers) codes = layer_codes(lw, codes);
  return codes;
}

/// Pre-train, fit the softmax classifier on the top codes, fine-tune all
/// weights, then score train and test sets.
inline TrainReport run_pipeline(const PipelineConfig& cfg, const Dataset& train, const Dataset& test) {
  train.validate();
  test.validate();
  cfg.validate(train.class_count);
  require_size(test.dim(), train.dim(), "run_pipeline test dimension");
  if (test.class_count != train.class_count) throw std::invalid_argument("run_pipeline: class counts differ");

  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); };

  TrainReport rep;
  rep.config = cfg;
  rep.dataset = train.name;
  rep.train_size = train.size();
  rep.test_size = test.size();
  rep.input_dim = train.dim();
  rep.class_count = train.class_count;
  rep.test_out_of_range = count_out_of_range(test);

  auto t0 = clock::now();
  Mlp mlp = pretrain(cfg, train, &rep.pretrain_ops);
  auto t1 = clock::now();
  LayerWeights head = train_output_classifier(top_codes(mlp, train.features), train.labels, train.class_count,
                                              cfg.classifier_iters, cfg.classifier_lr, cfg.pretrain.lambda, cfg.seed);
  mlp.layers.push_back(std::move(head));
  mlp.head = OutputHead::softmax;
  auto t2 = clock::now();
  mlp = fine_tune(std::move(mlp), train, cfg.finetune_iters, cfg.finetune_lr, cfg.pretrain.lambda, cfg.seed);
  auto t3 = clock::now();

  rep.phase_seconds = {seconds(t0, t1), seconds(t1, t2), seconds(t2, t3)};
  rep.train_accuracy = evaluate(mlp, train);
  rep.test_accuracy = evaluate(mlp, test);
  rep.network = std::move(mlp);
  return rep;
}

inline nlohmann::ordered_json to_json(const OpCounter& ops) {
  return {{"macs", ops.macs}, {"adds", ops.adds}, {"mults", ops.mults}, {"activations", ops.activations},
          {"total", ops.total()}};
}

inline nlohmann::ordered_json to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["algorithm"] = to_string(cfg.algorithm);
  j["arch"] = cfg.arch;
  j["pretrain_epochs"] = cfg.pretrain.epochs;
  j["pretrain_lr"] = cfg.pretrain.lr;
  j["lambda"] = cfg.pretrain.lambda;
  if (is_greedy(cfg.algorithm)) j["amnesia"] = cfg.amnesia;
  j["classifier_iters"] = cfg.classifier_iters;
  j["classifier_lr"] = cfg.classifier_lr;
  j["finetune_iters"] = cfg.finetune_iters;
  j["finetune_lr"] = cfg.finetune_lr;
  j["seed"] = cfg.seed;
  return j;
}

/// Report document. With include_timings == false the phase_seconds block
/// is zeroed so that reruns produce byte-identical files.
inline nlohmann::ordered_json to_json(const TrainReport& r, bool include_timings = true) {
  nlohmann::ordered_json j;
  j["algorithm"] = to_string(r.config.algorithm);
  j["arch"] = r.config.arch;
  j["seed"] = r.config.seed;
  std::vector<std::size_t> full{r.input_dim};
  full.insert(full.end(), r.config.arch.begin(), r.config.arch.end());
  full.push_back(static_cast<std::size_t>(r.class_count));
  j["network"] = full;
  j["dataset"] = r.dataset;
  j["train_size"] = r.train_size;
  j["test_size"] = r.test_size;
  const PhaseSeconds ps = include_timings ? r.phase_seconds : PhaseSeconds{};
  j["phase_seconds"] = {{"pretrain", ps.pretrain}, {"classifier", ps.classifier}, {"finetune", ps.finetune}};
  j["op_counts"] = {{"pretrain", to_json(r.pretrain_ops)}};
  j["train_accuracy"] = r.train_accuracy;
  j["test_accuracy"] = r.test_accuracy;
  j["test_out_of_range"] = r.test_out_of_range;
  j["config"] = to_json(r.config);
  return j;
}

}  // namespace greedynet
