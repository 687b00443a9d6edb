// Benchmark matrices (algorithm x dataset, averaged over seeds) and
// amnesia sweeps.
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <future>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "greedynet/dataset.hpp"
#include "greedynet/trainer.hpp"

namespace greedynet {

struct BenchDataset {
  std::string name;
  Dataset train;
  Dataset test;
};

struct BenchCell {
  Algorithm algorithm = Algorithm::GN;
  std::string dataset;
  std::vector<std::uint64_t> seeds;
  std::vector<TrainReport> runs;

  double mean_rt() const { return mean([](const TrainReport& r) { return r.phase_seconds.total(); }); }
  double mean_pt() const { return mean([](const TrainReport& r) { return r.phase_seconds.pretrain; }); }
  double mean_train() const { return mean([](const TrainReport& r) { return r.train_accuracy; }); }
  double mean_test() const { return mean([](const TrainReport& r) { return r.test_accuracy; }); }
  double mean_pretrain_ops() const {
    return mean([](const TrainReport& r) { return static_cast<double>(r.pretrain_ops.total()); });
  }

 private:
  template <typename F>
  double mean(F f) const {
    if (runs.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : runs) s += f(r);
    return s / static_cast<double>(runs.size());
  }
};

/// Pre-training time ratio PT(numerator) / PT(denominator) on one dataset.
struct Speedup {
  std::string dataset;
  Algorithm numerator;
  Algorithm denominator;
  double ratio = 0.0;
};

struct BenchMatrix {
  std::vector<BenchCell> cells;
  std::vector<Speedup> speedups;

  const BenchCell* find(const std::string& dataset, Algorithm a) const {
    for (const auto& c : cells)
      if (c.dataset == dataset && c.algorithm == a) return &c;
    return nullptr;
  }
};

/// Layer-wise baseline over greedy counterpart, for every pair present.
inline std::vector<Speedup> compute_speedups(const BenchMatrix& m) {
  static constexpr std::pair<Algorithm, Algorithm> kPairs[] = {
      {Algorithm::USV, Algorithm::GN}, {Algorithm::SV, Algorithm::GCN},
      {Algorithm::USV, Algorithm::GCN}, {Algorithm::SV, Algorithm::GN}};
  std::vector<Speedup> out;
  std::vector<std::string> names;
  for (const auto& c : m.cells)
    if (std::find(names.begin(), names.end(), c.dataset) == names.end()) names.push_back(c.dataset);
  for (const auto& name : names) {
    for (auto [num, den] : kPairs) {
      const BenchCell* a = m.find(name, num);
      const BenchCell* b = m.find(name, den);
      if (a && b && b->mean_pt() > 0.0) out.push_back({name, num, den, a->mean_pt() / b->mean_pt()});
    }
  }
  return out;
}

/// Runs every algorithm x dataset x seed combination with `base` as the
/// template config. Cells run concurrently when jobs > 1; wall-clock
/// comparisons need jobs == 1.
inline BenchMatrix run_bench(const std::vector<BenchDataset>& datasets, const std::vector<Algorithm>& algorithms,
                             const std::vector<std::uint64_t>& seeds, const PipelineConfig& base, int jobs = 1) {
  if (algorithms.empty()) throw std::invalid_argument("bench: no algorithms given");
  if (datasets.empty()) throw std::invalid_argument("bench: no datasets given");
  if (seeds.empty()) throw std::invalid_argument("bench: no seeds given");

  BenchMatrix m;
  for (const auto& ds : datasets) {
    for (Algorithm a : algorithms) {
      BenchCell cell;
      cell.algorithm = a;
      cell.dataset = ds.name;
      cell.seeds = seeds;
      m.cells.push_back(std::move(cell));
    }
  }

  auto run_one = [&](std::size_t cell_index, std::uint64_t seed) {
    const auto& ds = datasets[cell_index / algorithms.size()];
    PipelineConfig cfg = base;
    cfg.algorithm = m.cells[cell_index].algorithm;
    cfg.seed = seed;
    return run_pipeline(cfg, ds.train, ds.test);
  };

  if (jobs <= 1) {
    for (std::size_t c = 0; c < m.cells.size(); ++c)
      for (auto seed : seeds) m.cells[c].runs.push_back(run_one(c, seed));
  } else {
    std::vector<std::pair<std::size_t, std::future<TrainReport>>> pending;
    auto drain = [&](std::size_t keep) {
      while (pending.size() > keep) {
        auto& [c, fut] = pending.front();
        m.cells[c].runs.push_back(fut.get());
        pending.erase(pending.begin());
      }
    };
    for (std::size_t c = 0; c < m.cells.size(); ++c) {
      for (auto seed : seeds) {
        pending.emplace_back(c, std::async(std::launch::async, run_one, c, seed));
        drain(static_cast<std::size_t>(jobs) - 1);
      }
    }
    drain(0);
  }
  m.speedups = compute_speedups(m);
  return m;
}

/// Plain-text table with the columns RT, PT, train and test score.
inline std::string format_table(const BenchMatrix& m) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s %-5s %10s %10s %8s %8s\n", "dataset", "type", "RT(s)", "PT(s)", "train",
                "test");
  out += buf;
  for (const auto& c : m.cells) {
    std::snprintf(buf, sizeof buf, "%-16s %-5s %10.3f %10.3f %8.3f %8.3f\n", c.dataset.c_str(),
                  to_string(c.algorithm), c.mean_rt(), c.mean_pt(), c.mean_train(), c.mean_test());
    out += buf;
  }
  for (const auto& s : m.speedups) {
    std::snprintf(buf, sizeof buf, "speedup %s PT(%s)/PT(%s) = %.3f\n", s.dataset.c_str(), to_string(s.numerator),
                  to_string(s.denominator), s.ratio);
    out += buf;
  }
  return out;
}

inline nlohmann::ordered_json to_json(const BenchMatrix& m, bool include_timings = true) {
  nlohmann::ordered_json j;
  j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : m.cells) {
    nlohmann::ordered_json cell;
    cell["dataset"] = c.dataset;
    cell["algorithm"] = to_string(c.algorithm);
    cell["seeds"] = c.seeds;
    cell["rt_seconds"] = include_timings ? c.mean_rt() : 0.0;
    cell["pt_seconds"] = include_timings ? c.mean_pt() : 0.0;
    cell["train_accuracy"] = c.mean_train();
    cell["test_accuracy"] = c.mean_test();
    cell["pretrain_ops"] = c.mean_pretrain_ops();
    cell["runs"] = nlohmann::ordered_json::array();
    for (const auto& r : c.runs) cell["runs"].push_back(to_json(r, include_timings));
    j["cells"].push_back(std::move(cell));
  }
  j["speedups"] = nlohmann::ordered_json::array();
  for (const auto& s : m.speedups) {
    j["speedups"].push_back({{"dataset", s.dataset},
                             {"numerator", to_string(s.numerator)},
                             {"denominator", to_string(s.denominator)},
                             {"pt_ratio", include_timings ? s.ratio : 0.0}});
  }
  return j;
}

struct SweepRow {
  double amnesia = 0.0;
  std::vector<double> train_accuracy;
  std::vector<double> test_accuracy;

  static double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  }
  double mean_train() const { return mean(train_accuracy); }
  double mean_test() const { return mean(test_accuracy); }
};

/// Trains `base.algorithm` (GN or GCN) at every amnesia value with the same
/// seeds, so rows differ only in A.
inline std::vector<SweepRow> run_amnesia_sweep(const Dataset& train, const Dataset& test, PipelineConfig base,
                                               const std::vector<double>& amnesia_values,
                                               const std::vector<std::uint64_t>& seeds) {
  if (!is_greedy(base.algorithm)) throw std::invalid_argument("sweep-amnesia: algorithm must be GN or GCN");
  if (amnesia_values.empty()) throw std::invalid_argument("sweep-amnesia: no amnesia values given");
  if (seeds.empty()) throw std::invalid_argument("sweep-amnesia: no seeds given");
  for (double a : amnesia_values)
    if (!(a >= 0.0 && a <= 1.0))
      throw std::invalid_argument("sweep-amnesia: amnesia " + std::to_string(a) + " outside [0, 1]");
  std::vector<SweepRow> rows;
  for (double a : amnesia_values) {
    SweepRow row;
    row.amnesia = a;
    for (auto seed : seeds) {
      base.amnesia = a;
      base.seed = seed;
      auto rep = run_pipeline(base, train, test);
      row.train_accuracy.push_back(rep.train_accuracy);
      row.test_accuracy.push_back(rep.test_accuracy);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// CSV table "amnesia,train_accuracy,test_accuracy" of seed means.
inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "amnesia,train_accuracy,test_accuracy\r\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\r\n", r.amnesia, r.mean_train(), r.mean_test());
    out += buf;
  }
  return out;
}

}  // namespace greedynet
