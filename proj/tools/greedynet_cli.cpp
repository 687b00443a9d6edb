// greedynet command-line tool: train, bench, sweep-amnesia, features, scatter.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "greedynet/greedynet.hpp"

#ifndef GREEDYNET_DEFAULT_DATA_DIR
#define GREEDYNET_DEFAULT_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace greedynet;

namespace {

/// Thrown for flag combinations that parse but make no sense together.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataOptions {
  std::string data = "digits.csv";
  std::string test_data;
  int label_col = -1;
  bool no_header = false;
  double test_frac = 0.3;
  std::optional<std::uint64_t> split_seed;

  void add_to(CLI::App* app) {
    app->add_option("--data", data, "Training CSV (relative paths also tried under $GREEDYNET_DATA_DIR)")
        ->capture_default_str();
    app->add_option("--test-data", test_data, "Pre-split test CSV; disables --test-frac");
    app->add_option("--label-col", label_col, "Label column index, negative counts from the end")
        ->capture_default_str();
    app->add_flag("--no-header", no_header, "CSV files have no header row");
    app->add_option("--test-frac", test_frac, "Stratified test fraction when --test-data is absent")
        ->capture_default_str();
    app->add_option("--split-seed", split_seed, "Seed for the train/test split (default: --seed)");
  }
};

struct TrainOptions {
  std::string algo = "gn";
  std::string arch = "40,30";
  std::optional<double> amnesia;
  int epochs = 300;
  double lr = 0.001;
  double lambda = 1.0;
  int classifier_iters = 500;
  double classifier_lr = 0.002;
  int finetune_iters = 20;
  double finetune_lr = 0.001;
  std::uint64_t seed = 1;

  void add_to(CLI::App* app, bool with_algo = true) {
    if (with_algo) app->add_option("--algo", algo, "sv | usv | gn | gcn")->capture_default_str();
    app->add_option("--arch", arch, "Comma-separated hidden widths")->capture_default_str();
    app->add_option("--amnesia", amnesia, "Amnesia factor in [0,1] for gn/gcn (default 0.4)");
    app->add_option("--epochs", epochs, "Pre-training epochs")->capture_default_str();
    app->add_option("--lr", lr, "Pre-training learning rate")->capture_default_str();
    app->add_option("--lambda", lambda, "L2 regularization strength")->capture_default_str();
    app->add_option("--classifier-iters", classifier_iters)->capture_default_str();
    app->add_option("--classifier-lr", classifier_lr)->capture_default_str();
    app->add_option("--finetune-iters", finetune_iters)->capture_default_str();
    app->add_option("--finetune-lr", finetune_lr)->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
  }

  PipelineConfig config(const std::string& algorithm) const {
    PipelineConfig cfg;
    cfg.algorithm = algorithm_from_string(algorithm);
    if (amnesia && !is_greedy(cfg.algorithm)) throw UsageError("--amnesia only applies to --algo gn or gcn");
    cfg.arch = parse_list<std::size_t>(arch, "--arch");
    cfg.pretrain.epochs = epochs;
    cfg.pretrain.lr = lr;
    cfg.pretrain.lambda = lambda;
    cfg.amnesia = amnesia.value_or(0.4);
    cfg.classifier_iters = classifier_iters;
    cfg.classifier_lr = classifier_lr;
    cfg.finetune_iters = finetune_iters;
    cfg.finetune_lr = finetune_lr;
    cfg.seed = seed;
    return cfg;
  }

  template <typename T>
  static std::vector<T> parse_list(const std::string& text, const char* flag) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::stringstream is(item);
      T v{};
      if (!(is >> v) || !(is >> std::ws).eof()) throw UsageError(std::string(flag) + ": bad list item '" + item + "'");
      out.push_back(v);
    }
    if (out.empty()) throw UsageError(std::string(flag) + ": empty list");
    return out;
  }
};

std::string resolve_data_path(const std::string& path) {
  if (fs::exists(path) || fs::path(path).is_absolute()) return path;
  const char* env = std::getenv("GREEDYNET_DATA_DIR");
  for (const std::string& dir : {env ? std::string(env) : std::string(), std::string(GREEDYNET_DEFAULT_DATA_DIR)}) {
    if (dir.empty()) continue;
    fs::path candidate = fs::path(dir) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

Dataset read_csv(const std::string& path, int label_col, bool no_header) {
  const std::string resolved = resolve_data_path(path);
  std::size_t col = 0;
  if (label_col < 0) {
    std::ifstream in(resolved);
    std::string first;
    std::getline(in, first);
    const auto ncols = static_cast<int>(std::count(first.begin(), first.end(), ',')) + 1;
    if (ncols + label_col < 0) throw UsageError("--label-col out of range");
    col = static_cast<std::size_t>(ncols + label_col);
  } else {
    col = static_cast<std::size_t>(label_col);
  }
  return load_csv(resolved, col, !no_header);
}

/// Loads, splits (unless pre-split) and normalizes with the train-fitted transform.
std::pair<Dataset, Dataset> prepare_data(const DataOptions& d, std::uint64_t seed) {
  Dataset train = read_csv(d.data, d.label_col, d.no_header);
  Dataset test;
  if (!d.test_data.empty()) {
    test = read_csv(d.test_data, d.label_col, d.no_header);
    if (test.dim() != train.dim()) throw UsageError("--test-data has a different feature count than --data");
    // Re-map test labels through the training label ids.
    for (int& l : test.labels) {
      const std::string& text = test.class_names[static_cast<std::size_t>(l)];
      auto it = std::find(train.class_names.begin(), train.class_names.end(), text);
      if (it == train.class_names.end()) throw std::runtime_error("test label '" + text + "' not present in training data");
      l = static_cast<int>(it - train.class_names.begin());
    }
    test.class_count = train.class_count;
    test.class_names = train.class_names;
  } else {
    std::tie(train, test) = split(train, {d.test_frac, d.split_seed.value_or(seed)});
  }
  const Normalizer norm = Normalizer::fit(train);
  return {norm.apply(train), norm.apply(test)};
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  write_file(path, text);
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

/// Hidden layers from a checkpoint, or pre-trained on the fly from flags.
Mlp hidden_stack(const std::string& checkpoint, const TrainOptions& t, const Dataset& train) {
  if (!checkpoint.empty()) {
    Mlp mlp = load_checkpoint(checkpoint).mlp;
    if (mlp.head == OutputHead::softmax) mlp.layers.pop_back();
    if (mlp.layers.empty()) throw std::runtime_error("checkpoint has no hidden layers");
    mlp.head = OutputHead::tanh;
    return mlp;
  }
  PipelineConfig cfg = t.config(t.algo);
  cfg.validate(train.class_count);
  return pretrain(cfg, train);
}

int run(int argc, char** argv) {
  CLI::App app{"Greedy node-by-node and layer-wise pre-training of deep networks"};
  app.require_subcommand(1);

  DataOptions data;
  TrainOptions topts;

  auto* train_cmd = app.add_subcommand("train", "Run one pipeline and write its JSON report");
  std::string report_path = "report.json";
  std::string weights_path;
  bool no_timings = false;
  data.add_to(train_cmd);
  topts.add_to(train_cmd);
  train_cmd->add_option("--out", report_path, "Report file ('-' for stdout)")->capture_default_str();
  train_cmd->add_option("--save-weights", weights_path, "Write the trained network checkpoint");
  train_cmd->add_flag("--no-timings", no_timings, "Zero wall-clock fields for byte-identical reruns");

  auto* bench_cmd = app.add_subcommand("bench", "Algorithm x dataset x seed benchmark matrix");
  std::string algos = "sv,usv,gn,gcn";
  std::vector<std::string> bench_data;
  std::string seeds_text = "1,2,3";
  std::string matrix_path = "bench.json";
  std::string table_path;
  int jobs = 1;
  bool bench_no_timings = false;
  DataOptions bench_opts;
  TrainOptions bench_train;
  bench_cmd->add_option("--algos", algos, "Comma-separated algorithms")->capture_default_str();
  bench_cmd->add_option("--data", bench_data, "Dataset CSVs (repeatable; default digits.csv)");
  bench_cmd->add_option("--test-data", bench_opts.test_data, "Pre-split test CSV (single dataset only)");
  bench_cmd->add_option("--label-col", bench_opts.label_col)->capture_default_str();
  bench_cmd->add_flag("--no-header", bench_opts.no_header);
  bench_cmd->add_option("--test-frac", bench_opts.test_frac)->capture_default_str();
  bench_cmd->add_option("--seeds", seeds_text, "Comma-separated seeds")->capture_default_str();
  bench_train.add_to(bench_cmd, false);
  bench_cmd->add_option("--out", matrix_path, "Matrix JSON file")->capture_default_str();
  bench_cmd->add_option("--table", table_path, "Plain-text table file (default: stdout)");
  bench_cmd->add_option("--jobs", jobs, "Concurrent cells; keep 1 for wall-clock comparisons")->capture_default_str();
  bench_cmd->add_flag("--no-timings", bench_no_timings, "Zero wall-clock fields in the JSON");

  auto* sweep_cmd = app.add_subcommand("sweep-amnesia", "Accuracy versus amnesia factor");
  std::string amnesia_text = "0,0.4,0.5,1";
  std::string sweep_seeds = "1,2,3,4,5";
  std::string sweep_out = "sweep.csv";
  DataOptions sweep_data;
  TrainOptions sweep_train;
  sweep_train.algo = "gcn";
  sweep_data.add_to(sweep_cmd);
  sweep_train.add_to(sweep_cmd);
  sweep_cmd->add_option("--values", amnesia_text, "Comma-separated amnesia factors")->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep_seeds, "Comma-separated shared seeds")->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out, "CSV table ('-' for stdout)")->capture_default_str();

  auto* feat_cmd = app.add_subcommand("features", "Export first-layer (or --layer) weights as a PGM grid");
  std::string checkpoint;
  std::size_t layer_index = 1;
  GridShape grid{8, 8, 3, 3};
  std::string pgm_out = "features.pgm";
  DataOptions feat_data;
  TrainOptions feat_train;
  feat_data.add_to(feat_cmd);
  feat_train.add_to(feat_cmd);
  feat_cmd->add_option("--checkpoint", checkpoint, "Use weights from a checkpoint instead of training");
  feat_cmd->add_option("--layer", layer_index, "1-based hidden layer; its input must be an image")->capture_default_str();
  feat_cmd->add_option("--img-h", grid.img_h)->capture_default_str();
  feat_cmd->add_option("--img-w", grid.img_w)->capture_default_str();
  feat_cmd->add_option("--rows", grid.rows)->capture_default_str();
  feat_cmd->add_option("--cols", grid.cols)->capture_default_str();
  feat_cmd->add_option("--out", pgm_out)->capture_default_str();

  auto* scatter_cmd = app.add_subcommand("scatter", "Export two nodes' codes with labels as CSV");
  std::string scatter_ckpt;
  std::size_t scatter_layer = 1;
  std::string nodes_text = "0,1";
  std::string scatter_out = "scatter.csv";
  DataOptions scatter_data;
  TrainOptions scatter_train;
  scatter_data.add_to(scatter_cmd);
  scatter_train.add_to(scatter_cmd);
  scatter_cmd->add_option("--checkpoint", scatter_ckpt);
  scatter_cmd->add_option("--layer", scatter_layer, "1-based hidden layer")->capture_default_str();
  scatter_cmd->add_option("--nodes", nodes_text, "Two 0-based node indices")->capture_default_str();
  scatter_cmd->add_option("--out", scatter_out)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "greedynet: error: usage: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*train_cmd) {
      PipelineConfig cfg = topts.config(topts.algo);
      auto [train, test] = prepare_data(data, cfg.seed);
      auto rep = run_pipeline(cfg, train, test);
      write_text(report_path, dump(to_json(rep, !no_timings)));
      if (!weights_path.empty()) save_checkpoint(weights_path, rep.network, cfg.seed);
    } else if (*bench_cmd) {
      auto seeds = TrainOptions::parse_list<std::uint64_t>(seeds_text, "--seeds");
      std::vector<Algorithm> algorithms;
      for (const auto& a : TrainOptions::parse_list<std::string>(algos, "--algos"))
        algorithms.push_back(algorithm_from_string(a));
      if (bench_data.empty()) bench_data.push_back("digits.csv");
      if (!bench_opts.test_data.empty() && bench_data.size() != 1)
        throw UsageError("--test-data requires exactly one --data");
      std::vector<BenchDataset> datasets;
      for (const auto& path : bench_data) {
        DataOptions d = bench_opts;
        d.data = path;
        d.split_seed = seeds.front();
        auto [train, test] = prepare_data(d, seeds.front());
        datasets.push_back({fs::path(path).stem().string(), std::move(train), std::move(test)});
      }
      PipelineConfig base = bench_train.config("gn");
      auto m = run_bench(datasets, algorithms, seeds, base, jobs);
      write_text(matrix_path, dump(to_json(m, !bench_no_timings)));
      const std::string table = format_table(m);
      if (table_path.empty()) std::cout << table;
      else write_text(table_path, table);
    } else if (*sweep_cmd) {
      auto values = TrainOptions::parse_list<double>(amnesia_text, "--values");
      auto seeds = TrainOptions::parse_list<std::uint64_t>(sweep_seeds, "--seeds");
      PipelineConfig base = sweep_train.config(sweep_train.algo);
      if (!is_greedy(base.algorithm)) throw UsageError("sweep-amnesia needs --algo gn or gcn");
      for (double a : values)
        if (!(a >= 0.0 && a <= 1.0)) throw UsageError("--values: amnesia " + std::to_string(a) + " outside [0, 1]");
      auto [train, test] = prepare_data(sweep_data, seeds.front());
      write_text(sweep_out, sweep_csv(run_amnesia_sweep(train, test, base, values, seeds)));
    } else if (*feat_cmd) {
      auto [train, test] = prepare_data(feat_data, feat_train.seed);
      Mlp hidden = hidden_stack(checkpoint, feat_train, train);
      if (layer_index < 1 || layer_index > hidden.layers.size()) throw UsageError("--layer out of range");
      export_feature_grid(hidden.layers[layer_index - 1], grid, pgm_out);
    } else if (*scatter_cmd) {
      auto nodes = TrainOptions::parse_list<std::size_t>(nodes_text, "--nodes");
      if (nodes.size() != 2) throw UsageError("--nodes takes exactly two indices");
      auto [train, test] = prepare_data(scatter_data, scatter_train.seed);
      Mlp hidden = hidden_stack(scatter_ckpt, scatter_train, train);
      if (scatter_layer < 1 || scatter_layer > hidden.layers.size()) throw UsageError("--layer out of range");
      Matrix codes = train.features;
      for (std::size_t l = 0; l < scatter_layer; ++l) codes = layer_codes(hidden.layers[l], codes);
      write_text(scatter_out, scatter_csv(codes, nodes[0], nodes[1], train.labels));
    }
  } catch (const UsageError& e) {
    std::cerr << "greedynet: error: usage: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "greedynet: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
