// Tabular datasets: CSV loading, min/max normalization, stratified splits.
#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "greedynet/matrix.hpp"
#include "greedynet/rng.hpp"

namespace greedynet {

/// N examples of d real features plus dense integer labels in [0, class_count).
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int class_count = 0;
  std::string name;
  /// Original label text for each dense label, in first-appearance order.
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.features = features.select_rows(indices);
    out.labels.reserve(indices.size());
    for (auto i : indices) out.labels.push_back(labels[i]);
    out.class_count = class_count;
    out.name = name;
    out.class_names = class_names;
    return out;
  }

  /// Throws if any invariant of the type is violated.
  void validate() const {
    if (features.rows() != labels.size())
      throw std::invalid_argument("dataset: feature rows and label count differ");
    if (class_count < 1) throw std::invalid_argument("dataset: class_count must be >= 1");
    for (double v : features.values())
      if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite feature value");
    for (int l : labels)
      if (l < 0 || l >= class_count) throw std::invalid_argument("dataset: label out of range");
  }
};

class DatasetError : public std::runtime_error {
 public:
  enum class Kind { missing_file, ragged_row, non_numeric, too_few_classes, bad_label_column, too_small_class };

  DatasetError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace detail

/// Reads a comma-separated file with one label column.
///
/// Labels may be integers or arbitrary strings; they are remapped to dense ids
/// 0..c-1 in order of first appearance. Row and column numbers in error
/// messages are 1-based and count data rows only.
inline Dataset load_csv(const std::string& path, std::size_t label_column, bool has_header) {
  std::ifstream in(path);
  if (!in) throw DatasetError(DatasetError::Kind::missing_file, "cannot open file: " + path);

  Dataset ds;
  ds.name = path.substr(path.find_last_of('/') == std::string::npos ? 0 : path.find_last_of('/') + 1);
  std::map<std::string, int, std::less<>> label_ids;
  std::vector<double> values;
  std::size_t ncols = 0;
  std::size_t row = 0;
  std::string line;
  bool skip_header = has_header;

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (skip_header) {
      skip_header = false;
      continue;
    }
    ++row;
    auto fields = detail::split_fields(line);
    if (row == 1) {
      ncols = fields.size();
      if (label_column >= ncols)
        throw DatasetError(DatasetError::Kind::bad_label_column,
                           "label column " + std::to_string(label_column) + " out of range for " +
                               std::to_string(ncols) + " columns");
      if (ncols < 2)
        throw DatasetError(DatasetError::Kind::ragged_row, "row 1 has no feature columns");
    } else if (fields.size() != ncols) {
      throw DatasetError(DatasetError::Kind::ragged_row,
                         "ragged row " + std::to_string(row) + ": expected " + std::to_string(ncols) +
                             " columns, got " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < ncols; ++c) {
      if (c == label_column) continue;
      double v = 0.0;
      if (!detail::parse_double(fields[c], v))
        throw DatasetError(DatasetError::Kind::non_numeric, "non-numeric feature at row " + std::to_string(row) +
                                                                ", col " + std::to_string(c + 1));
      values.push_back(v);
    }
    std::string_view label = fields[label_column];
    if (label.empty())
      throw DatasetError(DatasetError::Kind::bad_label_column, "empty label at row " + std::to_string(row));
    auto it = label_ids.find(label);
    if (it == label_ids.end()) {
      it = label_ids.emplace(std::string(label), static_cast<int>(label_ids.size())).first;
      ds.class_names.emplace_back(label);
    }
    ds.labels.push_back(it->second);
  }

  if (label_ids.size() < 2)
    throw DatasetError(DatasetError::Kind::too_few_classes,
                       "fewer than 2 distinct classes in " + path);

  const std::size_t d = ncols - 1;
  ds.features = Matrix(row, d);
  std::copy(values.begin(), values.end(), ds.features.values().begin());
  ds.class_count = static_cast<int>(label_ids.size());
  return ds;
}

/// Per-column affine map of [min, max] onto [-1, 1], fitted on one dataset
/// and reusable on others. Constant columns map to 0.
class Normalizer {
 public:
  static Normalizer fit(const Dataset& ds) {
    if (ds.size() == 0) throw std::invalid_argument("normalize: empty dataset");
    Normalizer n;
    const std::size_t d = ds.dim();
    n.min_.assign(d, 0.0);
    n.max_.assign(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
      n.min_[c] = n.max_[c] = ds.features(0, c);
    }
    for (std::size_t r = 1; r < ds.size(); ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        n.min_[c] = std::min(n.min_[c], ds.features(r, c));
        n.max_[c] = std::max(n.max_[c], ds.features(r, c));
      }
    }
    return n;
  }

  double apply(std::size_t column, double v) const {
    const double lo = min_[column], hi = max_[column];
    if (hi == lo) return 0.0;
    return 2.0 * (v - lo) / (hi - lo) - 1.0;
  }

  double invert(std::size_t column, double v) const {
    const double lo = min_[column], hi = max_[column];
    if (hi == lo) return lo;
    return lo + (v + 1.0) * (hi - lo) / 2.0;
  }

  Dataset apply(const Dataset& ds) const {
    require_size(ds.dim(), min_.size(), "Normalizer::apply");
    Dataset out = ds;
    for (std::size_t r = 0; r < out.size(); ++r)
      for (std::size_t c = 0; c < out.dim(); ++c) out.features(r, c) = apply(c, ds.features(r, c));
    return out;
  }

  Dataset invert(const Dataset& ds) const {
    require_size(ds.dim(), min_.size(), "Normalizer::invert");
    Dataset out = ds;
    for (std::size_t r = 0; r < out.size(); ++r)
      for (std::size_t c = 0; c < out.dim(); ++c) out.features(r, c) = invert(c, ds.features(r, c));
    return out;
  }

  const std::vector<double>& column_min() const noexcept { return min_; }
  const std::vector<double>& column_max() const noexcept { return max_; }

 private:
  std::vector<double> min_;
  std::vector<double> max_;
};

/// Number of feature entries outside [-1, 1]; non-zero when a train-fitted
/// transform is applied to data with a wider range.
inline std::size_t count_out_of_range(const Dataset& ds) {
  std::size_t n = 0;
  for (double v : ds.features.values())
    if (v < -1.0 || v > 1.0) ++n;
  return n;
}

inline Dataset normalize(const Dataset& ds) { return Normalizer::fit(ds).apply(ds); }

struct SplitSpec {
  double test_fraction = 0.3;
  std::uint64_t seed = 0;
};

/// Stratified, seed-deterministic train/test split. Each class contributes
/// round(n_c * test_fraction) examples to the test set, clamped so that both
/// sides receive at least one. Index order within each side is ascending.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
    throw std::invalid_argument("split: test_fraction must lie in (0, 1)");

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.class_count));
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);

  std::vector<char> is_test(ds.size(), 0);
  Rng rng(derive_seed(spec.seed, "split"));
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < 2)
      throw DatasetError(DatasetError::Kind::too_small_class,
                         "class " + std::to_string(c) + " too small to stratify");
    rng.shuffle(std::span<std::size_t>(members));
    auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(members.size()) * spec.test_fraction));
    n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
    for (std::size_t k = 0; k < n_test; ++k) is_test[members[k]] = 1;
  }

  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < ds.size(); ++i) (is_test[i] ? test_idx : train_idx).push_back(i);
  return {ds.subset(train_idx), ds.subset(test_idx)};
}

inline Vector one_hot(int label, int c) {
  if (c < 1 || label < 0 || label >= c)
    throw std::out_of_range("one_hot: label " + std::to_string(label) + " outside [0, " + std::to_string(c) + ")");
  Vector v(static_cast<std::size_t>(c), 0.0);
  v[static_cast<std::size_t>(label)] = 1.0;
  return v;
}

inline Matrix one_hot_matrix(std::span<const int> labels, int c) {
  Matrix m(labels.size(), static_cast<std::size_t>(c));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto v = one_hot(labels[i], c);
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

}  // namespace greedynet
