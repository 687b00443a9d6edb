// Feature-grid images (binary PGM) and two-node code scatter tables (CSV).
#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>

#include "greedynet/matrix.hpp"
#include "greedynet/network.hpp"

namespace greedynet {

struct GridShape {
  std::size_t img_h = 0;
  std::size_t img_w = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t width() const noexcept { return cols * img_w + (cols > 0 ? cols - 1 : 0); }
  std::size_t height() const noexcept { return rows * img_h + (rows > 0 ? rows - 1 : 0); }
};

/// Binary P5 image: incoming weights of nodes 0..rows*cols-1 (bias
/// dropped), each reshaped row-major to img_h x img_w and min/max scaled to
/// 0..255 on its own. Tiles are separated by 1-pixel black lines; a constant
/// tile is uniform 128.
inline std::string feature_grid_pgm(const LayerWeights& layer, const GridShape& g) {
  if (g.img_h == 0 || g.img_w == 0 || g.rows == 0 || g.cols == 0)
    throw std::invalid_argument("feature grid: all dimensions must be >= 1");
  if (layer.d_in() != g.img_h * g.img_w)
    throw std::invalid_argument("feature grid: layer input width " + std::to_string(layer.d_in()) +
                                " does not match image " + std::to_string(g.img_h) + "x" + std::to_string(g.img_w));
  if (g.rows * g.cols > layer.d_out())
    throw std::invalid_argument("feature grid: " + std::to_string(g.rows * g.cols) + " tiles but only " +
                                std::to_string(layer.d_out()) + " nodes");

  const std::size_t width = g.width(), height = g.height();
  std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::string pixels(width * height, '\0');

  for (std::size_t t = 0; t < g.rows * g.cols; ++t) {
    auto w = layer.W.row(t).first(layer.d_in());
    double lo = w[0], hi = w[0];
    for (double v : w) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const std::size_t top = (t / g.cols) * (g.img_h + 1);
    const std::size_t left = (t % g.cols) * (g.img_w + 1);
    for (std::size_t y = 0; y < g.img_h; ++y) {
      for (std::size_t x = 0; x < g.img_w; ++x) {
        const double v = w[y * g.img_w + x];
        const long level = hi > lo ? std::lround(255.0 * (v - lo) / (hi - lo)) : 128;
        pixels[(top + y) * width + left + x] = static_cast<char>(static_cast<unsigned char>(level));
      }
    }
  }
  return header + pixels;
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline void export_feature_grid(const LayerWeights& layer, const GridShape& g, const std::string& path) {
  write_file(path, feature_grid_pgm(layer, g));
}

/// CSV (CRLF line ends) with header "node_<a>,node_<b>,label" and one row
/// per example.
inline std::string scatter_csv(const Matrix& codes, std::size_t node_a, std::size_t node_b,
                               std::span<const int> labels) {
  if (node_a >= codes.cols() || node_b >= codes.cols())
    throw std::out_of_range("scatter: node index out of range (layer has " + std::to_string(codes.cols()) + " nodes)");
  require_size(labels.size(), codes.rows(), "scatter labels");
  std::string out = "node_" + std::to_string(node_a) + ",node_" + std::to_string(node_b) + ",label\r\n";
  char buf[96];
  for (std::size_t n = 0; n < codes.rows(); ++n) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\r\n", codes(n, node_a), codes(n, node_b), labels[n]);
    out += buf;
  }
  return out;
}

inline void export_scatter(const Matrix& codes, std::size_t node_a, std::size_t node_b, std::span<const int> labels,
                           const std::string& path) {
  write_file(path, scatter_csv(codes, node_a, node_b, labels));
}

}  // namespace greedynet
