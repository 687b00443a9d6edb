// Text checkpoint format for networks and plain matrix dumps.
//
//   greedynet-checkpoint 1
//   head <linear|softmax|tanh>
//   seed <unsigned>
//   layers <L>
//   layer <index> <d_out> <d_in_plus_bias>
//   <d_out lines of d_in_plus_bias space-separated values>
//   ... repeated for each layer
//
// Values are written with 17 significant digits, so load(save(m)) == m
// bit for bit. Matrix dumps use the same body layout behind a
// "matrix <rows> <cols>" line.
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "greedynet/matrix.hpp"
#include "greedynet/network.hpp"

namespace greedynet {

inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline void write_rows(std::ostream& out, const Matrix& m) {
  char buf[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      if (c) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

inline void read_rows(std::istream& in, Matrix& m) {
  for (double& v : m.values()) {
    std::string tok;
    if (!(in >> tok)) throw std::runtime_error("checkpoint: truncated matrix body");
    std::size_t used = 0;
    v = std::stod(tok, &used);
    if (used != tok.size()) throw std::runtime_error("checkpoint: bad number '" + tok + "'");
  }
}

inline void expect_word(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word)
    throw std::runtime_error("checkpoint: expected '" + word + "', got '" + got + "'");
}

}  // namespace detail

inline void write_matrix(std::ostream& out, const Matrix& m) {
  out << "matrix " << m.rows() << ' ' << m.cols() << '\n';
  detail::write_rows(out, m);
}

inline Matrix read_matrix(std::istream& in) {
  detail::expect_word(in, "matrix");
  std::size_t rows = 0, cols = 0;
  if (!(in >> rows >> cols)) throw std::runtime_error("checkpoint: bad matrix header");
  Matrix m(rows, cols);
  detail::read_rows(in, m);
  return m;
}

inline void write_checkpoint(std::ostream& out, const Mlp& mlp, std::uint64_t seed) {
  out << "greedynet-checkpoint " << kCheckpointVersion << '\n';
  out << "head " << to_string(mlp.head) << '\n';
  out << "seed " << seed << '\n';
  out << "layers " << mlp.layers.size() << '\n';
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const Matrix& w = mlp.layers[l].W;
    out << "layer " << l << ' ' << w.rows() << ' ' << w.cols() << '\n';
    detail::write_rows(out, w);
  }
}

struct Checkpoint {
  Mlp mlp;
  std::uint64_t seed = 0;
};

inline Checkpoint read_checkpoint(std::istream& in) {
  detail::expect_word(in, "greedynet-checkpoint");
  int version = 0;
  if (!(in >> version) || version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ck;
  std::string head;
  detail::expect_word(in, "head");
  in >> head;
  ck.mlp.head = output_head_from_string(head);
  detail::expect_word(in, "seed");
  in >> ck.seed;
  std::size_t n_layers = 0;
  detail::expect_word(in, "layers");
  if (!(in >> n_layers) || n_layers == 0) throw std::runtime_error("checkpoint: bad layer count");
  for (std::size_t l = 0; l < n_layers; ++l) {
    detail::expect_word(in, "layer");
    std::size_t index = 0, rows = 0, cols = 0;
    if (!(in >> index >> rows >> cols) || index != l || cols < 1)
      throw std::runtime_error("checkpoint: bad header for layer " + std::to_string(l));
    Matrix w(rows, cols);
    detail::read_rows(in, w);
    ck.mlp.layers.emplace_back(std::move(w));
  }
  ck.mlp.validate();
  return ck;
}

inline void save_checkpoint(const std::string& path, const Mlp& mlp, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  write_checkpoint(out, mlp, seed);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return read_checkpoint(in);
}

}  // namespace greedynet
