#pragma once

// Test-only oracles and fixtures. Nothing here calls into the code paths it is
// used to check: CRF quantities are recomputed by exhaustive enumeration and
// gradients by central finite differences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "sentcomp/corpus.hpp"
#include "sentcomp/crf.hpp"
#include "sentcomp/embeddings.hpp"
#include "sentcomp/tensor.hpp"

namespace sentcomp::testing {

inline std::filesystem::path data_dir() { return SENTCOMP_TEST_DATA_DIR; }

// Fresh per-test scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sentcomp_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline CrfLattice random_lattice(std::size_t T, std::size_t K, Rng& rng, double scale = 2.0) {
  CrfLattice lat;
  lat.emissions = Matrix(T, K);
  lat.transitions = Matrix(K, K);
  lat.start = Vector(K);
  lat.stop = Vector(K);
  for (Eigen::Index i = 0; i < lat.emissions.size(); ++i) lat.emissions.data()[i] = rng.uniform(-scale, scale);
  for (Eigen::Index i = 0; i < lat.transitions.size(); ++i) lat.transitions.data()[i] = rng.uniform(-scale, scale);
  for (Eigen::Index i = 0; i < lat.start.size(); ++i) lat.start(i) = rng.uniform(-scale, scale);
  for (Eigen::Index i = 0; i < lat.stop.size(); ++i) lat.stop(i) = rng.uniform(-scale, scale);
  return lat;
}

inline CrfLattice zero_lattice(std::size_t T, std::size_t K = 2) {
  return {Matrix::Zero(T, K), Matrix::Zero(K, K), Vector::Zero(K), Vector::Zero(K)};
}

// Exhaustive enumeration over all K^T label paths.
struct BruteForce {
  double log_z = 0.0;
  Matrix marginals;
  std::vector<int> best_path;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<int>> paths;
  std::vector<double> scores;
};

inline double resum_score(const CrfLattice& lat, const std::vector<int>& y) {
  double s = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (t == 0) s += lat.start[y[t]];
    s += lat.emissions(static_cast<Eigen::Index>(t), y[t]);
    if (t > 0) s += lat.transitions(y[t - 1], y[t]);
    if (t + 1 == y.size()) s += lat.stop[y[t]];
  }
  return s;
}

inline BruteForce enumerate_paths(const CrfLattice& lat) {
  const std::size_t T = static_cast<std::size_t>(lat.emissions.rows());
  const std::size_t K = static_cast<std::size_t>(lat.emissions.cols());
  BruteForce bf;
  std::size_t total = 1;
  for (std::size_t t = 0; t < T; ++t) total *= K;
  for (std::size_t code = 0; code < total; ++code) {
    // Path index -> labels, most significant position first, so paths are
    // visited in lexicographic order and the first maximum found is the
    // lexicographically smallest.
    std::vector<int> y(T);
    std::size_t c = code;
    for (std::size_t t = T; t-- > 0;) {
      y[t] = static_cast<int>(c % K);
      c /= K;
    }
    const double s = resum_score(lat, y);
    bf.paths.push_back(y);
    bf.scores.push_back(s);
    if (s > bf.best_score) {
      bf.best_score = s;
      bf.best_path = y;
    }
  }
  double m = -std::numeric_limits<double>::infinity();
  for (double s : bf.scores) m = std::max(m, s);
  double acc = 0.0;
  for (double s : bf.scores) acc += std::exp(s - m);
  bf.log_z = m + std::log(acc);
  bf.marginals = Matrix::Zero(T, K);
  for (std::size_t p = 0; p < bf.paths.size(); ++p) {
    const double w = std::exp(bf.scores[p] - bf.log_z);
    for (std::size_t t = 0; t < T; ++t) bf.marginals(static_cast<Eigen::Index>(t), bf.paths[p][t]) += w;
  }
  return bf;
}

// Among exactly-optimal paths, the one a backtracking decoder that prefers the
// lower label at every step returns: smallest when compared from the last
// position backwards.
inline std::vector<int> backtrack_tie_winner(const BruteForce& bf) {
  std::vector<int> best;
  for (std::size_t p = 0; p < bf.paths.size(); ++p) {
    if (bf.scores[p] != bf.best_score) continue;
    const auto& y = bf.paths[p];
    if (best.empty() || std::lexicographical_compare(y.rbegin(), y.rend(), best.rbegin(), best.rend())) best = y;
  }
  return best;
}

// Central difference of f with respect to *x.
inline double central_difference(double* x, double eps, const std::function<double()>& f) {
  const double saved = *x;
  *x = saved + eps;
  const double up = f();
  *x = saved - eps;
  const double down = f();
  *x = saved;
  return (up - down) / (2.0 * eps);
}

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

inline std::vector<SentencePair> load_toy_pairs() {
  std::ifstream in(data_dir() / "toy50.jsonl");
  return parse_pairs(in).pairs;
}

inline std::vector<LabeledSentence> load_toy_labeled() {
  std::vector<LabeledSentence> out;
  for (const auto& p : load_toy_pairs()) out.push_back(align(p));
  return out;
}

inline EmbeddingTable load_toy_table() { return load_static_table(data_dir() / "toy_glove32.txt"); }

// Synthetic pairs: random token sequences and a random subsequence as the
// compression. Every `unalignable_every`-th pair gets a foreign token.
inline std::vector<SentencePair> synthetic_pairs(std::size_t n, std::uint64_t seed,
                                                 std::size_t unalignable_every = 0) {
  Rng rng(seed);
  static const char* kWords[] = {"a", "the", "of", "to", "in", "and", "is", "was", "for", "on",
                                 "said", "new", "city", "police", "man", "year", ",", "."};
  std::vector<SentencePair> out;
  for (std::size_t i = 0; i < n; ++i) {
    SentencePair p;
    p.id = "syn" + std::to_string(i);
    const std::size_t len = 2 + rng.below(40);
    for (std::size_t t = 0; t < len; ++t) p.original.emplace_back(kWords[rng.below(std::size(kWords))]);
    for (const auto& tok : p.original) {
      if (rng.uniform() < 0.4) p.compression.push_back(tok);
    }
    if (p.compression.empty()) p.compression.push_back(p.original[rng.below(len)]);
    if (unalignable_every > 0 && i % unalignable_every == unalignable_every - 1) {
      p.compression.insert(p.compression.begin() + static_cast<std::ptrdiff_t>(rng.below(p.compression.size())),
                           "UNSEEN");
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace sentcomp::testing
