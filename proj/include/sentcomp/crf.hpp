#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "sentcomp/tensor.hpp"

namespace sentcomp {

/// Potentials of a linear-chain CRF for one sentence. Label index 0 is O (keep),
/// 1 is D (delete). transitions(i, j) scores moving from label i to label j.
struct CrfLattice {
  Matrix emissions;    // T x K
  Matrix transitions;  // K x K
  Vector start;        // K
  Vector stop;         // K

  std::size_t length() const { return static_cast<std::size_t>(emissions.rows()); }
  std::size_t labels() const { return static_cast<std::size_t>(emissions.cols()); }
};

struct LabelPath {
  std::vector<int> labels;
  double score = 0.0;
};

struct CrfGrads {
  Matrix emissions;
  Matrix transitions;
  Vector start;
  Vector stop;
};

class CrfError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

double log_sum_exp(std::span<const double> xs);

double score_path(const CrfLattice& lattice, std::span<const int> labels);

// Forward log-messages: alpha(t, k) = log-sum over prefixes ending in k at t,
// including start and emissions up to t. Backward messages include stop.
Matrix forward_messages(const CrfLattice& lattice);
Matrix backward_messages(const CrfLattice& lattice);

double log_partition(const CrfLattice& lattice);

/// Posterior P(y_t = k | x), T x K, rows sum to one.
Matrix marginals(const CrfLattice& lattice);

/// Highest-scoring path. Exact ties go to the lower label index.
LabelPath viterbi(const CrfLattice& lattice);

struct CrfLoss {
  double loss = 0.0;
  CrfGrads grads;
};

/// Negative log-likelihood logZ - score(gold) and its gradient with respect to
/// every potential (expected minus observed feature counts).
CrfLoss nll_and_grad(const CrfLattice& lattice, std::span<const int> gold);

}  // namespace sentcomp
