#include "sentcomp/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sentcomp {

namespace {

void check_lattice(const CrfLattice& lat) {
  const auto K = lat.emissions.cols();
  if (lat.emissions.rows() < 1) throw CrfError("crf: lattice has no positions");
  if (K < 1 || lat.transitions.rows() != K || lat.transitions.cols() != K || lat.start.size() != K ||
      lat.stop.size() != K) {
    throw CrfError("crf: potentials disagree on the label count");
  }
}

void check_path(const CrfLattice& lat, std::span<const int> labels) {
  if (labels.size() != lat.length()) {
    throw CrfError("crf: path has " + std::to_string(labels.size()) + " labels for " +
                   std::to_string(lat.length()) + " positions");
  }
  const int K = static_cast<int>(lat.labels());
  for (int y : labels) {
    if (y < 0 || y >= K) throw CrfError("crf: label " + std::to_string(y) + " out of range");
  }
}

double lse2(double a, double b) {
  const double m = std::max(a, b);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (m == -std::numeric_limits<double>::infinity()) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

double score_path(const CrfLattice& lattice, std::span<const int> labels) {
  check_lattice(lattice);
  check_path(lattice, labels);
  double s = lattice.start(labels[0]) + lattice.stop(labels.back());
  for (std::size_t t = 0; t < labels.size(); ++t) {
    s += lattice.emissions(static_cast<Eigen::Index>(t), labels[t]);
    if (t + 1 < labels.size()) s += lattice.transitions(labels[t], labels[t + 1]);
  }
  return s;
}

Matrix forward_messages(const CrfLattice& lattice) {
  check_lattice(lattice);
  const Eigen::Index T = lattice.emissions.rows();
  const Eigen::Index K = lattice.emissions.cols();
  Matrix alpha(T, K);
  alpha.row(0) = lattice.start.transpose() + lattice.emissions.row(0);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index j = 0; j < K; ++j) {
      double acc = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < K; ++i) acc = lse2(acc, alpha(t - 1, i) + lattice.transitions(i, j));
      alpha(t, j) = acc + lattice.emissions(t, j);
    }
  }
  return alpha;
}

Matrix backward_messages(const CrfLattice& lattice) {
  check_lattice(lattice);
  const Eigen::Index T = lattice.emissions.rows();
  const Eigen::Index K = lattice.emissions.cols();
  Matrix beta(T, K);
  beta.row(T - 1) = lattice.stop.transpose();
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    for (Eigen::Index i = 0; i < K; ++i) {
      double acc = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < K; ++j) {
        acc = lse2(acc, lattice.transitions(i, j) + lattice.emissions(t + 1, j) + beta(t + 1, j));
      }
      beta(t, i) = acc;
    }
  }
  return beta;
}

namespace {

double log_partition_from(const CrfLattice& lattice, const Matrix& alpha) {
  const Eigen::Index T = alpha.rows();
  RowVector last = alpha.row(T - 1) + lattice.stop.transpose();
  return log_sum_exp({last.data(), static_cast<std::size_t>(last.size())});
}

}  // namespace

double log_partition(const CrfLattice& lattice) {
  return log_partition_from(lattice, forward_messages(lattice));
}

Matrix marginals(const CrfLattice& lattice) {
  const Matrix alpha = forward_messages(lattice);
  const Matrix beta = backward_messages(lattice);
  const double log_z = log_partition_from(lattice, alpha);
  return (alpha + beta).array().unaryExpr([log_z](double x) { return std::exp(x - log_z); });
}

LabelPath viterbi(const CrfLattice& lattice) {
  check_lattice(lattice);
  const Eigen::Index T = lattice.emissions.rows();
  const Eigen::Index K = lattice.emissions.cols();

  Matrix best(T, K);
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> back(T, K);
  best.row(0) = lattice.start.transpose() + lattice.emissions.row(0);
  back.row(0).setZero();
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index j = 0; j < K; ++j) {
      // Strict comparison keeps the lowest index on ties.
      double top = best(t - 1, 0) + lattice.transitions(0, j);
      int arg = 0;
      for (Eigen::Index i = 1; i < K; ++i) {
        const double s = best(t - 1, i) + lattice.transitions(i, j);
        if (s > top) {
          top = s;
          arg = static_cast<int>(i);
        }
      }
      best(t, j) = top + lattice.emissions(t, j);
      back(t, j) = arg;
    }
  }

  int last = 0;
  double top = best(T - 1, 0) + lattice.stop(0);
  for (Eigen::Index k = 1; k < K; ++k) {
    const double s = best(T - 1, k) + lattice.stop(k);
    if (s > top) {
      top = s;
      last = static_cast<int>(k);
    }
  }

  LabelPath path;
  path.labels.resize(static_cast<std::size_t>(T));
  path.labels.back() = last;
  for (Eigen::Index t = T - 1; t > 0; --t) {
    path.labels[static_cast<std::size_t>(t - 1)] = back(t, path.labels[static_cast<std::size_t>(t)]);
  }
  path.score = top;
  return path;
}

CrfLoss nll_and_grad(const CrfLattice& lattice, std::span<const int> gold) {
  check_lattice(lattice);
  check_path(lattice, gold);
  const Eigen::Index T = lattice.emissions.rows();
  const Eigen::Index K = lattice.emissions.cols();

  const Matrix alpha = forward_messages(lattice);
  const Matrix beta = backward_messages(lattice);
  const double log_z = log_partition_from(lattice, alpha);

  CrfLoss out;
  auto& g = out.grads;
  g.emissions = (alpha + beta).array().unaryExpr([log_z](double x) { return std::exp(x - log_z); });
  g.transitions = Matrix::Zero(K, K);
  g.start = g.emissions.row(0).transpose();
  g.stop = g.emissions.row(T - 1).transpose();

  for (Eigen::Index t = 0; t + 1 < T; ++t) {
    for (Eigen::Index i = 0; i < K; ++i) {
      for (Eigen::Index j = 0; j < K; ++j) {
        g.transitions(i, j) += std::exp(alpha(t, i) + lattice.transitions(i, j) +
                                        lattice.emissions(t + 1, j) + beta(t + 1, j) - log_z);
      }
    }
  }

  for (Eigen::Index t = 0; t < T; ++t) {
    const int y = gold[static_cast<std::size_t>(t)];
    g.emissions(t, y) -= 1.0;
    if (t + 1 < T) g.transitions(y, gold[static_cast<std::size_t>(t + 1)]) -= 1.0;
  }
  g.start(gold.front()) -= 1.0;
  g.stop(gold.back()) -= 1.0;

  // Clamp tiny negative values from rounding; the loss is nonnegative by construction.
  out.loss = std::max(0.0, log_z - score_path(lattice, gold));
  return out;
}

}  // namespace sentcomp
