#include <doctest.h>

#include <cmath>

#include "sentcomp/crf.hpp"
#include "support.hpp"

using namespace sentcomp;
using namespace sentcomp::testing;

namespace {

CrfLattice two_step_example() {
  CrfLattice lat = zero_lattice(2);
  lat.emissions << 1, 0, 0, 2;
  return lat;
}

}  // namespace

TEST_CASE("score_path") {
  const std::vector<int> any{1, 0, 1};
  CHECK(score_path(zero_lattice(3), any) == 0.0);
  CHECK(score_path(two_step_example(), std::vector<int>{0, 1}) == 3.0);
  CHECK_THROWS_AS(score_path(zero_lattice(3), std::vector<int>{0, 1}), CrfError);
  CHECK_THROWS_AS(score_path(zero_lattice(2), std::vector<int>{0, 2}), CrfError);

  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto lat = random_lattice(1 + rng.below(10), 2, rng);
    std::vector<int> y(lat.length());
    for (auto& v : y) v = static_cast<int>(rng.below(2));
    CHECK(score_path(lat, y) == doctest::Approx(resum_score(lat, y)).epsilon(1e-12));
  }
}

TEST_CASE("log_partition") {
  CHECK(log_partition(zero_lattice(3)) == doctest::Approx(std::log(8.0)).epsilon(1e-12));
  CHECK(std::abs(log_partition(zero_lattice(3)) - 2.0794415) < 1e-7);

  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto lat = random_lattice(1 + rng.below(8), 2, rng);
    const auto bf = enumerate_paths(lat);
    const double log_z = log_partition(lat);
    CHECK(std::abs(log_z - bf.log_z) < 1e-8);
    for (double s : bf.scores) CHECK(log_z >= s);
    double total = 0.0;
    for (double s : bf.scores) total += std::exp(s - log_z);
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
}

TEST_CASE("log_partition stays finite on long sentences with large potentials") {
  Rng rng(3);
  const auto lat = random_lattice(1019, 2, rng, 50.0);
  CHECK(std::isfinite(log_partition(lat)));
  const Matrix m = marginals(lat);
  CHECK(all_finite(as_span(m)));
}

TEST_CASE("marginals") {
  const Matrix uniform = marginals(zero_lattice(4));
  CHECK((uniform.array() - 0.5).abs().maxCoeff() < 1e-15);

  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto lat = random_lattice(1 + rng.below(8), 2, rng);
    const auto bf = enumerate_paths(lat);
    const Matrix m = marginals(lat);
    CHECK((m - bf.marginals).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((m.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
    CHECK(m.minCoeff() >= 0.0);
    CHECK(m.maxCoeff() <= 1.0);
  }
}

TEST_CASE("marginals are the derivative of logZ with respect to emissions") {
  Rng rng(5);
  auto lat = random_lattice(6, 2, rng);
  const Matrix m = marginals(lat);
  for (Eigen::Index i = 0; i < lat.emissions.size(); ++i) {
    const double fd = central_difference(lat.emissions.data() + i, 1e-5, [&] { return log_partition(lat); });
    CHECK(std::abs(fd - m.data()[i]) < 1e-6);
  }
}

TEST_CASE("viterbi") {
  const auto path = viterbi(two_step_example());
  CHECK(path.labels == std::vector<int>{0, 1});
  CHECK(path.score == 3.0);
  CHECK(viterbi(zero_lattice(5)).labels == std::vector<int>(5, 0));

  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto lat = random_lattice(1 + rng.below(8), 2, rng);
    const auto bf = enumerate_paths(lat);
    const auto best = viterbi(lat);
    CHECK(best.labels == bf.best_path);
    CHECK(std::abs(best.score - bf.best_score) < 1e-9);
    CHECK(std::abs(best.score - score_path(lat, best.labels)) < 1e-9);
  }
}

TEST_CASE("viterbi ties on integer lattices prefer the lower label at each backtrack step") {
  // Small integer potentials produce many exact ties.
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    auto lat = zero_lattice(1 + rng.below(7));
    for (Eigen::Index i = 0; i < lat.emissions.size(); ++i) lat.emissions.data()[i] = static_cast<double>(rng.below(2));
    for (Eigen::Index i = 0; i < lat.transitions.size(); ++i) lat.transitions.data()[i] = static_cast<double>(rng.below(2));
    CHECK(viterbi(lat).labels == backtrack_tie_winner(enumerate_paths(lat)));
  }
}

TEST_CASE("viterbi is invariant to per-position emission shifts") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto lat = random_lattice(2 + rng.below(20), 2, rng);
    const auto before = viterbi(lat).labels;
    const auto t = static_cast<Eigen::Index>(rng.below(lat.length()));
    lat.emissions.row(t).array() += rng.uniform(-3.0, 3.0);
    CHECK(viterbi(lat).labels == before);
  }
}

TEST_CASE("nll_and_grad") {
  SUBCASE("uniform lattice") {
    const auto r = nll_and_grad(zero_lattice(3), std::vector<int>{0, 1, 0});
    CHECK(r.loss == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("near-deterministic gold path") {
    const std::vector<int> gold{0, 1, 1, 0, 1};
    auto lat = zero_lattice(5);
    for (Eigen::Index t = 0; t < 5; ++t) {
      for (int k = 0; k < 2; ++k) lat.emissions(t, k) = k == gold[static_cast<std::size_t>(t)] ? 10.0 : -10.0;
    }
    const auto r = nll_and_grad(lat, gold);
    CHECK(r.loss < 1e-3);
    CHECK(r.loss >= 0.0);
  }
  SUBCASE("invalid gold path") {
    CHECK_THROWS_AS(nll_and_grad(zero_lattice(3), std::vector<int>{0, 1}), CrfError);
    CHECK_THROWS_AS(nll_and_grad(zero_lattice(2), std::vector<int>{0, -1}), CrfError);
  }
}

TEST_CASE("nll gradients: emission identity and finite differences for every potential") {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    auto lat = random_lattice(1 + rng.below(8), 2, rng);
    std::vector<int> gold(lat.length());
    for (auto& y : gold) y = static_cast<int>(rng.below(2));
    const auto r = nll_and_grad(lat, gold);

    Matrix identity = marginals(lat);
    for (std::size_t t = 0; t < gold.size(); ++t) identity(static_cast<Eigen::Index>(t), gold[t]) -= 1.0;
    CHECK((r.grads.emissions - identity).cwiseAbs().maxCoeff() < 1e-12);

    auto objective = [&] { return log_partition(lat) - resum_score(lat, gold); };
    auto check_all = [&](double* values, const double* grads, Eigen::Index n) {
      for (Eigen::Index i = 0; i < n; ++i) {
        CHECK(std::abs(central_difference(values + i, 1e-5, objective) - grads[i]) < 1e-5);
      }
    };
    check_all(lat.emissions.data(), r.grads.emissions.data(), lat.emissions.size());
    check_all(lat.transitions.data(), r.grads.transitions.data(), lat.transitions.size());
    check_all(lat.start.data(), r.grads.start.data(), lat.start.size());
    check_all(lat.stop.data(), r.grads.stop.data(), lat.stop.size());
  }
}

TEST_CASE("general label count") {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto lat = random_lattice(1 + rng.below(5), 3, rng);
    const auto bf = enumerate_paths(lat);
    CHECK(std::abs(log_partition(lat) - bf.log_z) < 1e-8);
    CHECK(viterbi(lat).labels == bf.best_path);
  }
}
