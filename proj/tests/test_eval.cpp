#include <doctest.h>

#include "sentcomp/eval.hpp"
#include "support.hpp"

using namespace sentcomp;

namespace {

Labels deleting(std::size_t n, std::initializer_list<std::size_t> positions) {
  Labels out(n, Label::O);
  for (auto p : positions) out[p] = Label::D;
  return out;
}

Labels random_labels(std::size_t n, Rng& rng, double p_delete) {
  Labels out(n);
  for (auto& l : out) l = rng.uniform() < p_delete ? Label::D : Label::O;
  return out;
}

}  // namespace

TEST_CASE("worked example: P = 1, R = 0.5, F1 = 2/3") {
  const auto s = deletion_f1({deleting(8, {2, 3})}, {deleting(8, {2, 3, 4, 5})});
  CHECK(s.precision == 1.0);
  CHECK(s.recall == 0.5);
  CHECK(s.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("identity and degenerate cases") {
  const auto gold = deleting(5, {0, 4});
  const auto same = deletion_f1({gold}, {gold});
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.f1 == 1.0);

  const auto nothing = deletion_f1({Labels(5, Label::O)}, {gold});
  CHECK(nothing.precision == 0.0);
  CHECK(nothing.recall == 0.0);
  CHECK(nothing.f1 == 0.0);

  CHECK(deletion_f1({gold}, {Labels(5, Label::O)}).recall == 0.0);
  CHECK_THROWS_AS(deletion_f1({gold}, {Labels(4, Label::O)}), std::invalid_argument);
  CHECK_THROWS_AS(deletion_f1({gold}, {}), std::invalid_argument);
}

TEST_CASE("positional matching") {
  // Same number of deletions, different positions: nothing is correct.
  const auto s = deletion_f1({deleting(4, {0})}, {deleting(4, {1})});
  CHECK(s.f1 == 0.0);
}

TEST_CASE("micro average pools counts across sentences") {
  const std::vector<Labels> pred{deleting(4, {0}), deleting(6, {0, 1, 2, 3})};
  const std::vector<Labels> gold{deleting(4, {0, 1}), deleting(6, {0})};
  // correct = 1 + 1, del = 1 + 4, all_del = 2 + 1
  const auto micro = deletion_f1(pred, gold);
  CHECK(micro.precision == doctest::Approx(2.0 / 5.0));
  CHECK(micro.recall == doctest::Approx(2.0 / 3.0));
  const auto macro = macro_deletion_f1(pred, gold);
  CHECK(macro.precision == doctest::Approx((1.0 + 0.25) / 2.0));
  CHECK(macro.recall == doctest::Approx((0.5 + 1.0) / 2.0));
}

TEST_CASE("property: bounds, F1 identity, and pred/gold symmetry") {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Labels> pred, gold;
    const std::size_t n = 1 + rng.below(6);
    EvalCounts split_a, split_b;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t len = 1 + rng.below(20);
      pred.push_back(random_labels(len, rng, rng.uniform()));
      gold.push_back(random_labels(len, rng, rng.uniform()));
      (i % 2 ? split_a : split_b) += count_deletions(pred.back(), gold.back());
    }
    const auto s = deletion_f1(pred, gold);
    CHECK(s.precision >= 0.0);
    CHECK(s.precision <= 1.0);
    CHECK(s.recall >= 0.0);
    CHECK(s.recall <= 1.0);
    CHECK(s.f1 >= 0.0);
    CHECK(s.f1 <= 1.0);
    CHECK(s.f1 * (s.precision + s.recall) == doctest::Approx(2.0 * s.precision * s.recall));

    const auto swapped = deletion_f1(gold, pred);
    CHECK(swapped.precision == doctest::Approx(s.recall));
    CHECK(swapped.recall == doctest::Approx(s.precision));
    CHECK(swapped.f1 == doctest::Approx(s.f1));

    // Partial counts merge to the pooled figure.
    EvalCounts merged = split_a;
    merged += split_b;
    const auto pooled = scores_from(merged);
    CHECK(pooled.f1 == doctest::Approx(s.f1));
    CHECK(merged.correct_del <= std::min(merged.all_del, merged.del));
  }
}

TEST_CASE("compression rate") {
  const std::vector<Tokens> orig{{"a", "b", "c"}, {"d"}};
  CHECK(compression_rate(orig, orig) == 1.0);
  CHECK(compression_rate({{"a"}, {"d"}}, orig) == 0.5);
  CHECK_THROWS_AS(compression_rate(std::vector<Tokens>{}, std::vector<Tokens>{}), std::invalid_argument);

  // Mayweather pair: 12 kept of 34.
  EvalCounts mayweather = count_deletions(deleting(34, {11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25,
                                                   26, 27, 28, 29, 30, 31, 32}),
                                      Labels(34, Label::O));
  CHECK(mayweather.comp_len == 12);
  CHECK(compression_rate(mayweather) == doctest::Approx(12.0 / 34.0));
  CHECK(std::abs(compression_rate(mayweather) - 0.353) < 0.0005);
}

TEST_CASE("metrics JSON is flat") {
  MetricsReport r;
  r.micro = {1.0, 0.5, 2.0 / 3.0};
  r.compression_rate = 0.4;
  r.sentences = 3;
  r.skipped = 1;
  const auto j = to_json(r);
  for (const char* key : {"precision", "recall", "f1", "compression_rate", "sentences", "skipped"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["f1"].get<double>() == doctest::Approx(0.6667).epsilon(1e-3));
}
