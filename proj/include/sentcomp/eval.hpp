#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "sentcomp/corpus.hpp"

namespace sentcomp {

/// Pooled deletion counts. Merging is associative, so partial counts from
/// separate workers can be summed in any grouping.
struct EvalCounts {
  std::size_t correct_del = 0;  // deleted by both prediction and gold, same position
  std::size_t all_del = 0;      // gold deletions
  std::size_t del = 0;          // predicted deletions
  std::size_t orig_len = 0;
  std::size_t comp_len = 0;     // predicted compression length

  EvalCounts& operator+=(const EvalCounts& other);
  friend bool operator==(const EvalCounts&, const EvalCounts&) = default;
};

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Counts for one sentence; throws std::invalid_argument on length mismatch.
EvalCounts count_deletions(const Labels& pred, const Labels& gold);

/// R = correct/all_del, P = correct/del, F1 = 2PR/(P+R); zero denominators give 0.
Scores scores_from(const EvalCounts& counts);

/// Micro-averaged over the corpus (pooled counts).
Scores deletion_f1(const std::vector<Labels>& pred, const std::vector<Labels>& gold);

/// Mean of per-sentence scores; reported next to the micro figure.
Scores macro_deletion_f1(const std::vector<Labels>& pred, const std::vector<Labels>& gold);

/// Total compressed tokens over total original tokens. Throws on an empty corpus.
double compression_rate(const std::vector<Tokens>& compressions, const std::vector<Tokens>& originals);
double compression_rate(const EvalCounts& counts);

struct MetricsReport {
  Scores micro;
  Scores macro;
  double compression_rate = 0.0;
  std::size_t sentences = 0;
  std::size_t skipped = 0;
};

/// Flat object: precision, recall, f1, compression_rate, sentences, skipped,
/// plus macro_precision, macro_recall, macro_f1.
nlohmann::json to_json(const MetricsReport& report);

}  // namespace sentcomp
