#include "sentcomp/eval.hpp"

#include <stdexcept>
#include <string>

namespace sentcomp {

EvalCounts& EvalCounts::operator+=(const EvalCounts& other) {
  correct_del += other.correct_del;
  all_del += other.all_del;
  del += other.del;
  orig_len += other.orig_len;
  comp_len += other.comp_len;
  return *this;
}

EvalCounts count_deletions(const Labels& pred, const Labels& gold) {
  if (pred.size() != gold.size()) {
    throw std::invalid_argument("eval: prediction has " + std::to_string(pred.size()) +
                                " labels but gold has " + std::to_string(gold.size()));
  }
  EvalCounts c;
  c.orig_len = pred.size();
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == Label::D;
    const bool g = gold[i] == Label::D;
    c.del += p;
    c.all_del += g;
    c.correct_del += p && g;
    c.comp_len += !p;
  }
  return c;
}

Scores scores_from(const EvalCounts& c) {
  Scores s;
  s.precision = c.del > 0 ? static_cast<double>(c.correct_del) / static_cast<double>(c.del) : 0.0;
  s.recall = c.all_del > 0 ? static_cast<double>(c.correct_del) / static_cast<double>(c.all_del) : 0.0;
  const double denom = s.precision + s.recall;
  s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  return s;
}

namespace {

void check_sizes(std::size_t pred, std::size_t gold) {
  if (pred != gold) {
    throw std::invalid_argument("eval: " + std::to_string(pred) + " predicted sentences but " +
                                std::to_string(gold) + " gold sentences");
  }
}

}  // namespace

Scores deletion_f1(const std::vector<Labels>& pred, const std::vector<Labels>& gold) {
  check_sizes(pred.size(), gold.size());
  EvalCounts total;
  for (std::size_t i = 0; i < pred.size(); ++i) total += count_deletions(pred[i], gold[i]);
  return scores_from(total);
}

Scores macro_deletion_f1(const std::vector<Labels>& pred, const std::vector<Labels>& gold) {
  check_sizes(pred.size(), gold.size());
  Scores mean;
  if (pred.empty()) return mean;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const Scores s = scores_from(count_deletions(pred[i], gold[i]));
    mean.precision += s.precision;
    mean.recall += s.recall;
    mean.f1 += s.f1;
  }
  const auto n = static_cast<double>(pred.size());
  mean.precision /= n;
  mean.recall /= n;
  mean.f1 /= n;
  return mean;
}

double compression_rate(const std::vector<Tokens>& compressions, const std::vector<Tokens>& originals) {
  check_sizes(compressions.size(), originals.size());
  std::size_t comp = 0;
  std::size_t orig = 0;
  for (std::size_t i = 0; i < originals.size(); ++i) {
    comp += compressions[i].size();
    orig += originals[i].size();
  }
  if (orig == 0) throw std::invalid_argument("compression rate of an empty corpus");
  return static_cast<double>(comp) / static_cast<double>(orig);
}

double compression_rate(const EvalCounts& counts) {
  if (counts.orig_len == 0) throw std::invalid_argument("compression rate of an empty corpus");
  return static_cast<double>(counts.comp_len) / static_cast<double>(counts.orig_len);
}

nlohmann::json to_json(const MetricsReport& r) {
  return nlohmann::json{{"precision", r.micro.precision},
                        {"recall", r.micro.recall},
                        {"f1", r.micro.f1},
                        {"compression_rate", r.compression_rate},
                        {"sentences", r.sentences},
                        {"skipped", r.skipped},
                        {"macro_precision", r.macro.precision},
                        {"macro_recall", r.macro.recall},
                        {"macro_f1", r.macro.f1}};
}

}  // namespace sentcomp
