#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentcomp/corpus.hpp"
#include "sentcomp/embeddings.hpp"
#include "sentcomp/eval.hpp"
#include "sentcomp/model.hpp"

namespace sentcomp {

/// Maps a sentence to its T x E input matrix.
struct EmbeddingSource {
  const EmbeddingTable* table = nullptr;
  const ContextualStore* contextual = nullptr;

  std::size_t width() const;
  Matrix operator()(const Tokens& tokens, std::string_view id) const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;  // mean per-sentence loss over the epoch
  Scores validation;
  double compression_rate = 0.0;
};

struct TrainReport {
  double initial_loss = 0.0;  // mean per-sentence loss at the initial parameters
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_f1 = 0.0;
  std::size_t train_sentences = 0;
  std::size_t validation_sentences = 0;
  std::size_t skipped_long = 0;
  bool stopped_early = false;
};

nlohmann::json to_json(const TrainReport& report);

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& sentence_id, const std::string& what)
      : std::runtime_error(what), sentence_id_(sentence_id) {}
  const std::string& sentence_id() const { return sentence_id_; }

 private:
  std::string sentence_id_;
};

struct TrainResult {
  ModelParams params;  // parameters of the best validation epoch
  TrainReport report;
};

struct TrainOptions {
  std::size_t threads = 1;  // validation decoding only; updates are single-threaded
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Shuffled (seeded) mini-batch training with clipped Adam updates and
/// validation F1 model selection with early stopping. Without a validation set,
/// a seeded `validation_fraction` of the training data is held out.
TrainResult train(const ModelConfig& config, const std::vector<LabeledSentence>& train_set,
                  const std::optional<std::vector<LabeledSentence>>& validation_set,
                  const EmbeddingSource& embeddings, const TrainOptions& options = {});

/// Decodes every sentence and pools deletion counts.
EvalCounts evaluate(const ModelParams& params, Head head, const std::vector<LabeledSentence>& data,
                    const EmbeddingSource& embeddings, std::size_t threads = 1);

}  // namespace sentcomp
