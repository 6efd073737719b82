#include "sentcomp/train.hpp"

#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "sentcomp/optim.hpp"
#include "sentcomp/parallel.hpp"

namespace sentcomp {

std::size_t EmbeddingSource::width() const {
  return (table ? table->dim() : 0) + (contextual ? contextual->dim() : 0);
}

Matrix EmbeddingSource::operator()(const Tokens& tokens, std::string_view id) const {
  if (!table) throw EmbeddingError("embedding source has no static table");
  return embed(tokens, id, *table, contextual);
}

nlohmann::json to_json(const TrainReport& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"precision", e.validation.precision},
                      {"recall", e.validation.recall},
                      {"f1", e.validation.f1},
                      {"compression_rate", e.compression_rate}});
  }
  return nlohmann::json{{"initial_loss", r.initial_loss},
                        {"epochs", std::move(epochs)},
                        {"best_epoch", r.best_epoch},
                        {"best_f1", r.best_f1},
                        {"train_sentences", r.train_sentences},
                        {"validation_sentences", r.validation_sentences},
                        {"skipped_long", r.skipped_long},
                        {"stopped_early", r.stopped_early}};
}

EvalCounts evaluate(const ModelParams& params, Head head, const std::vector<LabeledSentence>& data,
                    const EmbeddingSource& embeddings, std::size_t threads) {
  std::vector<EvalCounts> per(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) {
    const auto& s = data[i];
    per[i] = count_deletions(decode(params, head, embeddings(s.tokens, s.id)), s.labels);
  });
  EvalCounts total;
  for (const auto& c : per) total += c;
  return total;
}

namespace {

// Seeds for the independent random streams derived from config.seed.
constexpr std::uint64_t kSplitStream = 0x5ca1ab1eULL;
constexpr std::uint64_t kTrainStream = 0x7a11ed0cULL;

}  // namespace

TrainResult train(const ModelConfig& config, const std::vector<LabeledSentence>& train_set,
                  const std::optional<std::vector<LabeledSentence>>& validation_set,
                  const EmbeddingSource& embeddings, const TrainOptions& options) {
  config.validate();
  if (embeddings.width() != config.input_dim()) {
    throw std::invalid_argument("embedding width " + std::to_string(embeddings.width()) +
                                " does not match the configured input width " +
                                std::to_string(config.input_dim()));
  }

  TrainReport report;
  std::vector<const LabeledSentence*> usable;
  for (const auto& s : train_set) {
    if (s.tokens.size() != s.labels.size()) {
      throw TrainingError(s.id, "sentence '" + s.id + "' has mismatched token and label counts");
    }
    if (s.tokens.empty()) continue;
    if (s.tokens.size() > config.max_length) {
      ++report.skipped_long;
      continue;
    }
    usable.push_back(&s);
  }
  if (report.skipped_long > 0) {
    spdlog::warn("skipped {} training sentences longer than {} tokens", report.skipped_long,
                 config.max_length);
  }
  if (usable.empty()) throw std::invalid_argument("training set is empty");

  std::vector<LabeledSentence> held_out;
  const std::vector<LabeledSentence>* validation = nullptr;
  if (validation_set) {
    validation = &*validation_set;
  } else {
    std::size_t n_val = static_cast<std::size_t>(
        std::llround(config.validation_fraction * static_cast<double>(usable.size())));
    if (n_val == 0 && config.validation_fraction > 0.0 && usable.size() > 1) n_val = 1;
    if (n_val > 0 && n_val < usable.size()) {
      Rng split(config.seed ^ kSplitStream);
      split.shuffle(usable);
      for (std::size_t i = 0; i < n_val; ++i) held_out.push_back(*usable[i]);
      usable.erase(usable.begin(), usable.begin() + static_cast<std::ptrdiff_t>(n_val));
    } else {
      for (const auto* s : usable) held_out.push_back(*s);
    }
    validation = &held_out;
  }
  report.train_sentences = usable.size();
  report.validation_sentences = validation->size();

  ModelParams params = init_params(config, config.seed);
  ModelParams best = params;
  Rng rng(config.seed ^ kTrainStream);

  AdamState adam;
  adam.hyper.lr = config.lr;

  std::vector<std::vector<int>> gold(usable.size());
  for (std::size_t i = 0; i < usable.size(); ++i) gold[i] = label_indices(usable[i]->labels);

  double init_total = 0.0;
  for (std::size_t i = 0; i < usable.size(); ++i) {
    const auto& s = *usable[i];
    const double l = loss(params, config.head, embeddings(s.tokens, s.id), gold[i]);
    if (!std::isfinite(l)) throw TrainingError(s.id, "non-finite loss on sentence '" + s.id + "'");
    init_total += l;
  }
  report.initial_loss = init_total / static_cast<double>(usable.size());

  std::vector<std::size_t> order(usable.size());
  std::iota(order.begin(), order.end(), 0);
  ModelParams grads(config);
  double best_f1 = -1.0;
  int since_best = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t end = std::min(order.size(), b + config.batch_size);
      grads.set_zero();
      for (std::size_t k = b; k < end; ++k) {
        const auto& s = *usable[order[k]];
        const double l = loss_and_grad(params, config.head, embeddings(s.tokens, s.id), gold[order[k]],
                                       grads, &rng, config.dropout);
        if (!std::isfinite(l)) throw TrainingError(s.id, "non-finite loss on sentence '" + s.id + "'");
        epoch_total += l;
      }
      if (end - b > 1) grads *= 1.0 / static_cast<double>(end - b);
      clip_gradients(grads.views(), config.clip_norm);
      auto param_views = params.views();
      std::vector<ConstTensorView> grad_views;
      for (auto& v : grads.views()) grad_views.push_back({v.name, v.shape, v.values});
      try {
        adam_step(param_views, grad_views, adam);
      } catch (const NonFiniteGradient& e) {
        const auto& last = usable[order[end - 1]]->id;
        throw TrainingError(last, std::string(e.what()) + " in batch ending at sentence '" + last + "'");
      }
      for (auto& v : param_views) round_to_float(v.values);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_total / static_cast<double>(usable.size());
    const EvalCounts counts = evaluate(params, config.head, *validation, embeddings, options.threads);
    record.validation = scores_from(counts);
    record.compression_rate = counts.orig_len > 0 ? compression_rate(counts) : 0.0;
    report.epochs.push_back(record);
    spdlog::info("epoch {:>3}  loss {:.6f}  val P {:.4f} R {:.4f} F1 {:.4f}  CR {:.3f}", epoch,
                 record.train_loss, record.validation.precision, record.validation.recall,
                 record.validation.f1, record.compression_rate);
    if (options.on_epoch) options.on_epoch(record);

    if (record.validation.f1 > best_f1) {
      best_f1 = record.validation.f1;
      best = params;
      report.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      report.stopped_early = epoch < config.epochs;
      spdlog::info("no validation improvement for {} epochs; stopping", since_best);
      break;
    }
  }
  report.best_f1 = std::max(0.0, best_f1);
  return TrainResult{std::move(best), std::move(report)};
}

}  // namespace sentcomp
