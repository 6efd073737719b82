#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentcomp/corpus.hpp"
#include "sentcomp/crf.hpp"
#include "sentcomp/lstm.hpp"
#include "sentcomp/tensor.hpp"

namespace sentcomp {

enum class Head { kCrf, kSoftmax };

std::string head_name(Head head);
Head head_from_name(const std::string& name);

struct ModelConfig {
  std::size_t static_dim = 0;
  std::size_t contextual_dim = 0;
  std::size_t hidden_size = 256;  // per direction
  std::size_t label_count = kLabelCount;
  int epochs = 100;
  double lr = 1e-3;
  double clip_norm = 5.0;
  std::size_t batch_size = 1;
  double dropout = 0.0;
  std::uint64_t seed = 0;
  Head head = Head::kCrf;
  int patience = 10;
  std::size_t max_length = 512;
  double validation_fraction = 0.05;

  std::size_t input_dim() const { return static_dim + contextual_dim; }
  void validate() const;  // throws std::invalid_argument
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

/// Every trainable tensor. The same type holds gradients.
struct ModelParams {
  LstmParams fwd;
  LstmParams bwd;
  Matrix emission_w;  // 2H x K
  Vector emission_b;  // K
  Matrix transitions;  // K x K
  Vector start;        // K
  Vector stop;         // K

  ModelParams() = default;
  /// Zero tensors shaped for `config`.
  explicit ModelParams(const ModelConfig& config);

  /// Fixed order: the order of the checkpoint manifest.
  std::vector<TensorView> views();
  std::vector<ConstTensorView> views() const;

  void set_zero();
  ModelParams& operator+=(const ModelParams& other);
  ModelParams& operator*=(double scale);
};

/// Glorot-uniform weights, zero biases except the LSTM forget-gate block (1.0),
/// zero CRF potentials. Values are rounded to float32; same seed, same bits.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

struct ForwardCache {
  Matrix inputs;  // after dropout
  BiLstmCache bilstm;
  Matrix states;  // T x 2H
};

/// Emissions from BiLSTM states through the affine projection, plus the shared
/// CRF potentials.
CrfLattice forward(const ModelParams& params, const Matrix& embeddings);
CrfLattice forward(const ModelParams& params, const Matrix& embeddings, ForwardCache& cache);

/// Per-sentence training objective and its gradient, accumulated into `grads`.
/// For the softmax head the loss is the summed per-token cross-entropy on the
/// emissions and the CRF potentials receive no gradient. When `dropout_rng` is
/// non-null, inverted dropout with rate `dropout` is applied to the inputs.
double loss_and_grad(const ModelParams& params, Head head, const Matrix& embeddings,
                     std::span<const int> gold, ModelParams& grads, Rng* dropout_rng = nullptr,
                     double dropout = 0.0);

/// Loss only, no dropout.
double loss(const ModelParams& params, Head head, const Matrix& embeddings, std::span<const int> gold);

struct Prediction {
  Labels labels;
  Tokens compression;
};

Labels decode(const ModelParams& params, Head head, const Matrix& embeddings);
Prediction predict(const ModelParams& params, Head head, const Tokens& tokens, const Matrix& embeddings);

std::vector<int> label_indices(const Labels& labels);
Labels labels_from_indices(std::span<const int> indices);

}  // namespace sentcomp
