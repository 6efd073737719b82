#include "sentcomp/model.hpp"

#include <cmath>
#include <stdexcept>

namespace sentcomp {

std::string head_name(Head head) { return head == Head::kCrf ? "crf" : "softmax"; }

Head head_from_name(const std::string& name) {
  if (name == "crf") return Head::kCrf;
  if (name == "softmax") return Head::kSoftmax;
  throw std::invalid_argument("unknown head '" + name + "' (expected crf or softmax)");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("model config: " + what); };
  if (input_dim() == 0) fail("input dimension must be positive");
  if (hidden_size == 0) fail("hidden size must be positive");
  if (label_count != kLabelCount) fail("label count must be 2");
  if (epochs < 1) fail("epochs must be at least 1");
  if (!(lr > 0.0)) fail("learning rate must be positive");
  if (!(clip_norm > 0.0)) fail("clip norm must be positive");
  if (batch_size < 1) fail("batch size must be at least 1");
  if (!(dropout >= 0.0 && dropout <= 0.5)) fail("dropout must lie in [0, 0.5]");
  if (patience < 1) fail("patience must be at least 1");
  if (max_length < 1) fail("max length must be at least 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) fail("validation fraction must lie in [0, 1)");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"static_dim", c.static_dim},
                     {"contextual_dim", c.contextual_dim},
                     {"hidden_size", c.hidden_size},
                     {"label_count", c.label_count},
                     {"epochs", c.epochs},
                     {"lr", c.lr},
                     {"clip_norm", c.clip_norm},
                     {"batch_size", c.batch_size},
                     {"dropout", c.dropout},
                     {"seed", c.seed},
                     {"head", head_name(c.head)},
                     {"patience", c.patience},
                     {"max_length", c.max_length},
                     {"validation_fraction", c.validation_fraction}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  j.at("static_dim").get_to(c.static_dim);
  j.at("contextual_dim").get_to(c.contextual_dim);
  j.at("hidden_size").get_to(c.hidden_size);
  j.at("label_count").get_to(c.label_count);
  j.at("epochs").get_to(c.epochs);
  j.at("lr").get_to(c.lr);
  j.at("clip_norm").get_to(c.clip_norm);
  j.at("batch_size").get_to(c.batch_size);
  j.at("dropout").get_to(c.dropout);
  j.at("seed").get_to(c.seed);
  c.head = head_from_name(j.at("head").get<std::string>());
  j.at("patience").get_to(c.patience);
  j.at("max_length").get_to(c.max_length);
  j.at("validation_fraction").get_to(c.validation_fraction);
}

ModelParams::ModelParams(const ModelConfig& config)
    : fwd(config.input_dim(), config.hidden_size),
      bwd(config.input_dim(), config.hidden_size),
      emission_w(Matrix::Zero(2 * config.hidden_size, config.label_count)),
      emission_b(Vector::Zero(config.label_count)),
      transitions(Matrix::Zero(config.label_count, config.label_count)),
      start(Vector::Zero(config.label_count)),
      stop(Vector::Zero(config.label_count)) {}

namespace {

std::vector<std::size_t> shape_of(const Matrix& m) {
  return {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
}
std::vector<std::size_t> shape_of(const Vector& v) { return {static_cast<std::size_t>(v.size())}; }

template <typename Params, typename View>
std::vector<View> collect(Params& p) {
  return {
      View{"lstm_fwd.w_ih", shape_of(p.fwd.w_ih), as_span(p.fwd.w_ih)},
      View{"lstm_fwd.w_hh", shape_of(p.fwd.w_hh), as_span(p.fwd.w_hh)},
      View{"lstm_fwd.b", shape_of(p.fwd.b), as_span(p.fwd.b)},
      View{"lstm_bwd.w_ih", shape_of(p.bwd.w_ih), as_span(p.bwd.w_ih)},
      View{"lstm_bwd.w_hh", shape_of(p.bwd.w_hh), as_span(p.bwd.w_hh)},
      View{"lstm_bwd.b", shape_of(p.bwd.b), as_span(p.bwd.b)},
      View{"emission.w", shape_of(p.emission_w), as_span(p.emission_w)},
      View{"emission.b", shape_of(p.emission_b), as_span(p.emission_b)},
      View{"crf.transitions", shape_of(p.transitions), as_span(p.transitions)},
      View{"crf.start", shape_of(p.start), as_span(p.start)},
      View{"crf.stop", shape_of(p.stop), as_span(p.stop)},
  };
}

}  // namespace

std::vector<TensorView> ModelParams::views() { return collect<ModelParams, TensorView>(*this); }

std::vector<ConstTensorView> ModelParams::views() const {
  return collect<const ModelParams, ConstTensorView>(*this);
}

void ModelParams::set_zero() {
  for (auto& v : views()) std::fill(v.values.begin(), v.values.end(), 0.0);
}

ModelParams& ModelParams::operator+=(const ModelParams& other) {
  auto dst = views();
  auto src = other.views();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i].values.size() != src[i].values.size()) {
      throw ShapeError("parameter sum: shape mismatch in '" + dst[i].name + "'");
    }
    for (std::size_t k = 0; k < dst[i].values.size(); ++k) dst[i].values[k] += src[i].values[k];
  }
  return *this;
}

ModelParams& ModelParams::operator*=(double scale) {
  for (auto& v : views()) {
    for (auto& x : v.values) x *= scale;
  }
  return *this;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p(config);
  Rng rng(seed);
  const std::size_t E = config.input_dim();
  const std::size_t H = config.hidden_size;
  const std::size_t K = config.label_count;
  for (LstmParams* dir : {&p.fwd, &p.bwd}) {
    glorot_uniform(as_span(dir->w_ih), E, 4 * H, rng);
    glorot_uniform(as_span(dir->w_hh), H, 4 * H, rng);
    dir->b.segment(static_cast<Eigen::Index>(H), static_cast<Eigen::Index>(H)).setOnes();
  }
  glorot_uniform(as_span(p.emission_w), 2 * H, K, rng);
  for (auto& v : p.views()) round_to_float(v.values);
  return p;
}

CrfLattice forward(const ModelParams& params, const Matrix& embeddings, ForwardCache& cache) {
  if (embeddings.cols() != params.fwd.w_ih.cols()) {
    throw ShapeError("model: embedding width " + std::to_string(embeddings.cols()) +
                     " does not match the configured input width " +
                     std::to_string(params.fwd.w_ih.cols()));
  }
  cache.inputs = embeddings;
  cache.states = bilstm_forward(params.fwd, params.bwd, cache.inputs, cache.bilstm);
  CrfLattice lattice;
  lattice.emissions = cache.states * params.emission_w;
  lattice.emissions.rowwise() += params.emission_b.transpose();
  lattice.transitions = params.transitions;
  lattice.start = params.start;
  lattice.stop = params.stop;
  return lattice;
}

CrfLattice forward(const ModelParams& params, const Matrix& embeddings) {
  ForwardCache cache;
  return forward(params, embeddings, cache);
}

namespace {

// Summed token cross-entropy over emissions; writes dLoss/demissions.
double softmax_loss(const Matrix& emissions, std::span<const int> gold, Matrix* grad) {
  if (gold.size() != static_cast<std::size_t>(emissions.rows())) {
    throw CrfError("softmax head: label count does not match sentence length");
  }
  double total = 0.0;
  if (grad) grad->resize(emissions.rows(), emissions.cols());
  for (Eigen::Index t = 0; t < emissions.rows(); ++t) {
    const RowVector row = emissions.row(t);
    const double lse = log_sum_exp({row.data(), static_cast<std::size_t>(row.size())});
    const int y = gold[static_cast<std::size_t>(t)];
    if (y < 0 || y >= emissions.cols()) throw CrfError("softmax head: label out of range");
    total += lse - row(y);
    if (grad) {
      for (Eigen::Index k = 0; k < row.size(); ++k) (*grad)(t, k) = std::exp(row(k) - lse);
      (*grad)(t, y) -= 1.0;
    }
  }
  return total;
}

}  // namespace

double loss_and_grad(const ModelParams& params, Head head, const Matrix& embeddings,
                     std::span<const int> gold, ModelParams& grads, Rng* dropout_rng, double dropout) {
  ForwardCache cache;
  Matrix inputs = embeddings;
  if (dropout_rng && dropout > 0.0) {
    const double keep_scale = 1.0 / (1.0 - dropout);
    for (Eigen::Index i = 0; i < inputs.size(); ++i) {
      inputs.data()[i] = dropout_rng->uniform() < dropout ? 0.0 : inputs.data()[i] * keep_scale;
    }
  }
  const CrfLattice lattice = forward(params, inputs, cache);

  double value = 0.0;
  Matrix d_emissions;
  if (head == Head::kCrf) {
    CrfLoss crf = nll_and_grad(lattice, gold);
    value = crf.loss;
    d_emissions = std::move(crf.grads.emissions);
    grads.transitions += crf.grads.transitions;
    grads.start += crf.grads.start;
    grads.stop += crf.grads.stop;
  } else {
    value = softmax_loss(lattice.emissions, gold, &d_emissions);
  }

  grads.emission_w.noalias() += cache.states.transpose() * d_emissions;
  grads.emission_b += d_emissions.colwise().sum().transpose();
  const Matrix d_states = d_emissions * params.emission_w.transpose();
  BiLstmGrads g = bilstm_backward(params.fwd, params.bwd, cache.bilstm, d_states);
  grads.fwd += g.fwd;
  grads.bwd += g.bwd;
  return value;
}

double loss(const ModelParams& params, Head head, const Matrix& embeddings, std::span<const int> gold) {
  const CrfLattice lattice = forward(params, embeddings);
  if (head == Head::kCrf) {
    return log_partition(lattice) - score_path(lattice, gold);
  }
  return softmax_loss(lattice.emissions, gold, nullptr);
}

std::vector<int> label_indices(const Labels& labels) {
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = static_cast<int>(labels[i]);
  return out;
}

Labels labels_from_indices(std::span<const int> indices) {
  Labels out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) out[i] = indices[i] == 1 ? Label::D : Label::O;
  return out;
}

Labels decode(const ModelParams& params, Head head, const Matrix& embeddings) {
  const CrfLattice lattice = forward(params, embeddings);
  if (head == Head::kCrf) return labels_from_indices(viterbi(lattice).labels);

  std::vector<int> best(lattice.length());
  for (Eigen::Index t = 0; t < lattice.emissions.rows(); ++t) {
    Eigen::Index arg = 0;
    for (Eigen::Index k = 1; k < lattice.emissions.cols(); ++k) {
      if (lattice.emissions(t, k) > lattice.emissions(t, arg)) arg = k;
    }
    best[static_cast<std::size_t>(t)] = static_cast<int>(arg);
  }
  return labels_from_indices(best);
}

Prediction predict(const ModelParams& params, Head head, const Tokens& tokens, const Matrix& embeddings) {
  if (static_cast<std::size_t>(embeddings.rows()) != tokens.size()) {
    throw ShapeError("predict: " + std::to_string(tokens.size()) + " tokens but " +
                     std::to_string(embeddings.rows()) + " embedding rows");
  }
  Prediction out;
  out.labels = decode(params, head, embeddings);
  out.compression = apply_labels(tokens, out.labels);
  return out;
}

}  // namespace sentcomp
