#include "sentcomp/lstm.hpp"

#include <cmath>
#include <string>

namespace sentcomp {

namespace {

std::string dims(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

LstmParams::LstmParams(std::size_t input_size, std::size_t hidden_size)
    : w_ih(Matrix::Zero(4 * hidden_size, input_size)),
      w_hh(Matrix::Zero(4 * hidden_size, hidden_size)),
      b(Vector::Zero(4 * hidden_size)) {}

void LstmParams::set_zero() {
  w_ih.setZero();
  w_hh.setZero();
  b.setZero();
}

LstmParams& LstmParams::operator+=(const LstmParams& other) {
  w_ih += other.w_ih;
  w_hh += other.w_hh;
  b += other.b;
  return *this;
}

LstmParams& LstmParams::operator*=(double scale) {
  w_ih *= scale;
  w_hh *= scale;
  b *= scale;
  return *this;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix lstm_forward(const LstmParams& params, const Matrix& inputs, LstmCache& cache) {
  const auto H = static_cast<Eigen::Index>(params.hidden_size());
  const auto E = static_cast<Eigen::Index>(params.input_size());
  if (params.w_ih.rows() != 4 * H || params.w_hh.rows() != 4 * H || params.b.size() != 4 * H) {
    throw ShapeError("lstm: inconsistent parameter shapes");
  }
  if (inputs.cols() != E) {
    throw ShapeError("lstm: input is " + dims(inputs.rows(), inputs.cols()) + ", expected width " +
                     std::to_string(E));
  }
  if (inputs.rows() < 1) throw ShapeError("lstm: empty input sequence");
  const Eigen::Index T = inputs.rows();

  cache.inputs = inputs;
  cache.gates.resize(T, 4 * H);
  cache.cells.resize(T, H);
  cache.hidden.resize(T, H);
  cache.input_size = static_cast<std::size_t>(E);
  cache.hidden_size = static_cast<std::size_t>(H);

  // Input contributions for all steps at once.
  Matrix pre = inputs * params.w_ih.transpose();
  pre.rowwise() += params.b.transpose();

  Vector h = Vector::Zero(H);
  Vector c = Vector::Zero(H);
  for (Eigen::Index t = 0; t < T; ++t) {
    Vector z = pre.row(t).transpose() + params.w_hh * h;
    for (Eigen::Index k = 0; k < H; ++k) {
      const double i = sigmoid(z(k));
      const double f = sigmoid(z(H + k));
      const double g = std::tanh(z(2 * H + k));
      const double o = sigmoid(z(3 * H + k));
      c(k) = f * c(k) + i * g;
      h(k) = o * std::tanh(c(k));
      cache.gates(t, k) = i;
      cache.gates(t, H + k) = f;
      cache.gates(t, 2 * H + k) = g;
      cache.gates(t, 3 * H + k) = o;
    }
    cache.cells.row(t) = c.transpose();
    cache.hidden.row(t) = h.transpose();
  }
  return cache.hidden;
}

LstmGrads lstm_backward(const LstmParams& params, const LstmCache& cache, const Matrix& grad_hidden) {
  const auto H = static_cast<Eigen::Index>(cache.hidden_size);
  const auto E = static_cast<Eigen::Index>(cache.input_size);
  const Eigen::Index T = cache.hidden.rows();
  if (params.hidden_size() != cache.hidden_size || params.input_size() != cache.input_size ||
      cache.gates.rows() != T || cache.inputs.rows() != T) {
    throw ShapeError("lstm backward: cache does not match parameters");
  }
  if (grad_hidden.rows() != T || grad_hidden.cols() != H) {
    throw ShapeError("lstm backward: upstream gradient is " +
                     dims(grad_hidden.rows(), grad_hidden.cols()) + ", expected " + dims(T, H));
  }

  LstmGrads grads{LstmParams(static_cast<std::size_t>(E), static_cast<std::size_t>(H)),
                  Matrix::Zero(T, E)};
  Matrix dz_all(T, 4 * H);
  Vector dh_next = Vector::Zero(H);
  Vector dc_next = Vector::Zero(H);

  for (Eigen::Index t = T - 1; t >= 0; --t) {
    Vector dh = grad_hidden.row(t).transpose() + dh_next;
    for (Eigen::Index k = 0; k < H; ++k) {
      const double i = cache.gates(t, k);
      const double f = cache.gates(t, H + k);
      const double g = cache.gates(t, 2 * H + k);
      const double o = cache.gates(t, 3 * H + k);
      const double tc = std::tanh(cache.cells(t, k));
      const double c_prev = t > 0 ? cache.cells(t - 1, k) : 0.0;

      const double d_o = dh(k) * tc;
      const double dc = dh(k) * o * (1.0 - tc * tc) + dc_next(k);
      dz_all(t, k) = dc * g * i * (1.0 - i);
      dz_all(t, H + k) = dc * c_prev * f * (1.0 - f);
      dz_all(t, 2 * H + k) = dc * i * (1.0 - g * g);
      dz_all(t, 3 * H + k) = d_o * o * (1.0 - o);
      dc_next(k) = dc * f;
    }
    dh_next = params.w_hh.transpose() * dz_all.row(t).transpose();
  }

  grads.params.w_ih.noalias() = dz_all.transpose() * cache.inputs;
  if (T > 1) {
    grads.params.w_hh.noalias() =
        dz_all.bottomRows(T - 1).transpose() * cache.hidden.topRows(T - 1);
  }
  grads.params.b = dz_all.colwise().sum().transpose();
  grads.inputs.noalias() = dz_all * params.w_ih;
  return grads;
}

Matrix reverse_rows(const Matrix& m) { return m.colwise().reverse(); }

Matrix bilstm_forward(const LstmParams& fwd, const LstmParams& bwd, const Matrix& inputs,
                      BiLstmCache& cache) {
  if (fwd.hidden_size() != bwd.hidden_size() || fwd.input_size() != bwd.input_size()) {
    throw ShapeError("bilstm: forward and backward directions disagree in shape");
  }
  const Matrix hf = lstm_forward(fwd, inputs, cache.forward);
  const Matrix hb = lstm_forward(bwd, reverse_rows(inputs), cache.backward);
  const Eigen::Index H = hf.cols();
  Matrix out(inputs.rows(), 2 * H);
  out.leftCols(H) = hf;
  out.rightCols(H) = reverse_rows(hb);
  return out;
}

BiLstmGrads bilstm_backward(const LstmParams& fwd, const LstmParams& bwd, const BiLstmCache& cache,
                            const Matrix& grad_states) {
  const auto H = static_cast<Eigen::Index>(fwd.hidden_size());
  if (grad_states.cols() != 2 * H) {
    throw ShapeError("bilstm backward: upstream gradient has width " +
                     std::to_string(grad_states.cols()) + ", expected " + std::to_string(2 * H));
  }
  LstmGrads gf = lstm_backward(fwd, cache.forward, grad_states.leftCols(H));
  LstmGrads gb = lstm_backward(bwd, cache.backward, reverse_rows(grad_states.rightCols(H)));
  BiLstmGrads out{std::move(gf.params), std::move(gb.params), std::move(gf.inputs)};
  out.inputs += reverse_rows(gb.inputs);
  return out;
}

}  // namespace sentcomp
