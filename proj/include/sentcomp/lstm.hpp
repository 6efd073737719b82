#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "sentcomp/tensor.hpp"

namespace sentcomp {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Weights of one LSTM direction. Gate blocks are stacked in the order
/// input, forget, cell candidate, output; each block has `hidden` rows.
struct LstmParams {
  Matrix w_ih;  // 4H x E
  Matrix w_hh;  // 4H x H
  Vector b;     // 4H

  LstmParams() = default;
  LstmParams(std::size_t input_size, std::size_t hidden_size);

  std::size_t input_size() const { return static_cast<std::size_t>(w_ih.cols()); }
  std::size_t hidden_size() const { return static_cast<std::size_t>(w_hh.cols()); }

  void set_zero();
  LstmParams& operator+=(const LstmParams& other);
  LstmParams& operator*=(double scale);
};

/// Intermediates retained by lstm_forward for the backward pass.
struct LstmCache {
  Matrix inputs;  // T x E
  Matrix gates;   // T x 4H, post-activation (i, f, g, o)
  Matrix cells;   // T x H
  Matrix hidden;  // T x H
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
};

struct LstmGrads {
  LstmParams params;
  Matrix inputs;  // T x E
};

double sigmoid(double x);

/// Runs the recurrence over rows of `inputs` with h_0 = c_0 = 0. Returns the
/// T x H hidden states; `cache` receives what backward needs.
Matrix lstm_forward(const LstmParams& params, const Matrix& inputs, LstmCache& cache);

/// Exact backpropagation through time. `grad_hidden` is dLoss/dh_t for every t.
LstmGrads lstm_backward(const LstmParams& params, const LstmCache& cache, const Matrix& grad_hidden);

struct BiLstmCache {
  LstmCache forward;
  LstmCache backward;  // over the time-reversed input
};

/// Row t is [forward h_t, backward h_t], where the backward direction reads the
/// input in reverse and its states are mapped back to original positions.
Matrix bilstm_forward(const LstmParams& fwd, const LstmParams& bwd, const Matrix& inputs,
                      BiLstmCache& cache);

struct BiLstmGrads {
  LstmParams fwd;
  LstmParams bwd;
  Matrix inputs;
};

BiLstmGrads bilstm_backward(const LstmParams& fwd, const LstmParams& bwd, const BiLstmCache& cache,
                            const Matrix& grad_states);

Matrix reverse_rows(const Matrix& m);

}  // namespace sentcomp
