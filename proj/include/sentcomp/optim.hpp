#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sentcomp/tensor.hpp"

namespace sentcomp {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment estimates, one buffer per parameter tensor in the order the
/// parameters are visited. Buffers are sized on the first step.
struct AdamState {
  AdamHyper hyper;
  long step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  explicit NonFiniteGradient(const std::string& tensor)
      : std::runtime_error("non-finite gradient in tensor '" + tensor + "'"), tensor_(tensor) {}
  const std::string& tensor() const { return tensor_; }

 private:
  std::string tensor_;
};

/// One bias-corrected Adam update. Gradients are checked for finiteness before
/// anything is modified, so a throwing call leaves params and state untouched.
void adam_step(const std::vector<TensorView>& params, const std::vector<ConstTensorView>& grads,
               AdamState& state);

double global_norm(const std::vector<ConstTensorView>& grads);

/// Rescales all gradients by max_norm / g when their joint L2 norm g exceeds
/// max_norm. Returns g (the norm before clipping).
double clip_gradients(const std::vector<TensorView>& grads, double max_norm);

}  // namespace sentcomp
