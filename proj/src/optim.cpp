#include "sentcomp/optim.hpp"

#include <cmath>

namespace sentcomp {

void adam_step(const std::vector<TensorView>& params, const std::vector<ConstTensorView>& grads,
               AdamState& state) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("adam: " + std::to_string(params.size()) + " parameters but " +
                                std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params[p].values.size() != grads[p].values.size()) {
      throw std::invalid_argument("adam: gradient size mismatch for '" + params[p].name + "'");
    }
    if (!all_finite(grads[p].values)) throw NonFiniteGradient(grads[p].name);
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.values.size(), 0.0);
      state.v.emplace_back(p.values.size(), 0.0);
    }
  } else if (state.m.size() != params.size()) {
    throw std::invalid_argument("adam: state does not match parameter list");
  }

  const auto& h = state.hyper;
  ++state.step;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));

  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& m = state.m[p];
    auto& v = state.v[p];
    if (m.size() != params[p].values.size()) {
      throw std::invalid_argument("adam: moment shape mismatch for '" + params[p].name + "'");
    }
    auto theta = params[p].values;
    auto g = grads[p].values;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      theta[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
  }
}

double global_norm(const std::vector<ConstTensorView>& grads) {
  double sq = 0.0;
  for (const auto& g : grads) {
    for (double x : g.values) sq += x * x;
  }
  return std::sqrt(sq);
}

double clip_gradients(const std::vector<TensorView>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) {
    for (double x : g.values) sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (const auto& g : grads) {
      for (auto& x : g.values) x *= scale;
    }
  }
  return norm;
}

}  // namespace sentcomp
