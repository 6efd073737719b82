#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sentcomp {

// Row-major so that row t of a T x E matrix is the vector for token t and the
// raw buffer matches the on-disk tensor layout.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Named, shaped window onto one trainable tensor. Used to iterate over
// parameters generically (optimizer, clipping, checkpointing, gradient checks).
struct TensorView {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<double> values;
};

struct ConstTensorView {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<const double> values;
};

inline std::span<double> as_span(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<double> as_span(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<const double> as_span(const Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}
inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Deterministic, library-independent random source (splitmix-seeded xoshiro256**).
// std distributions are implementation-defined, so the draws are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  double uniform();                          // [0, 1)
  double uniform(double lo, double hi);      // [lo, hi)
  std::size_t below(std::size_t bound);      // [0, bound), bound > 0
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::uint64_t s_[4];
};

// Glorot/Xavier uniform fill: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(std::span<double> values, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// Rounds every value to the nearest float32. Parameters are kept float32-exact
// so that checkpoints store them without loss.
void round_to_float(std::span<double> values);

bool all_finite(std::span<const double> values);

}  // namespace sentcomp
