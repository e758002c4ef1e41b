#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "prefroute/error.hpp"

namespace prefroute {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline bool all_finite(const Eigen::Ref<const Matrix>& m) {
  return m.allFinite();
}

inline void require_finite(const Eigen::Ref<const Matrix>& m, std::string_view what) {
  if (!m.allFinite()) {
    throw NumericalError(std::string(what) + ": non-finite entry");
  }
}

/// Solves A x = b for symmetric positive-definite A through a Cholesky
/// factorization. A non-positive pivot raises NumericalError.
inline Vector spd_solve(const Matrix& a, const Vector& b) {
  if (a.rows() != a.cols() || a.rows() != b.size()) {
    throw DimensionError("spd_solve: A is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", b has " + std::to_string(b.size()));
  }
  require_finite(a, "spd_solve(A)");
  require_finite(b, "spd_solve(b)");
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("spd_solve: matrix is not positive definite");
  }
  Vector x = llt.solve(b);
  require_finite(x, "spd_solve(x)");
  return x;
}

/// Inverse of an SPD matrix via Cholesky.
inline Matrix spd_inverse(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("spd_inverse: matrix is not positive definite");
  }
  return llt.solve(Matrix::Identity(a.rows(), a.cols()));
}

// ---------------------------------------------------------------------------
// Hashing helpers shared by the split assignment and the hash featurizer.

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// 64-bit FNV-1a over the raw bytes.
inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char ch : s) {
    h ^= static_cast<std::uint8_t>(ch);
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Top 53 bits mapped to [0, 1).
inline constexpr double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// xoshiro256** (Blackman & Vigna) seeded by four splitmix64 draws. The
/// algorithm is fully specified so streams reproduce across platforms.
/// Derived distributions (uniform, index, normal) are implemented here
/// rather than through <random> whose distributions are not portable.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0) : seed_(seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) {
      x += 0x9E3779B97F4A7C15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    ++draws_;
    return result;
  }

  // Uniform on [0, 1).
  double uniform() { return unit_interval(next_u64()); }

  // Uniform on {0, ..., n-1}; n must be positive.
  std::size_t uniform_index(std::size_t n) {
    const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  // Standard normal by Box-Muller; one draw pair per call.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Fisher-Yates, drawing indices from this stream.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t seed_;
  std::uint64_t state_[4]{};
  std::uint64_t draws_ = 0;
};

// ---------------------------------------------------------------------------
// Adam

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vector m;
  Vector v;
  std::int64_t t = 0;
  AdamHyper hyper;

  AdamState() = default;
  AdamState(Eigen::Index n, AdamHyper h) : m(Vector::Zero(n)), v(Vector::Zero(n)), hyper(h) {}
};

/// One bias-corrected Adam update. Mutates the moments and step counter in
/// `state`, returns the updated parameters.
inline Vector adam_step(const Vector& params, const Vector& grad, AdamState& state) {
  if (params.size() != grad.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw DimensionError("adam_step: length mismatch (params " + std::to_string(params.size()) +
                         ", grad " + std::to_string(grad.size()) + ", state " +
                         std::to_string(state.m.size()) + ")");
  }
  require_finite(grad, "adam_step(grad)");
  const auto& h = state.hyper;
  state.t += 1;
  state.m = h.beta1 * state.m + (1.0 - h.beta1) * grad;
  state.v = h.beta2 * state.v + (1.0 - h.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
  Vector out = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    out[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
  }
  return out;
}

/// Linear-interpolated quantile (the "type 7" definition) of unsorted data.
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace prefroute
