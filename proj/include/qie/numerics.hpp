#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qie/errors.hpp"

namespace qie {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thin singular value decomposition X = U diag(s) V^T.
struct SvdResult {
  Vector singular_values;  // nonincreasing, nonnegative
  Matrix left_vectors;     // U, rows x min(rows, cols)
  Matrix right_vectors;    // V, cols x min(rows, cols)
};

/// Thin SVD with min(rows, cols) singular values. Throws InvalidInputError
/// on empty or non-finite input.
SvdResult svd(const Eigen::Ref<const Matrix>& m);

/// Singular values only (nonincreasing). Same input contract as svd().
Vector singular_values(const Eigen::Ref<const Matrix>& m);

/// PCG32 core generator (O'Neill's pcg-basic variant).
class Pcg32 {
 public:
  Pcg32(std::uint64_t initstate, std::uint64_t initseq) {
    state_ = 0u;
    inc_ = (initseq << 1u) | 1u;
    next_u32();
    state_ += initstate;
    next_u32();
  }

  std::uint32_t next_u32() {
    const std::uint64_t oldstate = state_;
    state_ = oldstate * 6364136223846793005ULL + inc_;
    const auto xorshifted =
        static_cast<std::uint32_t>(((oldstate >> 18u) ^ oldstate) >> 27u);
    const auto rot = static_cast<std::uint32_t>(oldstate >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

std::uint64_t fnv1a64(std::string_view s);
std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic random stream derived from (seed, label). Identical pairs
/// give identical sequences; distinct labels give unrelated streams. The
/// derivation is stateless, so streams for different benchmark cells can be
/// created independently in any order.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::string_view label);

  std::uint32_t next_u32() { return gen_.next_u32(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal via Box-Muller (two uniforms per call, no caching).
  double normal();

  /// Unbiased integer in [0, bound). bound must be >= 1.
  std::uint32_t uniform_u32(std::uint32_t bound);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = uniform_u32(static_cast<std::uint32_t>(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Shuffled [0, n).
  std::vector<Index> permutation(Index n);

  /// rows x cols matrix of standard normals, filled column-major.
  Matrix normal_matrix(Index rows, Index cols);

 private:
  Pcg32 gen_;
};

/// Regularized incomplete beta function I_x(a, b) for x in [0,1], a,b > 0.
double regularized_incomplete_beta(double x, double a, double b);

/// One-sided survival probability P(T > t) for Student's t with df degrees
/// of freedom. Throws InvalidInputError when df < 1.
double student_t_sf(double t, int df);

/// Two-sided p-value 2 * min(sf, 1 - sf).
double student_t_two_sided_p(double t, int df);

/// Quantile t with P(T <= t) = p, p in (0, 1). Bisection on the CDF.
double student_t_ppf(double p, int df);

}  // namespace qie
