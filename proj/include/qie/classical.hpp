#pragma once

#include "qie/numerics.hpp"

namespace qie {

/// Random Fourier features approximating an RBF kernel of bandwidth sigma:
/// z(x)_j = sqrt(2/D) * cos(omega_j . x + b_j).
struct RffMap {
  Matrix omega;  // d x D, entries ~ N(0, 1/sigma^2)
  Vector phases;  // D, ~ Uniform[0, 2*pi)
  double sigma = 0.0;
  Index input_dim = 0;
  Index output_dim = 0;
  bool fitted = false;
};

RffMap fit_rff(Index input_dim, Index output_dim, double sigma,
               RandomStream& stream);
Matrix rff_transform(const RffMap& map, const Eigen::Ref<const Matrix>& X);

/// Median pairwise Euclidean distance over a subsample of at most max_rows
/// rows (stream-deterministic); falls back to 1.0 when degenerate.
double median_heuristic_sigma(const Eigen::Ref<const Matrix>& X,
                              RandomStream& stream, Index max_rows = 1000);

/// Number of monomials of total degree 1..degree in d variables:
/// C(d + degree, degree) - 1 (no constant term).
Index poly_output_dim(Index d, int degree);

/// All monomials of degree 1..degree in graded-lexicographic order. When
/// budget_mb > 0 and the output matrix would exceed it, throws
/// FeasibilityError before allocating.
Matrix poly_expand(const Eigen::Ref<const Matrix>& X, int degree,
                   double budget_mb = 0.0);

/// Centered projection onto the top-k right singular vectors,
/// k = min(target_dim, numerical rank at 1e-10 * sigma_max).
struct PcaMap {
  Vector mean;
  Matrix components;          // d x k, orthonormal columns
  Vector explained_variance;  // nonincreasing
  Index input_dim = 0;
  Index output_dim = 0;  // k
  bool fitted = false;
};

PcaMap fit_pca(const Eigen::Ref<const Matrix>& train, Index target_dim);
Matrix pca_transform(const PcaMap& map, const Eigen::Ref<const Matrix>& X);

}  // namespace qie
