#include "qie/classical.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace qie {

RffMap fit_rff(Index input_dim, Index output_dim, double sigma,
               RandomStream& stream) {
  if (input_dim < 1 || output_dim < 1) {
    throw InvalidInputError("fit_rff: dimensions must be >= 1");
  }
  if (!(sigma > 0.0)) {
    throw InvalidInputError("fit_rff: sigma must be > 0");
  }
  RffMap map;
  map.omega = stream.normal_matrix(input_dim, output_dim) / sigma;
  map.phases.resize(output_dim);
  for (Index j = 0; j < output_dim; ++j) {
    map.phases(j) = 2.0 * std::numbers::pi * stream.uniform();
  }
  map.sigma = sigma;
  map.input_dim = input_dim;
  map.output_dim = output_dim;
  map.fitted = true;
  return map;
}

Matrix rff_transform(const RffMap& map, const Eigen::Ref<const Matrix>& X) {
  if (!map.fitted) {
    throw UsageError("rff_transform: map has not been fitted");
  }
  if (X.cols() != map.input_dim) {
    throw InvalidInputError("rff_transform: expected " +
                            std::to_string(map.input_dim) + " columns, got " +
                            std::to_string(X.cols()));
  }
  const double scale = std::sqrt(2.0 / static_cast<double>(map.output_dim));
  Matrix out = X * map.omega;
  out.rowwise() += map.phases.transpose();
  return scale * out.array().cos();
}

double median_heuristic_sigma(const Eigen::Ref<const Matrix>& X,
                              RandomStream& stream, Index max_rows) {
  const Index n = X.rows();
  if (n < 2) {
    throw InvalidInputError("median_heuristic_sigma: need at least 2 rows");
  }
  Matrix sample;
  if (n > max_rows) {
    const auto perm = stream.permutation(n);
    std::vector<Index> keep(perm.begin(), perm.begin() + max_rows);
    sample.resize(max_rows, X.cols());
    for (Index i = 0; i < max_rows; ++i) {
      sample.row(i) = X.row(keep[static_cast<std::size_t>(i)]);
    }
  } else {
    sample = X;
  }
  const Index r = sample.rows();
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(r) * (r - 1) / 2);
  for (Index i = 0; i < r; ++i) {
    for (Index j = i + 1; j < r; ++j) {
      dist.push_back((sample.row(i) - sample.row(j)).norm());
    }
  }
  const std::size_t m = dist.size();
  const std::size_t hi = m / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(hi),
                   dist.end());
  double median = dist[hi];
  if (m % 2 == 0) {
    std::nth_element(dist.begin(),
                     dist.begin() + static_cast<std::ptrdiff_t>(hi - 1),
                     dist.begin() + static_cast<std::ptrdiff_t>(hi));
    median = 0.5 * (median + dist[hi - 1]);
  }
  return median > 1e-12 ? median : 1.0;
}

Index poly_output_dim(Index d, int degree) {
  if (d < 1 || degree < 1) {
    throw InvalidInputError("poly_output_dim: d and degree must be >= 1");
  }
  // C(d + degree, degree) - 1 without overflow at benchmark sizes
  double total = 1.0;
  for (int i = 1; i <= degree; ++i) {
    total *= static_cast<double>(d + i) / static_cast<double>(i);
  }
  return static_cast<Index>(std::llround(total)) - 1;
}

Matrix poly_expand(const Eigen::Ref<const Matrix>& X, int degree,
                   double budget_mb) {
  if (degree < 2 || degree > 3) {
    throw InvalidInputError("poly_expand: degree must be 2 or 3");
  }
  const Index d = X.cols();
  if (d < 1) {
    throw InvalidInputError("poly_expand: empty input");
  }
  const Index d_out = poly_output_dim(d, degree);
  if (budget_mb > 0.0) {
    const double mb = static_cast<double>(X.rows()) * static_cast<double>(d_out) *
                      8.0 / (1024.0 * 1024.0);
    if (mb > budget_mb) {
      throw FeasibilityError("poly_expand: degree-" + std::to_string(degree) +
                             " expansion of " + std::to_string(X.rows()) + "x" +
                             std::to_string(d) + " needs " +
                             std::to_string(static_cast<long long>(mb)) +
                             " MB, budget is " +
                             std::to_string(static_cast<long long>(budget_mb)) +
                             " MB");
    }
  }

  Matrix out(X.rows(), d_out);
  Index col = 0;
  // Graded-lexicographic: total degree 1..degree, combinations with
  // replacement (i1 <= i2 <= ... <= it) in lexicographic order.
  for (Index j = 0; j < d; ++j) {
    out.col(col++) = X.col(j);
  }
  for (Index i = 0; i < d; ++i) {
    for (Index j = i; j < d; ++j) {
      out.col(col++) = X.col(i).cwiseProduct(X.col(j));
    }
  }
  if (degree == 3) {
    for (Index i = 0; i < d; ++i) {
      for (Index j = i; j < d; ++j) {
        const Matrix pair = X.col(i).cwiseProduct(X.col(j));
        for (Index k = j; k < d; ++k) {
          out.col(col++) = pair.cwiseProduct(X.col(k));
        }
      }
    }
  }
  return out;
}

PcaMap fit_pca(const Eigen::Ref<const Matrix>& train, Index target_dim) {
  if (train.rows() < 2) {
    throw InvalidInputError("fit_pca: need at least 2 training rows");
  }
  if (target_dim < 1) {
    throw InvalidInputError("fit_pca: target_dim must be >= 1");
  }
  PcaMap map;
  map.mean = train.colwise().mean();
  const Matrix centered = train.rowwise() - map.mean.transpose();
  const SvdResult dec = svd(centered);

  const double sigma_max = dec.singular_values.size() > 0 ? dec.singular_values(0) : 0.0;
  Index rank = 0;
  for (Index i = 0; i < dec.singular_values.size(); ++i) {
    if (dec.singular_values(i) > 1e-10 * sigma_max) ++rank;
  }
  rank = std::max<Index>(rank, 1);
  const Index k = std::min(target_dim, rank);

  map.components = dec.right_vectors.leftCols(k);
  map.explained_variance =
      dec.singular_values.head(k).array().square() /
      static_cast<double>(train.rows() - 1);
  map.input_dim = train.cols();
  map.output_dim = k;
  map.fitted = true;
  return map;
}

Matrix pca_transform(const PcaMap& map, const Eigen::Ref<const Matrix>& X) {
  if (!map.fitted) {
    throw UsageError("pca_transform: map has not been fitted");
  }
  if (X.cols() != map.input_dim) {
    throw InvalidInputError("pca_transform: expected " +
                            std::to_string(map.input_dim) + " columns, got " +
                            std::to_string(X.cols()));
  }
  return (X.rowwise() - map.mean.transpose()) * map.components;
}

}  // namespace qie
