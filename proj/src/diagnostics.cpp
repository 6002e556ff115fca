#include "qie/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace qie {

namespace {

void check_nonzero_spectrum(const Eigen::Ref<const Vector>& s, const char* what) {
  if (s.size() < 1 || !(s.sum() > 0.0)) {
    throw InvalidInputError(std::string(what) + ": all-zero matrix");
  }
}

}  // namespace

double effective_rank_from_singular_values(const Eigen::Ref<const Vector>& s) {
  check_nonzero_spectrum(s, "effective_rank");
  const double total = s.sum();
  double entropy = 0.0;
  for (Index i = 0; i < s.size(); ++i) {
    const double p = s(i) / total;
    if (p >= 1e-15) {
      entropy -= p * std::log(p);
    }
  }
  return std::exp(entropy);
}

double effective_rank(const Eigen::Ref<const Matrix>& X) {
  return effective_rank_from_singular_values(singular_values(X));
}

double condition_number_from_singular_values(const Eigen::Ref<const Vector>& s,
                                             bool* capped) {
  check_nonzero_spectrum(s, "condition_number");
  if (capped != nullptr) *capped = false;
  const double sigma_max = s(0);
  const double threshold = 1e-12 * sigma_max;
  double sigma_min = sigma_max;
  Index retained = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) >= threshold) {
      sigma_min = s(i);  // sorted nonincreasing: last retained is smallest
      ++retained;
    }
  }
  if (retained < 2) {
    if (capped != nullptr) *capped = true;
    return 1e15;
  }
  return sigma_max / sigma_min;
}

double condition_number(const Eigen::Ref<const Matrix>& X) {
  return condition_number_from_singular_values(singular_values(X));
}

SpectralReport spectral_report(const Eigen::Ref<const Matrix>& X) {
  const Vector s = singular_values(X);
  SpectralReport report;
  report.effective_rank = effective_rank_from_singular_values(s);
  report.condition_number =
      condition_number_from_singular_values(s, &report.kappa_capped);
  report.log10_kappa = std::log10(report.condition_number);
  report.normalized_erank =
      report.effective_rank / static_cast<double>(X.cols());
  return report;
}

namespace {

Matrix centered_columns(const Eigen::Ref<const Matrix>& X, const char* side) {
  Matrix c = X.rowwise() - X.colwise().mean();
  const double scale = std::max(1.0, X.norm());
  if (c.norm() <= 1e-12 * scale) {
    throw InvalidInputError(std::string("linear_cka: ") + side +
                            " representation has zero variance");
  }
  return c;
}

}  // namespace

CkaValue linear_cka(const Eigen::Ref<const Matrix>& X,
                    const Eigen::Ref<const Matrix>& Y) {
  if (X.rows() != Y.rows()) {
    throw InvalidInputError("linear_cka: row counts differ (" +
                            std::to_string(X.rows()) + " vs " +
                            std::to_string(Y.rows()) + ")");
  }
  if (X.rows() < 2) {
    throw InvalidInputError("linear_cka: need at least 2 rows");
  }
  const Matrix xc = centered_columns(X, "first");
  const Matrix yc = centered_columns(Y, "second");

  const double cross = (yc.transpose() * xc).squaredNorm();
  const double x_self = (xc.transpose() * xc).norm();
  const double y_self = (yc.transpose() * yc).norm();

  CkaValue out;
  out.value = std::clamp(cross / (x_self * y_self), 0.0, 1.0);
  out.sample_count = X.rows();
  return out;
}

CkaValue linear_cka_subsampled(const Eigen::Ref<const Matrix>& X,
                               const Eigen::Ref<const Matrix>& Y,
                               Index max_rows, RandomStream& stream) {
  if (max_rows < 2) {
    throw InvalidInputError("linear_cka_subsampled: max_rows must be >= 2");
  }
  if (X.rows() != Y.rows()) {
    throw InvalidInputError("linear_cka: row counts differ (" +
                            std::to_string(X.rows()) + " vs " +
                            std::to_string(Y.rows()) + ")");
  }
  if (X.rows() <= max_rows) {
    return linear_cka(X, Y);
  }
  auto perm = stream.permutation(X.rows());
  std::vector<Index> keep(perm.begin(), perm.begin() + max_rows);
  std::sort(keep.begin(), keep.end());
  Matrix xs(max_rows, X.cols());
  Matrix ys(max_rows, Y.cols());
  for (Index i = 0; i < max_rows; ++i) {
    xs.row(i) = X.row(keep[static_cast<std::size_t>(i)]);
    ys.row(i) = Y.row(keep[static_cast<std::size_t>(i)]);
  }
  return linear_cka(xs, ys);
}

}  // namespace qie
