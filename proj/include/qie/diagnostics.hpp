#pragma once

#include "qie/numerics.hpp"

namespace qie {

struct SpectralReport {
  double effective_rank = 0.0;
  double condition_number = 0.0;
  double log10_kappa = 0.0;
  double normalized_erank = 0.0;  // effective_rank / cols
  bool kappa_capped = false;
};

/// erank = exp(-sum sigma_hat_i log sigma_hat_i) over normalized singular
/// values; terms with sigma_hat_i < 1e-15 contribute 0.
double effective_rank_from_singular_values(const Eigen::Ref<const Vector>& s);
double effective_rank(const Eigen::Ref<const Matrix>& X);

/// sigma_max / sigma_min over singular values >= 1e-12 * sigma_max; when only
/// sigma_max survives the threshold, reports 1e15 and sets *capped.
double condition_number_from_singular_values(const Eigen::Ref<const Vector>& s,
                                             bool* capped = nullptr);
double condition_number(const Eigen::Ref<const Matrix>& X);

/// Both spectral diagnostics from a single decomposition.
SpectralReport spectral_report(const Eigen::Ref<const Matrix>& X);

struct CkaValue {
  double value = 0.0;
  Index sample_count = 0;
};

/// Linear CKA between column-centered representations of the same samples:
/// ||Yc' * Xc||_F^2 / (||Xc' * Xc||_F * ||Yc' * Yc||_F).
CkaValue linear_cka(const Eigen::Ref<const Matrix>& X,
                    const Eigen::Ref<const Matrix>& Y);

/// Same, over a deterministic subsample of at most max_rows rows.
CkaValue linear_cka_subsampled(const Eigen::Ref<const Matrix>& X,
                               const Eigen::Ref<const Matrix>& Y,
                               Index max_rows, RandomStream& stream);

}  // namespace qie
