#pragma once

#include <vector>

#include "qie/numerics.hpp"

namespace qie {

/// Multinomial logistic regression trained by L-BFGS from zero initialization.
struct LogisticModel {
  Matrix weights;     // features x classes
  Vector intercepts;  // classes (unregularized)
  int class_count = 0;
  double l2_lambda = 0.0;
  int iterations = 0;
  double final_grad_norm = 0.0;
  bool converged = false;
  std::vector<double> loss_trace;  // objective after each accepted step
};

struct TrainOptions {
  double lambda = 1.0;  // weight of (lambda/2)*||W||_F^2 added to summed CE
  int max_iter = 500;
  double tol = 1e-6;  // on the max-norm gradient of the mean-scaled objective
};

/// Mean-scaled objective (1/n)[sum_i CE_i + (lambda/2)*||W||_F^2]; same
/// minimizer as the summed form, better-conditioned gradients. Fills grad_w
/// and grad_b when non-null.
double logistic_objective(const Eigen::Ref<const Matrix>& weights,
                          const Eigen::Ref<const Vector>& intercepts,
                          const Eigen::Ref<const Matrix>& X,
                          const std::vector<int>& y, int class_count,
                          double lambda, Matrix* grad_w = nullptr,
                          Vector* grad_b = nullptr);

LogisticModel train_logistic(const Eigen::Ref<const Matrix>& X,
                             const std::vector<int>& y, int class_count,
                             const TrainOptions& opts = {});

Matrix predict_proba(const LogisticModel& model, const Eigen::Ref<const Matrix>& X);
std::vector<int> predict(const LogisticModel& model, const Eigen::Ref<const Matrix>& X);

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> precision;  // per class
  std::vector<double> recall;
  std::vector<double> f1;
};

/// Per-class F1 is 0 when a class has no true and no predicted positives;
/// macro F1 averages over all class_count classes.
Metrics compute_metrics(const std::vector<int>& y_true,
                        const std::vector<int>& y_pred, int class_count);

}  // namespace qie
