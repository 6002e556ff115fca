#include "qie/probe.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace qie {

namespace {

void check_labels(const std::vector<int>& y, Index n, int class_count,
                  const char* what) {
  if (static_cast<Index>(y.size()) != n) {
    throw InvalidInputError(std::string(what) + ": " + std::to_string(y.size()) +
                            " labels for " + std::to_string(n) + " rows");
  }
  for (const int label : y) {
    if (label < 0 || label >= class_count) {
      throw InvalidInputError(std::string(what) + ": label " +
                              std::to_string(label) + " outside [0, " +
                              std::to_string(class_count) + ")");
    }
  }
}

// Row-stabilized softmax of X*W + b; returns log-partition per row when
// log_norm is non-null (for the cross-entropy).
Matrix softmax_logits(const Eigen::Ref<const Matrix>& X,
                      const Eigen::Ref<const Matrix>& W,
                      const Eigen::Ref<const Vector>& b, Vector* log_norm) {
  Matrix Z = X * W;
  Z.rowwise() += b.transpose();
  const Vector row_max = Z.rowwise().maxCoeff();
  Z.colwise() -= row_max;
  Matrix P = Z.array().exp();
  const Vector sums = P.rowwise().sum();
  if (log_norm != nullptr) {
    *log_norm = sums.array().log() + row_max.array();
  }
  P.array().colwise() /= sums.array();
  return P;
}

}  // namespace

double logistic_objective(const Eigen::Ref<const Matrix>& weights,
                          const Eigen::Ref<const Vector>& intercepts,
                          const Eigen::Ref<const Matrix>& X,
                          const std::vector<int>& y, int class_count,
                          double lambda, Matrix* grad_w, Vector* grad_b) {
  if (weights.cols() != class_count || intercepts.size() != class_count) {
    throw InvalidInputError("logistic_objective: parameter shape does not match class_count");
  }
  const Index n = X.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  Vector log_norm;
  Matrix P = softmax_logits(X, weights, intercepts, &log_norm);

  double ce = 0.0;
  for (Index i = 0; i < n; ++i) {
    const int c = y[static_cast<std::size_t>(i)];
    const double logit = (X.row(i) * weights.col(c))(0) + intercepts(c);
    ce += log_norm(i) - logit;
  }
  const double objective =
      ce * inv_n + 0.5 * lambda * inv_n * weights.squaredNorm();

  if (grad_w != nullptr || grad_b != nullptr) {
    for (Index i = 0; i < n; ++i) {
      P(i, y[static_cast<std::size_t>(i)]) -= 1.0;  // P - onehot(y)
    }
    P *= inv_n;
    if (grad_w != nullptr) {
      *grad_w = X.transpose() * P + (lambda * inv_n) * weights;
    }
    if (grad_b != nullptr) {
      *grad_b = P.colwise().sum();
    }
  }
  return objective;
}

LogisticModel train_logistic(const Eigen::Ref<const Matrix>& X,
                             const std::vector<int>& y, int class_count,
                             const TrainOptions& opts) {
  const Index n = X.rows();
  const Index d = X.cols();
  if (n < 1 || d < 1) {
    throw InvalidInputError("train_logistic: empty feature matrix");
  }
  if (class_count < 2) {
    throw InvalidInputError("train_logistic: need at least 2 classes");
  }
  check_labels(y, n, class_count, "train_logistic");
  std::vector<bool> present(static_cast<std::size_t>(class_count), false);
  for (const int label : y) present[static_cast<std::size_t>(label)] = true;
  if (std::count(present.begin(), present.end(), true) < 2) {
    throw InvalidInputError("train_logistic: training labels contain a single class");
  }
  if (!(opts.lambda >= 0.0) || opts.max_iter < 1 || !(opts.tol > 0.0)) {
    throw InvalidInputError("train_logistic: invalid options");
  }

  const int C = class_count;
  LogisticModel model;
  model.weights = Matrix::Zero(d, C);
  model.intercepts = Vector::Zero(C);
  model.class_count = C;
  model.l2_lambda = opts.lambda;

  Matrix W = Matrix::Zero(d, C);
  Vector b = Vector::Zero(C);
  Matrix gw(d, C);
  Vector gb(C);
  double f = logistic_objective(W, b, X, y, C, opts.lambda, &gw, &gb);
  double gnorm = std::max(gw.cwiseAbs().maxCoeff(), gb.cwiseAbs().maxCoeff());

  struct Pair {
    Matrix sw;
    Vector sb;
    Matrix yw;
    Vector yb;
    double rho;
  };
  std::deque<Pair> memory;
  constexpr std::size_t history = 10;
  const auto dot = [](const Matrix& aw, const Vector& ab, const Matrix& bw,
                      const Vector& bb) {
    return aw.cwiseProduct(bw).sum() + ab.dot(bb);
  };

  Matrix trial_w(d, C), trial_gw(d, C), pw(d, C);
  Vector trial_b(C), trial_gb(C), pb(C);

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if (gnorm <= opts.tol) {
      model.converged = true;
      break;
    }

    // Two-loop recursion: p = -H*g.
    pw = gw;
    pb = gb;
    std::vector<double> alpha(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
      const Pair& m = memory[i];
      alpha[i] = m.rho * dot(m.sw, m.sb, pw, pb);
      pw -= alpha[i] * m.yw;
      pb -= alpha[i] * m.yb;
    }
    if (!memory.empty()) {
      const Pair& last = memory.back();
      const double gamma = dot(last.sw, last.sb, last.yw, last.yb) /
                           dot(last.yw, last.yb, last.yw, last.yb);
      pw *= gamma;
      pb *= gamma;
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const Pair& m = memory[i];
      const double beta = m.rho * dot(m.yw, m.yb, pw, pb);
      pw += (alpha[i] - beta) * m.sw;
      pb += (alpha[i] - beta) * m.sb;
    }
    pw = -pw;
    pb = -pb;

    double slope = dot(gw, gb, pw, pb);
    if (slope >= 0.0) {  // not a descent direction; reset to steepest descent
      memory.clear();
      pw = -gw;
      pb = -gb;
      slope = -dot(gw, gb, gw, gb);
    }

    // Backtracking Armijo line search.
    double step = 1.0;
    double f_new = f;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      trial_w = W + step * pw;
      trial_b = b + step * pb;
      f_new = logistic_objective(trial_w, trial_b, X, y, C, opts.lambda,
                                 &trial_gw, &trial_gb);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      break;  // no further progress possible at float precision
    }

    Pair pair;
    pair.sw = trial_w - W;
    pair.sb = trial_b - b;
    pair.yw = trial_gw - gw;
    pair.yb = trial_gb - gb;
    const double sy = dot(pair.sw, pair.sb, pair.yw, pair.yb);
    const double s_norm = std::sqrt(dot(pair.sw, pair.sb, pair.sw, pair.sb));
    const double y_norm = std::sqrt(dot(pair.yw, pair.yb, pair.yw, pair.yb));
    if (sy > 1e-10 * s_norm * y_norm) {  // keep curvature pairs only
      pair.rho = 1.0 / sy;
      memory.push_back(std::move(pair));
      if (memory.size() > history) memory.pop_front();
    }

    W = trial_w;
    b = trial_b;
    gw = trial_gw;
    gb = trial_gb;
    f = f_new;
    gnorm = std::max(gw.cwiseAbs().maxCoeff(), gb.cwiseAbs().maxCoeff());
    model.loss_trace.push_back(f);
    model.iterations = iter + 1;
  }
  if (gnorm <= opts.tol) {
    model.converged = true;
  }

  model.weights = std::move(W);
  model.intercepts = std::move(b);
  model.final_grad_norm = gnorm;
  return model;
}

Matrix predict_proba(const LogisticModel& model, const Eigen::Ref<const Matrix>& X) {
  if (X.cols() != model.weights.rows()) {
    throw InvalidInputError("predict_proba: expected " +
                            std::to_string(model.weights.rows()) +
                            " columns, got " + std::to_string(X.cols()));
  }
  return softmax_logits(X, model.weights, model.intercepts, nullptr);
}

std::vector<int> predict(const LogisticModel& model, const Eigen::Ref<const Matrix>& X) {
  const Matrix P = predict_proba(model, X);
  std::vector<int> labels(static_cast<std::size_t>(P.rows()));
  for (Index i = 0; i < P.rows(); ++i) {
    Index best = 0;
    P.row(i).maxCoeff(&best);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

Metrics compute_metrics(const std::vector<int>& y_true,
                        const std::vector<int>& y_pred, int class_count) {
  if (y_true.size() != y_pred.size() || y_true.empty()) {
    throw InvalidInputError("compute_metrics: label vectors must be equal-length and nonempty");
  }
  if (class_count < 1) {
    throw InvalidInputError("compute_metrics: class_count must be >= 1");
  }
  check_labels(y_true, static_cast<Index>(y_true.size()), class_count,
               "compute_metrics");
  check_labels(y_pred, static_cast<Index>(y_pred.size()), class_count,
               "compute_metrics");

  const auto C = static_cast<std::size_t>(class_count);
  std::vector<double> tp(C, 0.0), fp(C, 0.0), fn(C, 0.0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const auto t = static_cast<std::size_t>(y_true[i]);
    const auto p = static_cast<std::size_t>(y_pred[i]);
    if (t == p) {
      ++correct;
      tp[t] += 1.0;
    } else {
      fp[p] += 1.0;
      fn[t] += 1.0;
    }
  }

  Metrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(y_true.size());
  m.precision.resize(C);
  m.recall.resize(C);
  m.f1.resize(C);
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    m.precision[c] = tp[c] + fp[c] > 0.0 ? tp[c] / (tp[c] + fp[c]) : 0.0;
    m.recall[c] = tp[c] + fn[c] > 0.0 ? tp[c] / (tp[c] + fn[c]) : 0.0;
    const double pr = m.precision[c] + m.recall[c];
    m.f1[c] = pr > 0.0 ? 2.0 * m.precision[c] * m.recall[c] / pr : 0.0;
    f1_sum += m.f1[c];
  }
  m.macro_f1 = f1_sum / static_cast<double>(C);
  return m;
}

}  // namespace qie
