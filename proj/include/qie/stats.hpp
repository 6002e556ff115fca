#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qie/numerics.hpp"

namespace qie {

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  int df = 0;
  bool degenerate = false;  // all-zero or zero-variance differences
};

/// Paired t test on a - b: t = mean(d) / (sd(d) / sqrt(n)), sample sd,
/// df = n - 1, two-sided p. All-zero differences: t = 0, p = 1, flagged.
TTestResult paired_t(const std::vector<double>& a, const std::vector<double>& b);

struct WilcoxonResult {
  double w_statistic = 0.0;  // sum of ranks of positive differences
  double p = 1.0;
  Index n_nonzero = 0;  // differences remaining after dropping zeros
  bool degenerate = false;
  bool exact = false;  // enumeration (n_nonzero <= 20) vs normal approximation
};

/// Two-sided Wilcoxon signed-rank test on a - b. Zero differences are
/// dropped; tied magnitudes share average ranks. Exact p by enumerating all
/// 2^m sign assignments for m <= 20, normal approximation with tie and
/// continuity corrections above.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b);

/// mean(a - b) / sd(a - b), sample sd. All-zero differences give 0; zero sd
/// with nonzero mean gives signed infinity.
double cohens_d_paired(const std::vector<double>& a, const std::vector<double>& b);

/// One benchmark cell's scores, decoupled from the harness record.
struct ScoreCell {
  std::string dataset;
  std::string method;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

struct PairedComparison {
  std::string dataset;
  std::string method;
  std::string baseline;
  std::vector<std::uint64_t> seeds;  // ascending; scores below align to this
  std::vector<double> method_scores;
  std::vector<double> baseline_scores;
  double mean_difference = 0.0;
  double t_statistic = 0.0;
  double t_pvalue = 1.0;
  int df = 0;
  bool t_degenerate = false;
  double wilcoxon_statistic = 0.0;
  double wilcoxon_pvalue = 1.0;
  bool wilcoxon_degenerate = false;
  double cohens_d = 0.0;
  double ci_low = 0.0;   // 95% CI of the mean difference (t-based)
  double ci_high = 0.0;
};

/// Per dataset: baseline = classical method with the highest mean score
/// (accuracy, or macro F1 when use_macro_f1; ties break to the earlier name).
/// One comparison per QIE method present, seed-matched. A method present for
/// only part of a dataset's seed set is a pairing error; a method entirely
/// absent from a dataset (e.g. infeasible) is skipped. Output is ordered by
/// (dataset, method) ascending.
std::vector<PairedComparison> compare_to_best(
    const std::vector<ScoreCell>& cells,
    const std::vector<std::string>& qie_methods,
    const std::vector<std::string>& classical_methods, bool use_macro_f1 = false);

}  // namespace qie
