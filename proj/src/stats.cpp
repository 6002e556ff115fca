#include "qie/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace qie {

namespace {

std::vector<double> differences(const std::vector<double>& a,
                                const std::vector<double>& b, std::size_t min_n,
                                const char* what) {
  if (a.size() != b.size()) {
    throw InvalidInputError(std::string(what) + ": score lists differ in length");
  }
  if (a.size() < min_n) {
    throw InvalidInputError(std::string(what) + ": need at least " +
                            std::to_string(min_n) + " pairs");
  }
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v, double mean) {
  double ss = 0.0;
  for (const double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

TTestResult paired_t(const std::vector<double>& a, const std::vector<double>& b) {
  const auto d = differences(a, b, 2, "paired_t");
  TTestResult r;
  r.df = static_cast<int>(d.size()) - 1;
  const double mean = mean_of(d);
  const double sd = sample_sd(d, mean);
  if (sd == 0.0) {
    r.degenerate = true;
    if (mean == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.t = mean / (sd / std::sqrt(static_cast<double>(d.size())));
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b) {
  const auto d_all = differences(a, b, 1, "wilcoxon_signed_rank");
  std::vector<double> d;
  for (const double x : d_all) {
    if (x != 0.0) d.push_back(x);
  }
  WilcoxonResult r;
  r.n_nonzero = static_cast<Index>(d.size());
  if (d.empty()) {
    r.degenerate = true;
    return r;
  }

  // Average ranks of |d|, kept as doubled integers so enumeration is exact.
  const std::size_t m = d.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return std::abs(d[i]) < std::abs(d[j]);
  });
  std::vector<long long> rank2(m);  // 2 * rank, integral even with ties
  for (std::size_t i = 0; i < m;) {
    std::size_t j = i;
    while (j + 1 < m && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const long long avg2 = static_cast<long long>(i + 1 + j + 1);  // 2*(avg rank)
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = avg2;
    i = j + 1;
  }

  long long w2 = 0;       // 2 * (sum of positive-difference ranks)
  long long total2 = 0;   // 2 * m(m+1)/2
  for (std::size_t i = 0; i < m; ++i) {
    total2 += rank2[i];
    if (d[i] > 0.0) w2 += rank2[i];
  }
  r.w_statistic = static_cast<double>(w2) / 2.0;

  if (m <= 20) {
    r.exact = true;
    // Distribution of W+ over all 2^m equally likely sign assignments.
    const std::uint64_t masks = 1ULL << m;
    std::uint64_t count_le = 0;
    std::uint64_t count_ge = 0;
    for (std::uint64_t mask = 0; mask < masks; ++mask) {
      long long s2 = 0;
      for (std::size_t i = 0; i < m; ++i) {
        if (mask & (1ULL << i)) s2 += rank2[i];
      }
      if (s2 <= w2) ++count_le;
      if (s2 >= w2) ++count_ge;
    }
    const double denom = static_cast<double>(masks);
    const double tail =
        std::min(static_cast<double>(count_le), static_cast<double>(count_ge));
    r.p = std::min(1.0, 2.0 * tail / denom);
    return r;
  }

  // Normal approximation with tie and continuity corrections.
  const double n = static_cast<double>(m);
  const double mean = n * (n + 1.0) / 4.0;
  double tie_term = 0.0;
  {
    std::map<long long, double> groups;
    for (std::size_t i = 0; i < m; ++i) groups[rank2[i]] += 1.0;
    for (const auto& [_, t] : groups) tie_term += t * t * t - t;
  }
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
  const double w = r.w_statistic;
  const double shift = w > mean ? -0.5 : (w < mean ? 0.5 : 0.0);
  const double z = (w - mean + shift) / std::sqrt(var);
  r.p = std::min(1.0, 2.0 * normal_sf(std::abs(z)));
  return r;
}

double cohens_d_paired(const std::vector<double>& a, const std::vector<double>& b) {
  const auto d = differences(a, b, 2, "cohens_d_paired");
  const double mean = mean_of(d);
  const double sd = sample_sd(d, mean);
  if (sd == 0.0) {
    if (mean == 0.0) return 0.0;
    return mean > 0.0 ? std::numeric_limits<double>::infinity()
                      : -std::numeric_limits<double>::infinity();
  }
  return mean / sd;
}

std::vector<PairedComparison> compare_to_best(
    const std::vector<ScoreCell>& cells,
    const std::vector<std::string>& qie_methods,
    const std::vector<std::string>& classical_methods, bool use_macro_f1) {
  if (classical_methods.empty()) {
    throw InvalidInputError("compare_to_best: no classical methods configured");
  }
  const std::set<std::string> qie_set(qie_methods.begin(), qie_methods.end());
  const std::set<std::string> classical_set(classical_methods.begin(),
                                            classical_methods.end());

  // dataset -> method -> seed -> score
  std::map<std::string, std::map<std::string, std::map<std::uint64_t, double>>> table;
  std::map<std::string, std::set<std::uint64_t>> dataset_seeds;
  for (const auto& cell : cells) {
    if (qie_set.count(cell.method) == 0 && classical_set.count(cell.method) == 0) {
      continue;
    }
    const double score = use_macro_f1 ? cell.macro_f1 : cell.accuracy;
    auto& per_seed = table[cell.dataset][cell.method];
    if (!per_seed.emplace(cell.seed, score).second) {
      throw InvalidInputError("compare_to_best: duplicate cell for " +
                              cell.dataset + "/" + cell.method + "/seed " +
                              std::to_string(cell.seed));
    }
    dataset_seeds[cell.dataset].insert(cell.seed);
  }

  std::vector<PairedComparison> out;
  for (const auto& [dataset, methods] : table) {
    const auto& seeds = dataset_seeds[dataset];
    // Every method present must cover the dataset's full seed set.
    for (const auto& [method, per_seed] : methods) {
      for (const std::uint64_t s : seeds) {
        if (per_seed.count(s) == 0) {
          throw InvalidInputError("compare_to_best: " + dataset + "/" + method +
                                  " is missing seed " + std::to_string(s));
        }
      }
    }

    // Best classical baseline by mean score; ties break to the earlier name.
    std::string best;
    double best_mean = -std::numeric_limits<double>::infinity();
    for (const auto& [method, per_seed] : methods) {
      if (classical_set.count(method) == 0) continue;
      double sum = 0.0;
      for (const auto& [_, score] : per_seed) sum += score;
      const double mean = sum / static_cast<double>(per_seed.size());
      if (mean > best_mean || (mean == best_mean && method < best)) {
        best = method;
        best_mean = mean;
      }
    }
    if (best.empty()) {
      throw InvalidInputError("compare_to_best: dataset " + dataset +
                              " has no classical baseline cells");
    }

    for (const auto& [method, per_seed] : methods) {
      if (qie_set.count(method) == 0) continue;
      PairedComparison c;
      c.dataset = dataset;
      c.method = method;
      c.baseline = best;
      for (const std::uint64_t s : seeds) {
        c.seeds.push_back(s);
        c.method_scores.push_back(per_seed.at(s));
        c.baseline_scores.push_back(methods.at(best).at(s));
      }
      const auto t = paired_t(c.method_scores, c.baseline_scores);
      c.t_statistic = t.t;
      c.t_pvalue = t.p;
      c.df = t.df;
      c.t_degenerate = t.degenerate;
      const auto w = wilcoxon_signed_rank(c.method_scores, c.baseline_scores);
      c.wilcoxon_statistic = w.w_statistic;
      c.wilcoxon_pvalue = w.p;
      c.wilcoxon_degenerate = w.degenerate;
      c.cohens_d = cohens_d_paired(c.method_scores, c.baseline_scores);

      std::vector<double> diffs(c.method_scores.size());
      for (std::size_t i = 0; i < diffs.size(); ++i) {
        diffs[i] = c.method_scores[i] - c.baseline_scores[i];
      }
      c.mean_difference = mean_of(diffs);
      const double sd = sample_sd(diffs, c.mean_difference);
      const double se = sd / std::sqrt(static_cast<double>(diffs.size()));
      const double crit = student_t_ppf(0.975, t.df);
      c.ci_low = c.mean_difference - crit * se;
      c.ci_high = c.mean_difference + crit * se;
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace qie
