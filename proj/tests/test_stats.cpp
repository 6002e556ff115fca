#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qie/errors.hpp"
#include "qie/stats.hpp"

namespace {

std::vector<double> zeros(std::size_t n) { return std::vector<double>(n, 0.0); }

qie::ScoreCell cell(const std::string& ds, const std::string& m,
                    std::uint64_t seed, double acc, double f1 = 0.0) {
  return qie::ScoreCell{ds, m, seed, acc, f1 == 0.0 ? acc : f1};
}

}  // namespace

TEST_SUITE_BEGIN("stats");

TEST_CASE("paired t: textbook differences 1..5") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const auto r = qie::paired_t(a, zeros(5));
  CHECK(r.t == doctest::Approx(4.2426406871).epsilon(1e-9));
  CHECK(r.p == doctest::Approx(0.0132355996).epsilon(1e-6));
  CHECK(r.df == 4);
  CHECK_FALSE(r.degenerate);

  // Antisymmetry.
  const auto flipped = qie::paired_t(zeros(5), a);
  CHECK(flipped.t == doctest::Approx(-r.t).epsilon(1e-12));
  CHECK(flipped.p == doctest::Approx(r.p).epsilon(1e-12));
}

TEST_CASE("paired t: degenerate difference vectors") {
  const std::vector<double> same{0.3, 0.7, 0.9};
  const auto zero = qie::paired_t(same, same);
  CHECK(zero.degenerate);
  CHECK(zero.t == 0.0);
  CHECK(zero.p == 1.0);

  // Constant nonzero difference: infinite t, p = 0, flagged. Dyadic values
  // keep the differences exactly equal.
  const std::vector<double> base{0.25, 0.5, 0.75};
  const std::vector<double> shifted{1.25, 1.5, 1.75};
  const auto inf = qie::paired_t(shifted, base);
  CHECK(inf.degenerate);
  CHECK(std::isinf(inf.t));
  CHECK(inf.t > 0);
  CHECK(inf.p == 0.0);

  CHECK_THROWS_AS(qie::paired_t({1.0}, {0.0}), qie::InvalidInputError);
  CHECK_THROWS_AS(qie::paired_t({1.0, 2.0}, {0.0}), qie::InvalidInputError);
}

TEST_CASE("wilcoxon: exact p for uniformly signed differences") {
  const std::vector<double> five{1, 2, 3, 4, 5};
  const auto r5 = qie::wilcoxon_signed_rank(five, zeros(5));
  CHECK(r5.exact);
  CHECK(r5.n_nonzero == 5);
  CHECK(r5.w_statistic == 15.0);  // all positive ranks
  CHECK(r5.p == doctest::Approx(0.0625).epsilon(1e-12));

  std::vector<double> ten(10);
  for (int i = 0; i < 10; ++i) ten[static_cast<std::size_t>(i)] = i + 1;
  const auto r10 = qie::wilcoxon_signed_rank(ten, zeros(10));
  CHECK(r10.w_statistic == 55.0);
  CHECK(r10.p == doctest::Approx(0.001953125).epsilon(1e-12));
}

TEST_CASE("wilcoxon: mixed signs against an enumeration oracle value") {
  const std::vector<double> diffs{0.5, -1.2, 2.0, 0.3, -0.1, 1.1};
  const auto r = qie::wilcoxon_signed_rank(diffs, zeros(6));
  CHECK(r.exact);
  CHECK(r.w_statistic == 15.0);  // positive ranks 2+3+4+6
  CHECK(r.p == doctest::Approx(0.4375).epsilon(1e-12));

  // Swapping the sides mirrors the statistic and keeps p.
  const auto sw = qie::wilcoxon_signed_rank(zeros(6), diffs);
  CHECK(sw.w_statistic == doctest::Approx(21.0 - 15.0));
  CHECK(sw.p == doctest::Approx(r.p).epsilon(1e-12));
}

TEST_CASE("wilcoxon: two symmetric differences give p = 1") {
  const auto r = qie::wilcoxon_signed_rank({-1.0, 1.0}, zeros(2));
  CHECK(r.exact);
  CHECK(r.p == 1.0);
}

TEST_CASE("wilcoxon: zeros are dropped; all-zero is degenerate") {
  const std::vector<double> a{3.0, 3.0, 5.0, 1.0};
  const std::vector<double> b{3.0, 3.0, 2.0, 2.0};
  const auto r = qie::wilcoxon_signed_rank(a, b);
  CHECK(r.n_nonzero == 2);

  const auto d = qie::wilcoxon_signed_rank(a, a);
  CHECK(d.degenerate);
  CHECK(d.p == 1.0);
  CHECK(d.n_nonzero == 0);
}

TEST_CASE("wilcoxon: tied magnitudes share average ranks") {
  // |d| = {1,1,2}: the two 1s share rank 1.5, the 2 has rank 3.
  const auto r = qie::wilcoxon_signed_rank({1.0, -1.0, 2.0}, zeros(3));
  CHECK(r.w_statistic == doctest::Approx(1.5 + 3.0));
  // Enumeration over 8 sign masks: W in {0,1.5,1.5,3,3,4.5,4.5,6} by symmetry;
  // count(W >= 4.5) = 3, two-sided p = 6/8.
  CHECK(r.p == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("wilcoxon: switches to the normal approximation above m = 20") {
  std::vector<double> small(20), big(21);
  for (std::size_t i = 0; i < small.size(); ++i) {
    small[i] = static_cast<double>(i + 1);
  }
  for (std::size_t i = 0; i < big.size(); ++i) {
    big[i] = static_cast<double>(i + 1);
  }
  const auto exact = qie::wilcoxon_signed_rank(small, zeros(20));
  CHECK(exact.exact);
  CHECK(exact.p == doctest::Approx(2.0 / (1 << 20)).epsilon(1e-9));

  const auto approx = qie::wilcoxon_signed_rank(big, zeros(21));
  CHECK_FALSE(approx.exact);
  CHECK(approx.p < 1e-4);
  CHECK(approx.p > 0.0);
}

TEST_CASE("cohens d: direct formula agreement within 1e-9") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const double d = qie::cohens_d_paired(a, zeros(5));
  CHECK(d == doctest::Approx(1.8973665961).epsilon(1e-9));

  // Independent recompute.
  const double mean = 3.0;
  double ss = 0.0;
  for (const double x : a) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / 4.0);
  CHECK(std::abs(d - mean / sd) <= 1e-9);

  CHECK(qie::cohens_d_paired(a, a) == 0.0);
  const double inf = qie::cohens_d_paired({2, 3, 4, 5, 6}, a);
  CHECK(std::isinf(inf));
  CHECK(inf > 0);
}

TEST_CASE("compare_to_best: baseline selection and pairing") {
  std::vector<qie::ScoreCell> cells;
  // ds1: classical "zeta" wins on mean; ds2: "alpha" wins. Dyadic scores make
  // the per-seed differences exactly constant.
  for (const std::uint64_t s : {1u, 2u, 3u}) {
    const double bump = static_cast<double>(s) * 0.03125;
    cells.push_back(cell("ds1", "amplitude", s, 0.5 + bump));
    cells.push_back(cell("ds1", "angle", s, 0.75 + bump));
    cells.push_back(cell("ds1", "alpha", s, 0.6875 + bump));
    cells.push_back(cell("ds1", "zeta", s, 0.875 + bump));
    cells.push_back(cell("ds2", "amplitude", s, 0.5625 + bump));
    cells.push_back(cell("ds2", "angle", s, 0.625 + bump));
    cells.push_back(cell("ds2", "alpha", s, 0.9375 + bump));
    cells.push_back(cell("ds2", "zeta", s, 0.59375 + bump));
  }
  const std::vector<std::string> qie_methods{"amplitude", "angle"};
  const std::vector<std::string> classical{"alpha", "zeta"};
  const auto rows = qie::compare_to_best(cells, qie_methods, classical);
  REQUIRE(rows.size() == 4);

  // Ordered by (dataset, method).
  CHECK(rows[0].dataset == "ds1");
  CHECK(rows[0].method == "amplitude");
  CHECK(rows[0].baseline == "zeta");
  CHECK(rows[1].method == "angle");
  CHECK(rows[2].dataset == "ds2");
  CHECK(rows[2].baseline == "alpha");

  // Seed-aligned scores, ascending seeds.
  CHECK(rows[0].seeds == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(rows[0].method_scores[0] == 0.53125);
  CHECK(rows[0].baseline_scores[2] == 0.96875);
  CHECK(rows[0].mean_difference == -0.375);
  // Exactly constant difference: degenerate t.
  CHECK(rows[0].t_degenerate);

  // Input order must not matter.
  auto shuffled = cells;
  std::reverse(shuffled.begin(), shuffled.end());
  const auto rows2 = qie::compare_to_best(shuffled, qie_methods, classical);
  REQUIRE(rows2.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows2[i].dataset == rows[i].dataset);
    CHECK(rows2[i].method == rows[i].method);
    CHECK(rows2[i].baseline == rows[i].baseline);
    CHECK(rows2[i].mean_difference == rows[i].mean_difference);
  }
}

TEST_CASE("compare_to_best: tie on the mean breaks to the earlier name") {
  std::vector<qie::ScoreCell> cells;
  for (const std::uint64_t s : {1u, 2u}) {
    cells.push_back(cell("d", "angle", s, 0.7));
    cells.push_back(cell("d", "beta", s, 0.8));
    cells.push_back(cell("d", "alpha", s, 0.8));
  }
  const auto rows = qie::compare_to_best(cells, {"angle"}, {"beta", "alpha"});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].baseline == "alpha");
}

TEST_CASE("compare_to_best: macro-F1 mode switches the scored metric") {
  std::vector<qie::ScoreCell> cells;
  for (const std::uint64_t s : {1u, 2u}) {
    // accuracy says "good" wins; macro F1 says "bad" wins.
    cells.push_back(qie::ScoreCell{"d", "angle", s, 0.5, 0.5});
    cells.push_back(qie::ScoreCell{"d", "good", s, 0.9, 0.1});
    cells.push_back(qie::ScoreCell{"d", "bad", s, 0.1, 0.9});
  }
  const auto by_acc = qie::compare_to_best(cells, {"angle"}, {"good", "bad"}, false);
  CHECK(by_acc[0].baseline == "good");
  const auto by_f1 = qie::compare_to_best(cells, {"angle"}, {"good", "bad"}, true);
  CHECK(by_f1[0].baseline == "bad");
  CHECK(by_f1[0].method_scores[0] == doctest::Approx(0.5));
  CHECK(by_f1[0].baseline_scores[0] == doctest::Approx(0.9));
}

TEST_CASE("compare_to_best: absent methods skip, partial coverage errors") {
  std::vector<qie::ScoreCell> cells;
  for (const std::uint64_t s : {1u, 2u, 3u}) {
    cells.push_back(cell("d", "angle", s, 0.7));
    cells.push_back(cell("d", "alpha", s, 0.8));
  }
  // "basis" configured but entirely absent: skipped, not an error.
  const auto rows = qie::compare_to_best(cells, {"angle", "basis"}, {"alpha"});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].method == "angle");

  // Partial seed coverage is a pairing error.
  auto partial = cells;
  partial.push_back(cell("d", "basis", 1, 0.6));
  CHECK_THROWS_AS(qie::compare_to_best(partial, {"angle", "basis"}, {"alpha"}),
                  qie::InvalidInputError);

  // Duplicate (dataset, method, seed) is an error.
  auto dup = cells;
  dup.push_back(cell("d", "angle", 1, 0.9));
  CHECK_THROWS_AS(qie::compare_to_best(dup, {"angle"}, {"alpha"}),
                  qie::InvalidInputError);

  // No classical cells at all for a dataset is an error.
  std::vector<qie::ScoreCell> no_classical;
  for (const std::uint64_t s : {1u, 2u}) {
    no_classical.push_back(cell("d", "angle", s, 0.7));
  }
  CHECK_THROWS_AS(qie::compare_to_best(no_classical, {"angle"}, {"alpha"}),
                  qie::InvalidInputError);
}

TEST_CASE("compare_to_best: confidence interval matches the t quantile") {
  std::vector<qie::ScoreCell> cells;
  const double diffs[] = {0.01, 0.03, 0.02, 0.05, 0.04};
  for (std::uint64_t s = 0; s < 5; ++s) {
    cells.push_back(cell("d", "angle", s, 0.8 + diffs[s]));
    cells.push_back(cell("d", "alpha", s, 0.8));
  }
  const auto rows = qie::compare_to_best(cells, {"angle"}, {"alpha"});
  REQUIRE(rows.size() == 1);
  const auto& r = rows[0];
  const double mean = 0.03;
  double ss = 0.0;
  for (const double d : diffs) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / 4.0);
  const double half = qie::student_t_ppf(0.975, 4) * sd / std::sqrt(5.0);
  CHECK(r.mean_difference == doctest::Approx(mean).epsilon(1e-12));
  CHECK(r.ci_low == doctest::Approx(mean - half).epsilon(1e-9));
  CHECK(r.ci_high == doctest::Approx(mean + half).epsilon(1e-9));
  CHECK(r.df == 4);
  CHECK(r.cohens_d == doctest::Approx(mean / sd).epsilon(1e-9));
}

TEST_SUITE_END();
