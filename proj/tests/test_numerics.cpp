#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "qie/errors.hpp"
#include "qie/numerics.hpp"

using qie::Index;
using qie::Matrix;
using qie::Vector;

namespace {

// Independent PCG32 reimplementation, written directly from the published
// recurrence rather than sharing any code with the library.
struct PcgOracle {
  std::uint64_t state;
  std::uint64_t inc;
  PcgOracle(std::uint64_t initstate, std::uint64_t initseq) {
    state = 0;
    inc = (initseq << 1) | 1u;
    step();
    state += initstate;
    step();
  }
  std::uint32_t step() {
    std::uint64_t old = state;
    state = old * 6364136223846793005ull + inc;
    std::uint32_t xs = static_cast<std::uint32_t>(((old >> 18) ^ old) >> 27);
    unsigned rot = static_cast<unsigned>(old >> 59);
    return rot == 0 ? xs : (xs >> rot) | (xs << (32 - rot));
  }
};

// Singular values by a different algorithm: eigenvalues of the Gram matrix.
Vector gram_singular_values(const Matrix& X) {
  const Matrix gram = X.transpose() * X;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  Vector ev = es.eigenvalues();  // ascending
  Vector s(ev.size());
  for (Index i = 0; i < ev.size(); ++i) {
    s(i) = std::sqrt(std::max(0.0, ev(ev.size() - 1 - i)));
  }
  return s;
}

double t_pdf(double x, int df) {
  const double v = static_cast<double>(df);
  const double log_c = std::lgamma((v + 1.0) / 2.0) - std::lgamma(v / 2.0) -
                       0.5 * std::log(v * std::acos(-1.0));
  return std::exp(log_c - (v + 1.0) / 2.0 * std::log1p(x * x / v));
}

// Composite Simpson integral of the t pdf over [0, t].
double t_cdf_integral(double t, int df, int intervals = 40000) {
  double h = t / intervals;
  double acc = t_pdf(0.0, df) + t_pdf(t, df);
  for (int i = 1; i < intervals; ++i) {
    acc += t_pdf(i * h, df) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return acc * h / 3.0;
}

double oracle_t_sf(double t, int df) {
  if (t < 0) return 1.0 - oracle_t_sf(-t, df);
  return 0.5 - t_cdf_integral(t, df);
}

Matrix deterministic_matrix(Index rows, Index cols, std::uint64_t salt) {
  qie::RandomStream stream(salt, "test/matrix");
  return stream.normal_matrix(rows, cols);
}

}  // namespace

TEST_SUITE_BEGIN("numerics");

TEST_CASE("pcg32 matches the published reference sequence") {
  // First outputs of pcg32 seeded with (42, 54), from the pcg-random.org
  // reference implementation's demo output.
  qie::Pcg32 gen(42, 54);
  const std::uint32_t expected[] = {0xa15c02b7u, 0x7b47f409u, 0xba1d3330u,
                                    0x83d2f293u, 0xbfa4784bu, 0xcbed606eu};
  for (const std::uint32_t want : expected) {
    CHECK(gen.next_u32() == want);
  }
}

TEST_CASE("pcg32 agrees with an independent reimplementation") {
  const std::uint64_t seeds[][2] = {{1, 1}, {0, 0}, {123456789, 987654321},
                                    {0xdeadbeefcafef00dull, 42}};
  for (const auto& sp : seeds) {
    qie::Pcg32 a(sp[0], sp[1]);
    PcgOracle b(sp[0], sp[1]);
    for (int i = 0; i < 1000; ++i) {
      REQUIRE(a.next_u32() == b.step());
    }
  }
}

TEST_CASE("fnv1a64 known values") {
  // FNV-1a 64-bit test vectors: offset basis for "", and the standard
  // published hash of "a".
  CHECK(qie::fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(qie::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(qie::fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("splitmix64 known values") {
  // splitmix64(x) returns the next output of the published generator whose
  // state is x, so the reference sequence for state 0 appears at inputs
  // 0, gamma, 2*gamma (gamma = 0x9e3779b97f4a7c15).
  const std::uint64_t gamma = 0x9e3779b97f4a7c15ull;
  CHECK(qie::splitmix64(0) == 0xe220a8397b1dcdafull);
  CHECK(qie::splitmix64(gamma) == 0x6e789e6aa1b965f4ull);
  CHECK(qie::splitmix64(2 * gamma) == 0x06c45d188009454full);
}

TEST_CASE("random stream: determinism and label separation") {
  qie::RandomStream a(7, "wine/split");
  qie::RandomStream b(7, "wine/split");
  qie::RandomStream c(7, "wine/cka");
  qie::RandomStream d(8, "wine/split");
  bool all_equal = true;
  bool c_differs = false;
  bool d_differs = false;
  for (int i = 0; i < 200; ++i) {
    const std::uint32_t va = a.next_u32();
    if (va != b.next_u32()) all_equal = false;
    if (va != c.next_u32()) c_differs = true;
    if (va != d.next_u32()) d_differs = true;
  }
  CHECK(all_equal);
  CHECK(c_differs);
  CHECK(d_differs);
}

TEST_CASE("uniform: range and moments") {
  qie::RandomStream stream(99, "test/uniform");
  double lo = 1.0, hi = 0.0, sum = 0.0, sum_sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = stream.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
    sum_sq += u * u;
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  const double var = sum_sq / n - (sum / n) * (sum / n);
  CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.03));
}

TEST_CASE("normal: moments and tail behaviour") {
  qie::RandomStream stream(99, "test/normal");
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0, sum_cube = 0.0;
  int beyond_3 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = stream.normal();
    sum += z;
    sum_sq += z * z;
    sum_cube += z * z * z;
    if (std::abs(z) > 3.0) ++beyond_3;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
  CHECK(sum_sq / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(sum_cube / n) < 0.05);
  // P(|Z| > 3) ~ 0.0027
  CHECK(beyond_3 > 100);
  CHECK(beyond_3 < 600);
}

TEST_CASE("uniform_u32: bounds and uniformity") {
  qie::RandomStream stream(1, "test/u32");
  CHECK(stream.uniform_u32(1) == 0);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const std::uint32_t v = stream.uniform_u32(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  for (const int c : counts) {
    CHECK(c > 9000);
    CHECK(c < 11000);
  }
  CHECK_THROWS_AS(stream.uniform_u32(0), qie::InvalidInputError);
}

TEST_CASE("permutation: validity and first-position uniformity") {
  qie::RandomStream stream(3, "test/perm");
  auto p = stream.permutation(100);
  std::set<Index> seen(p.begin(), p.end());
  CHECK(seen.size() == 100);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 99);

  std::vector<int> first_counts(5, 0);
  for (int i = 0; i < 50000; ++i) {
    auto q = stream.permutation(5);
    ++first_counts[q[0]];
  }
  for (const int c : first_counts) {
    CHECK(c > 9000);
    CHECK(c < 11000);
  }
}

TEST_CASE("normal_matrix is column-major deterministic") {
  qie::RandomStream a(5, "test/mat");
  qie::RandomStream b(5, "test/mat");
  const Matrix m = a.normal_matrix(3, 2);
  CHECK(m(0, 0) == b.normal());
  CHECK(m(1, 0) == b.normal());
  CHECK(m(2, 0) == b.normal());
  CHECK(m(0, 1) == b.normal());
}

TEST_CASE("svd: reconstruction and orthonormality on random matrices") {
  for (const auto& shape : {std::pair<Index, Index>{6, 3},
                            std::pair<Index, Index>{3, 6},
                            std::pair<Index, Index>{20, 20},
                            std::pair<Index, Index>{50, 7}}) {
    const Matrix X = deterministic_matrix(shape.first, shape.second,
                                          static_cast<std::uint64_t>(
                                              shape.first * 100 + shape.second));
    const auto r = qie::svd(X);
    const Index k = std::min(shape.first, shape.second);
    REQUIRE(r.singular_values.size() == k);
    const Matrix rec =
        r.left_vectors * r.singular_values.asDiagonal() * r.right_vectors.transpose();
    CHECK((rec - X).norm() <= 1e-8 * std::max(1.0, X.norm()));
    CHECK((r.left_vectors.transpose() * r.left_vectors -
           Matrix::Identity(k, k)).norm() <= 1e-8);
    CHECK((r.right_vectors.transpose() * r.right_vectors -
           Matrix::Identity(k, k)).norm() <= 1e-8);
    for (Index i = 0; i + 1 < k; ++i) {
      CHECK(r.singular_values(i) >= r.singular_values(i + 1));
    }
    CHECK(r.singular_values(k - 1) >= 0.0);
  }
}

TEST_CASE("svd: values agree with a Gram-matrix eigendecomposition oracle") {
  const Matrix X = deterministic_matrix(12, 5, 77);
  const Vector s = qie::singular_values(X);
  const Vector oracle = gram_singular_values(X);
  REQUIRE(s.size() == oracle.size());
  for (Index i = 0; i < s.size(); ++i) {
    CHECK(s(i) == doctest::Approx(oracle(i)).epsilon(1e-9));
  }
}

TEST_CASE("svd: exact spectra for diagonal and identity inputs") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = 1.0;
  const Vector s = qie::singular_values(d);
  CHECK(s(0) == doctest::Approx(3.0));
  CHECK(s(1) == doctest::Approx(1.0));

  const Vector si = qie::singular_values(Matrix::Identity(4, 4));
  for (Index i = 0; i < 4; ++i) {
    CHECK(si(i) == doctest::Approx(1.0));
  }
}

TEST_CASE("svd: rejects empty and non-finite input") {
  CHECK_THROWS_AS(qie::svd(Matrix(0, 0)), qie::InvalidInputError);
  Matrix bad = Matrix::Ones(2, 2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(qie::svd(bad), qie::InvalidInputError);
  bad(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(qie::singular_values(bad), qie::InvalidInputError);
}

TEST_CASE("singular_values consistent between small and large code paths") {
  // The values-only path switches algorithm on size; both must agree with the
  // full decomposition.
  const Matrix big = deterministic_matrix(64, 40, 11);
  const Vector fast = qie::singular_values(big);
  const Vector full = qie::svd(big).singular_values;
  REQUIRE(fast.size() == full.size());
  for (Index i = 0; i < fast.size(); ++i) {
    CHECK(fast(i) == doctest::Approx(full(i)).epsilon(1e-9));
  }
}

TEST_CASE("regularized incomplete beta: closed forms and symmetry") {
  // I_x(1,1) = x; I_x(2,2) = 3x^2 - 2x^3.
  for (const double x : {0.0, 0.1, 0.35, 0.5, 0.82, 1.0}) {
    CHECK(qie::regularized_incomplete_beta(x, 1.0, 1.0) ==
          doctest::Approx(x).epsilon(1e-12));
    CHECK(qie::regularized_incomplete_beta(x, 2.0, 2.0) ==
          doctest::Approx(3 * x * x - 2 * x * x * x).epsilon(1e-12));
  }
  for (const double x : {0.2, 0.6}) {
    const double direct = qie::regularized_incomplete_beta(x, 2.5, 4.0);
    const double mirrored = 1.0 - qie::regularized_incomplete_beta(1.0 - x, 4.0, 2.5);
    CHECK(direct == doctest::Approx(mirrored).epsilon(1e-12));
  }
}

TEST_CASE("student t sf: closed forms") {
  CHECK(qie::student_t_sf(0.0, 5) == doctest::Approx(0.5).epsilon(1e-12));
  // df=1 is Cauchy: sf(1) = 1/2 - atan(1)/pi = 1/4.
  CHECK(qie::student_t_sf(1.0, 1) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(qie::student_t_sf(-1.0, 1) == doctest::Approx(0.75).epsilon(1e-10));
}

TEST_CASE("student t sf: agrees with numeric integration for df in {4, 9}") {
  for (const int df : {4, 9}) {
    for (const double t : {0.3, 1.0, 2.0, 2.776, 4.5}) {
      const double got = qie::student_t_sf(t, df);
      const double want = oracle_t_sf(t, df);
      CHECK(std::abs(got - want) < 1e-9);
    }
  }
}

TEST_CASE("student t: symmetry, monotonicity, two-sided p") {
  for (const int df : {1, 4, 9, 30}) {
    double prev = 1.0;
    for (const double t : {-3.0, -1.0, 0.0, 0.5, 1.5, 3.0, 8.0}) {
      const double sf = qie::student_t_sf(t, df);
      CHECK(sf < prev);
      prev = sf;
      CHECK(qie::student_t_sf(t, df) + qie::student_t_sf(-t, df) ==
            doctest::Approx(1.0).epsilon(1e-10));
    }
  }
  // Classic table value: two-sided p of t = 2.776 at df = 4 is ~0.05.
  CHECK(qie::student_t_two_sided_p(2.7764451052, 4) ==
        doctest::Approx(0.05).epsilon(1e-6));
  CHECK(qie::student_t_two_sided_p(0.0, 7) == doctest::Approx(1.0));
}

TEST_CASE("student t: extreme and invalid arguments") {
  CHECK(qie::student_t_sf(std::numeric_limits<double>::infinity(), 3) == 0.0);
  CHECK(qie::student_t_sf(-std::numeric_limits<double>::infinity(), 3) == 1.0);
  CHECK_THROWS_AS(qie::student_t_sf(1.0, 0), qie::InvalidInputError);
  CHECK_THROWS_AS(qie::student_t_sf(std::nan(""), 4), qie::InvalidInputError);
}

TEST_CASE("student t ppf: inverts sf and matches table quantiles") {
  // 97.5% quantiles for df = 4 and 9 from standard t tables.
  CHECK(qie::student_t_ppf(0.975, 4) == doctest::Approx(2.7764451052).epsilon(1e-7));
  CHECK(qie::student_t_ppf(0.975, 9) == doctest::Approx(2.2621571628).epsilon(1e-7));
  CHECK(qie::student_t_ppf(0.5, 12) == doctest::Approx(0.0).epsilon(1e-10));
  for (const double p : {0.05, 0.3, 0.7, 0.99}) {
    const double q = qie::student_t_ppf(p, 6);
    CHECK(1.0 - qie::student_t_sf(q, 6) == doctest::Approx(p).epsilon(1e-9));
  }
  CHECK_THROWS_AS(qie::student_t_ppf(0.0, 4), qie::InvalidInputError);
  CHECK_THROWS_AS(qie::student_t_ppf(1.0, 4), qie::InvalidInputError);
}

TEST_SUITE_END();
