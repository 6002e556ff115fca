#include "qie/numerics.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <numbers>

namespace qie {

namespace {

void check_svd_input(const Eigen::Ref<const Matrix>& m) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw InvalidInputError("svd: matrix must have at least one row and column");
  }
  if (!m.allFinite()) {
    throw InvalidInputError("svd: input contains non-finite entries");
  }
}

}  // namespace

SvdResult svd(const Eigen::Ref<const Matrix>& m) {
  check_svd_input(m);
  Eigen::JacobiSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return SvdResult{dec.singularValues(), dec.matrixU(), dec.matrixV()};
}

Vector singular_values(const Eigen::Ref<const Matrix>& m) {
  check_svd_input(m);
  // Values-only path; BDC is much faster than Jacobi on the wider encoded
  // matrices and more than accurate enough for spectral diagnostics.
  if (m.rows() >= 32 && m.cols() >= 32) {
    Eigen::BDCSVD<Matrix> dec(m);
    return dec.singularValues();
  }
  Eigen::JacobiSVD<Matrix> dec(m);
  return dec.singularValues();
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

// (seed, label) -> generator; stateless so streams can be created in any order.
Pcg32 make_generator(std::uint64_t seed, std::string_view label) {
  const std::uint64_t h = fnv1a64(label);
  return Pcg32(splitmix64(seed ^ h), splitmix64(h + 0x632be59bd9b4e019ULL));
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::string_view label)
    : gen_(make_generator(seed, label)) {}

double RandomStream::uniform() {
  const std::uint32_t a = next_u32() >> 5;  // 27 bits
  const std::uint32_t b = next_u32() >> 6;  // 26 bits
  return (a * 67108864.0 + b) * (1.0 / 9007199254740992.0);
}

double RandomStream::normal() {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 <= 0.0) {
    u1 = std::numeric_limits<double>::min();
  }
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint32_t RandomStream::uniform_u32(std::uint32_t bound) {
  if (bound == 0) {
    throw InvalidInputError("uniform_u32: bound must be >= 1");
  }
  // Rejection sampling over the largest multiple of bound.
  const std::uint32_t threshold = (-bound) % bound;
  for (;;) {
    const std::uint32_t r = next_u32();
    if (r >= threshold) {
      return r % bound;
    }
  }
}

std::vector<Index> RandomStream::permutation(Index n) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    idx[static_cast<std::size_t>(i)] = i;
  }
  shuffle(idx);
  return idx;
}

Matrix RandomStream::normal_matrix(Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      m(i, j) = normal();
    }
  }
  return m;
}

namespace {

// Continued fraction for the incomplete beta function (Lentz's method).
double incomplete_beta_cf(double x, double a, double b) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-15;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 400; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw InvalidInputError("regularized_incomplete_beta: a, b must be > 0");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw InvalidInputError("regularized_incomplete_beta: x must be in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * incomplete_beta_cf(x, a, b) / a;
  }
  return 1.0 - front * incomplete_beta_cf(1.0 - x, b, a) / b;
}

double student_t_sf(double t, int df) {
  if (df < 1) {
    throw InvalidInputError("student_t_sf: df must be >= 1");
  }
  if (!std::isfinite(t)) {
    if (std::isnan(t)) {
      throw InvalidInputError("student_t_sf: t is NaN");
    }
    return t > 0.0 ? 0.0 : 1.0;
  }
  if (t == 0.0) return 0.5;
  const double nu = static_cast<double>(df);
  const double x = nu / (nu + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(x, nu / 2.0, 0.5);
  return t > 0.0 ? tail : 1.0 - tail;
}

double student_t_two_sided_p(double t, int df) {
  const double sf = student_t_sf(t, df);
  return 2.0 * std::min(sf, 1.0 - sf);
}

double student_t_ppf(double p, int df) {
  if (!(p > 0.0 && p < 1.0)) {
    throw InvalidInputError("student_t_ppf: p must be in (0, 1)");
  }
  if (p == 0.5) return 0.0;  // exact by symmetry; sf loses precision at t ~ 0
  // cdf(t) = 1 - sf(t) is strictly increasing; bisect.
  double lo = -1.0;
  double hi = 1.0;
  const auto cdf = [df](double t) { return 1.0 - student_t_sf(t, df); };
  while (cdf(lo) > p) lo *= 2.0;
  while (cdf(hi) < p) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace qie
