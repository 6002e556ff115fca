#include "qie/encodings.hpp"

#include <cmath>
#include <numbers>

namespace qie {

namespace {

Index next_power_of_two(Index d) {
  Index p = 1;
  while (p < d) p <<= 1;
  return p;
}

void check_cols(const Eigen::Ref<const Matrix>& X, Index expected,
                const char* what) {
  if (X.cols() != expected) {
    throw InvalidInputError(std::string(what) + ": expected " +
                            std::to_string(expected) + " columns, got " +
                            std::to_string(X.cols()));
  }
}

}  // namespace

AmplitudeMap make_amplitude_map(Index input_dim) {
  if (input_dim < 1) {
    throw InvalidInputError("make_amplitude_map: input_dim must be >= 1");
  }
  AmplitudeMap map;
  map.input_dim = input_dim;
  map.output_dim = next_power_of_two(input_dim);
  return map;
}

Matrix amplitude_encode(const AmplitudeMap& map, const Eigen::Ref<const Matrix>& X) {
  if (map.input_dim < 1) {
    throw UsageError("amplitude_encode: map not initialized");
  }
  check_cols(X, map.input_dim, "amplitude_encode");
  Matrix out = Matrix::Zero(X.rows(), map.output_dim);
  for (Index i = 0; i < X.rows(); ++i) {
    out.row(i).head(map.input_dim) = X.row(i) / (X.row(i).norm() + map.epsilon);
  }
  return out;
}

AngleMap fit_angle(const Eigen::Ref<const Matrix>& train) {
  AngleMap map;
  map.scaler = fit_minmax(train);
  map.input_dim = train.cols();
  map.output_dim = 2 * train.cols();
  map.fitted = true;
  return map;
}

Matrix angle_encode(const AngleMap& map, const Eigen::Ref<const Matrix>& X) {
  if (!map.fitted) {
    throw UsageError("angle_encode: map has not been fitted");
  }
  check_cols(X, map.input_dim, "angle_encode");
  const Matrix scaled = minmax_transform(map.scaler, X);
  Matrix out(X.rows(), map.output_dim);
  constexpr double half_pi = std::numbers::pi / 2.0;
  for (Index j = 0; j < map.input_dim; ++j) {
    out.col(2 * j) = (scaled.col(j).array() * half_pi).cos();
    out.col(2 * j + 1) = (scaled.col(j).array() * half_pi).sin();
  }
  return out;
}

BasisMap fit_basis(const Eigen::Ref<const Matrix>& train) {
  if (train.rows() < 2) {
    throw InvalidInputError("fit_basis: need at least 2 training rows");
  }
  BasisMap map;
  map.min = train.colwise().minCoeff();
  map.max = train.colwise().maxCoeff();
  map.input_dim = train.cols();
  map.output_dim = BasisMap::bits_per_feature * train.cols();
  map.fitted = true;
  return map;
}

Matrix basis_encode(const BasisMap& map, const Eigen::Ref<const Matrix>& X) {
  if (!map.fitted) {
    throw UsageError("basis_encode: map has not been fitted");
  }
  check_cols(X, map.input_dim, "basis_encode");
  constexpr int bits = BasisMap::bits_per_feature;
  Matrix out(X.rows(), map.output_dim);
  for (Index j = 0; j < map.input_dim; ++j) {
    const double range = map.max(j) - map.min(j);
    for (Index i = 0; i < X.rows(); ++i) {
      int q = 0;
      if (range >= 1e-12) {
        const double scaled = 255.0 * (X(i, j) - map.min(j)) / range;
        // round half up, clamping before the int cast can overflow
        q = static_cast<int>(std::clamp(std::floor(scaled + 0.5), 0.0, 255.0));
      }
      for (int b = 0; b < bits; ++b) {
        out(i, j * bits + b) = static_cast<double>((q >> (bits - 1 - b)) & 1);
      }
    }
  }
  return out;
}

}  // namespace qie
