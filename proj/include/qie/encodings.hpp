#pragma once

#include "qie/data.hpp"
#include "qie/numerics.hpp"

namespace qie {

/// L2-normalization plus zero padding to the nearest power of two.
struct AmplitudeMap {
  Index input_dim = 0;
  Index output_dim = 0;  // 2^ceil(log2 input_dim)
  double epsilon = 1e-12;
};

AmplitudeMap make_amplitude_map(Index input_dim);

/// Each row divided by (||row||_2 + epsilon), then zero-padded. Zero rows map
/// to all-zeros; every other output row has norm within 1e-9 of 1.
Matrix amplitude_encode(const AmplitudeMap& map, const Eigen::Ref<const Matrix>& X);

/// Per-feature rotation pairs [cos(theta/2), sin(theta/2)] with
/// theta = pi * x_tilde, x_tilde min-max scaled to [-1, 1] on train statistics.
struct AngleMap {
  MinMaxScaler scaler;
  Index input_dim = 0;
  Index output_dim = 0;  // 2 * input_dim
  bool fitted = false;
};

AngleMap fit_angle(const Eigen::Ref<const Matrix>& train);
Matrix angle_encode(const AngleMap& map, const Eigen::Ref<const Matrix>& X);

/// 8-bit quantization against train min/max, emitted MSB-first.
struct BasisMap {
  Vector min;
  Vector max;
  Index input_dim = 0;
  Index output_dim = 0;  // 8 * input_dim
  static constexpr int bits_per_feature = 8;
  bool fitted = false;
};

BasisMap fit_basis(const Eigen::Ref<const Matrix>& train);

/// q = round-half-up(255 * (x - min) / (max - min)) clamped to [0, 255];
/// constant columns quantize to 0. Output entries are exactly 0 or 1.
Matrix basis_encode(const BasisMap& map, const Eigen::Ref<const Matrix>& X);

}  // namespace qie
