#pragma once

#include <string>
#include <vector>

#include "qie/numerics.hpp"

namespace qie {

/// Named feature matrix with integer class labels in [0, class_count).
struct Dataset {
  std::string name;
  Matrix features;          // n x d
  std::vector<int> labels;  // length n
  int class_count = 0;
};

/// Throws InvalidInputError unless labels match the feature rows, every id is
/// in [0, class_count), at least 2 classes exist, and all features are finite.
void validate_dataset(const Dataset& ds);

/// Disjoint train/test row indices covering [0, n), each sorted ascending.
struct Split {
  std::vector<Index> train_indices;
  std::vector<Index> test_indices;
};

/// Column spec for CSV ingestion. feature_columns empty means "all non-label
/// columns in file order". class_names empty means labels are inferred from
/// the file: distinct values sorted numerically when they all parse as
/// integers, lexicographically otherwise.
struct CsvSchema {
  std::string label_column;
  std::vector<std::string> feature_columns;
  std::vector<std::string> class_names;
};

/// RFC-4180 CSV with a required header row. Errors: IoError (missing file),
/// ParseError (bad numeric cell or ragged record, with row/column context),
/// SchemaError (missing column, duplicate header, unknown label value).
Dataset load_csv(const std::string& path, const CsvSchema& schema,
                 const std::string& name);

/// Per-class split: each class contributes round(test_fraction * n_c) test
/// rows, clamped to [1, n_c - 1]. Deterministic given the stream.
Split stratified_split(const Dataset& ds, double test_fraction,
                       RandomStream& stream);

/// XOR task: features uniform in {-1, +1}; label 1 iff the product of the
/// first k coordinates is negative.
Dataset gen_parity(Index n, Index d, Index k, RandomStream& stream);

/// Isotropic standard normals; label = [ <w, x> > 0 ] for a fixed
/// stream-drawn unit vector w.
Dataset gen_high_rank_noise(Index n, Index d, RandomStream& stream);

/// Per-column train mean and sample standard deviation (n-1 denominator).
struct Standardizer {
  Vector mean;
  Vector std;  // columns with std < 1e-12 transform to 0
};

Standardizer fit_standardizer(const Eigen::Ref<const Matrix>& train);
Matrix standardize(const Standardizer& s, const Eigen::Ref<const Matrix>& X);

/// Per-column train min/max mapping onto [-1, 1]; out-of-range values clamp.
struct MinMaxScaler {
  Vector min;
  Vector max;  // columns with max - min < 1e-12 transform to 0
};

MinMaxScaler fit_minmax(const Eigen::Ref<const Matrix>& train);
Matrix minmax_transform(const MinMaxScaler& s, const Eigen::Ref<const Matrix>& X);

Matrix select_rows(const Eigen::Ref<const Matrix>& X,
                   const std::vector<Index>& indices);
std::vector<int> select_labels(const std::vector<int>& y,
                               const std::vector<Index>& indices);

}  // namespace qie
