#include "qie/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace qie {

void validate_dataset(const Dataset& ds) {
  const Index n = ds.features.rows();
  if (n < 1 || ds.features.cols() < 1) {
    throw InvalidInputError("dataset '" + ds.name + "': empty feature matrix");
  }
  if (static_cast<Index>(ds.labels.size()) != n) {
    throw InvalidInputError("dataset '" + ds.name + "': " +
                            std::to_string(ds.labels.size()) + " labels for " +
                            std::to_string(n) + " rows");
  }
  if (ds.class_count < 2) {
    throw InvalidInputError("dataset '" + ds.name + "': needs at least 2 classes");
  }
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    if (ds.labels[i] < 0 || ds.labels[i] >= ds.class_count) {
      throw InvalidInputError("dataset '" + ds.name + "': label " +
                              std::to_string(ds.labels[i]) + " at row " +
                              std::to_string(i) + " outside [0, " +
                              std::to_string(ds.class_count) + ")");
    }
  }
  if (!ds.features.allFinite()) {
    throw InvalidInputError("dataset '" + ds.name + "': non-finite feature value");
  }
}

namespace {

// RFC-4180 field splitter: quoted fields may contain commas, newlines, and
// doubled quotes. Returns one record per row, handling CRLF line endings.
std::vector<std::vector<std::string>> parse_csv_records(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool record_has_content = false;

  const auto end_field = [&] {
    record.push_back(field);
    field.clear();
    record_has_content = true;
  };
  const auto end_record = [&] {
    if (record_has_content || !field.empty()) {
      end_field();
      records.push_back(record);
      record.clear();
      record_has_content = false;
    }
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (in_quotes) {
    throw ParseError("csv: unterminated quoted field");
  }
  end_record();
  return records;
}

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& raw, std::size_t row,
                    const std::string& column) {
  const std::string s = trimmed(raw);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("csv: cannot parse \"" + raw + "\" as a number at row " +
                     std::to_string(row) + ", column \"" + column + "\"");
  }
  return value;
}

bool parse_integer(const std::string& s, long long& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema,
                 const std::string& name) {
  if (schema.label_column.empty()) {
    throw SchemaError("csv schema for '" + name + "': label_column is required");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open csv file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  if (text.size() >= 3 && text[0] == '\xef' && text[1] == '\xbb' && text[2] == '\xbf') {
    text.erase(0, 3);  // UTF-8 BOM
  }

  const auto records = parse_csv_records(text);
  if (records.size() < 2) {
    throw ParseError("csv " + path + ": need a header row and at least one data row");
  }

  std::vector<std::string> header;
  header.reserve(records[0].size());
  for (const auto& h : records[0]) header.push_back(trimmed(h));

  std::unordered_map<std::string, std::size_t> column_index;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (!column_index.emplace(header[j], j).second) {
      throw SchemaError("csv " + path + ": duplicate header column \"" + header[j] + "\"");
    }
  }
  const auto label_it = column_index.find(schema.label_column);
  if (label_it == column_index.end()) {
    throw SchemaError("csv " + path + ": label column \"" + schema.label_column +
                      "\" not found in header");
  }
  const std::size_t label_col = label_it->second;

  std::vector<std::size_t> feature_cols;
  std::vector<std::string> feature_names;
  if (schema.feature_columns.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j != label_col) {
        feature_cols.push_back(j);
        feature_names.push_back(header[j]);
      }
    }
  } else {
    for (const auto& fname : schema.feature_columns) {
      const auto it = column_index.find(fname);
      if (it == column_index.end()) {
        throw SchemaError("csv " + path + ": feature column \"" + fname +
                          "\" not found in header");
      }
      if (it->second == label_col) {
        throw SchemaError("csv " + path + ": column \"" + fname +
                          "\" is both feature and label");
      }
      feature_cols.push_back(it->second);
      feature_names.push_back(fname);
    }
  }
  if (feature_cols.empty()) {
    throw SchemaError("csv " + path + ": no feature columns");
  }

  const std::size_t n = records.size() - 1;
  const std::size_t d = feature_cols.size();
  Matrix X(static_cast<Index>(n), static_cast<Index>(d));
  std::vector<std::string> raw_labels(n);

  for (std::size_t r = 0; r < n; ++r) {
    const auto& rec = records[r + 1];
    if (rec.size() != header.size()) {
      throw ParseError("csv " + path + ": row " + std::to_string(r + 1) + " has " +
                       std::to_string(rec.size()) + " fields, expected " +
                       std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < d; ++j) {
      X(static_cast<Index>(r), static_cast<Index>(j)) =
          parse_double(rec[feature_cols[j]], r + 1, feature_names[j]);
    }
    raw_labels[r] = trimmed(rec[label_col]);
  }

  // Map label strings to contiguous ids.
  std::vector<std::string> classes = schema.class_names;
  if (classes.empty()) {
    std::map<std::string, bool> seen;
    for (const auto& s : raw_labels) seen.emplace(s, true);
    for (const auto& [s, _] : seen) classes.push_back(s);
    bool all_int = true;
    std::vector<std::pair<long long, std::string>> numeric;
    for (const auto& s : classes) {
      long long v = 0;
      if (!parse_integer(s, v)) {
        all_int = false;
        break;
      }
      numeric.emplace_back(v, s);
    }
    if (all_int) {
      std::sort(numeric.begin(), numeric.end());
      classes.clear();
      for (const auto& [_, s] : numeric) classes.push_back(s);
    }
  }
  std::unordered_map<std::string, int> class_id;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    class_id.emplace(classes[c], static_cast<int>(c));
  }

  Dataset ds;
  ds.name = name;
  ds.features = std::move(X);
  ds.labels.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto it = class_id.find(raw_labels[r]);
    if (it == class_id.end()) {
      throw SchemaError("csv " + path + ": unknown label value \"" + raw_labels[r] +
                        "\" at row " + std::to_string(r + 1));
    }
    ds.labels[r] = it->second;
  }
  ds.class_count = static_cast<int>(classes.size());
  validate_dataset(ds);
  return ds;
}

Split stratified_split(const Dataset& ds, double test_fraction,
                       RandomStream& stream) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidInputError("stratified_split: test_fraction must be in (0, 1)");
  }
  const Index n = ds.features.rows();
  std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(ds.class_count));
  for (Index i = 0; i < n; ++i) {
    by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])]
        .push_back(i);
  }
  Split split;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    if (rows.size() < 2) {
      throw InvalidInputError("stratified_split: class " + std::to_string(c) +
                              " of '" + ds.name + "' has fewer than 2 samples");
    }
    stream.shuffle(rows);
    const auto n_c = static_cast<long>(rows.size());
    const long want = std::lround(test_fraction * static_cast<double>(n_c));
    const long n_test = std::clamp(want, 1L, n_c - 1);
    for (long i = 0; i < n_c; ++i) {
      auto& side = i < n_test ? split.test_indices : split.train_indices;
      side.push_back(rows[static_cast<std::size_t>(i)]);
    }
  }
  std::sort(split.train_indices.begin(), split.train_indices.end());
  std::sort(split.test_indices.begin(), split.test_indices.end());
  return split;
}

Dataset gen_parity(Index n, Index d, Index k, RandomStream& stream) {
  if (n < 1 || d < 1 || k < 1) {
    throw InvalidInputError("gen_parity: n, d, k must be >= 1");
  }
  if (k > d) {
    throw InvalidInputError("gen_parity: k must not exceed d");
  }
  Dataset ds;
  ds.name = "parity";
  ds.features.resize(n, d);
  ds.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    int negatives = 0;
    for (Index j = 0; j < d; ++j) {
      const bool neg = stream.uniform_u32(2) == 0;
      ds.features(i, j) = neg ? -1.0 : 1.0;
      if (neg && j < k) ++negatives;
    }
    ds.labels[static_cast<std::size_t>(i)] = negatives % 2;
  }
  ds.class_count = 2;
  return ds;
}

Dataset gen_high_rank_noise(Index n, Index d, RandomStream& stream) {
  if (n < 1 || d < 1) {
    throw InvalidInputError("gen_high_rank_noise: n, d must be >= 1");
  }
  Vector w(d);
  for (Index j = 0; j < d; ++j) w(j) = stream.normal();
  w /= w.norm();

  Dataset ds;
  ds.name = "high_rank_noise";
  ds.features.resize(n, d);
  ds.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) ds.features(i, j) = stream.normal();
    ds.labels[static_cast<std::size_t>(i)] = ds.features.row(i).dot(w) > 0.0 ? 1 : 0;
  }
  ds.class_count = 2;
  return ds;
}

Standardizer fit_standardizer(const Eigen::Ref<const Matrix>& train) {
  if (train.rows() < 2) {
    throw InvalidInputError("fit_standardizer: need at least 2 training rows");
  }
  Standardizer s;
  s.mean = train.colwise().mean();
  const Matrix centered = train.rowwise() - s.mean.transpose();
  s.std = (centered.colwise().squaredNorm() /
           static_cast<double>(train.rows() - 1))
              .cwiseSqrt()
              .transpose();
  return s;
}

Matrix standardize(const Standardizer& s, const Eigen::Ref<const Matrix>& X) {
  if (X.cols() != s.mean.size()) {
    throw InvalidInputError("standardize: expected " + std::to_string(s.mean.size()) +
                            " columns, got " + std::to_string(X.cols()));
  }
  Matrix out = X.rowwise() - s.mean.transpose();
  for (Index j = 0; j < out.cols(); ++j) {
    if (s.std(j) < 1e-12) {
      out.col(j).setZero();
    } else {
      out.col(j) /= s.std(j);
    }
  }
  return out;
}

MinMaxScaler fit_minmax(const Eigen::Ref<const Matrix>& train) {
  if (train.rows() < 2) {
    throw InvalidInputError("fit_minmax: need at least 2 training rows");
  }
  MinMaxScaler s;
  s.min = train.colwise().minCoeff();
  s.max = train.colwise().maxCoeff();
  return s;
}

Matrix minmax_transform(const MinMaxScaler& s, const Eigen::Ref<const Matrix>& X) {
  if (X.cols() != s.min.size()) {
    throw InvalidInputError("minmax_transform: expected " +
                            std::to_string(s.min.size()) + " columns, got " +
                            std::to_string(X.cols()));
  }
  Matrix out(X.rows(), X.cols());
  for (Index j = 0; j < X.cols(); ++j) {
    const double range = s.max(j) - s.min(j);
    if (range < 1e-12) {
      out.col(j).setZero();
    } else {
      out.col(j) = ((X.col(j).array() - s.min(j)) * (2.0 / range) - 1.0)
                       .cwiseMax(-1.0)
                       .cwiseMin(1.0);
    }
  }
  return out;
}

Matrix select_rows(const Eigen::Ref<const Matrix>& X,
                   const std::vector<Index>& indices) {
  Matrix out(static_cast<Index>(indices.size()), X.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.row(static_cast<Index>(i)) = X.row(indices[i]);
  }
  return out;
}

std::vector<int> select_labels(const std::vector<int>& y,
                               const std::vector<Index>& indices) {
  std::vector<int> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out[i] = y[static_cast<std::size_t>(indices[i])];
  }
  return out;
}

}  // namespace qie
