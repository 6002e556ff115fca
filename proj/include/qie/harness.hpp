#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "qie/data.hpp"
#include "qie/diagnostics.hpp"
#include "qie/numerics.hpp"
#include "qie/stats.hpp"

namespace qie {

/// One dataset entry of the run matrix: a CSV file or a synthetic generator.
struct DatasetSpec {
  std::string name;
  std::string kind;  // "csv", "parity", "highrank"
  // csv
  std::string path;
  CsvSchema schema;
  bool optional = false;  // silently skip when the file is missing
  // synthetic (0 = kind default)
  Index n = 0;
  Index d = 0;
  Index k = 0;
  std::uint64_t gen_seed = 1234;  // generation is fixed across run seeds
};

struct ProbeConfig {
  double lambda = 1.0;
  int max_iter = 500;
  double tol = 1e-6;
};

struct RunConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds{7, 42, 99, 1337, 2026};
  double test_fraction = 0.2;
  ProbeConfig probe;
  std::string out_dir = "results";
  int jobs = 1;
  bool record_timings = false;  // false keeps results.json byte-stable
  double poly_budget_mb = 512.0;
  bool compute_cka = true;
  std::string baseline_metric = "accuracy";  // or "macro_f1"
  Index cka_max_rows = 2000;
  Index rff_dim = 0;  // 0 = match the angle output dimension 2d
  Index pca_dim = 0;  // 0 = match the angle output dimension 2d
};

/// Known method names: QIE {amplitude, angle, basis} and classical
/// {raw, rff, poly2, poly3, pca}.
const std::vector<std::string>& qie_method_names();
const std::vector<std::string>& classical_method_names();
bool is_known_method(const std::string& name);

/// Throws InvalidInputError on duplicate seeds, unknown methods, and other
/// constraint violations.
void validate_config(const RunConfig& config);

/// A trained feature transformation with its train-set statistics baked in.
struct FittedMap {
  virtual ~FittedMap() = default;
  virtual Matrix transform(const Eigen::Ref<const Matrix>& X) const = 0;
  virtual Index output_dim() const = 0;
};

/// Wall-clock milliseconds of transform only (excluding fit), median of 3.
double time_encoding(const FittedMap& map, const Eigen::Ref<const Matrix>& X);

struct CellResult {
  std::string dataset;
  std::string method;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  Index output_dim = 0;
  SpectralReport spectral;  // of the encoded train matrix
  double encode_time_ms = 0.0;
  double fit_time_ms = 0.0;
  double train_time_s = 0.0;
  int probe_iterations = 0;
  bool probe_converged = false;
  std::string split_fingerprint;  // equal across methods of one (dataset, seed)
};

struct SkippedCell {
  std::string dataset;
  std::string method;
  std::uint64_t seed = 0;
  std::string reason;
};

struct CkaEntry {
  std::string dataset;
  std::uint64_t seed = 0;
  std::string rep_a;
  std::string rep_b;
  double value = 0.0;
  Index sample_count = 0;
};

struct RunError {
  std::string dataset;
  std::string message;
};

struct Report {
  RunConfig config;  // out_dir and jobs are not echoed into serialized output
  std::string version;
  std::vector<CellResult> cells;
  std::vector<SkippedCell> skipped;
  std::vector<PairedComparison> comparisons;
  std::vector<CkaEntry> cka;
  std::vector<RunError> errors;
};

/// Full run matrix: one stratified split per (dataset, seed) shared by all
/// methods; per-cell probe metrics and spectral diagnostics; CKA per
/// (dataset, seed); paired comparisons against the best classical baseline.
Report run_benchmark(const RunConfig& config);

/// Writes results.json, cells.csv, comparisons.csv, cka.csv, forest.csv.
void emit_report(const Report& report, const std::string& out_dir);

std::string render_results_json(const Report& report);
std::string render_cells_csv(const Report& report);
std::string render_comparisons_csv(const Report& report);
std::string render_cka_csv(const Report& report);
std::string render_forest_csv(const Report& report);
std::string render_markdown(const Report& report);

/// JSON run config; unknown keys are rejected (SchemaError).
RunConfig load_config(const std::string& path);

/// Parses a results.json produced by emit_report back into a Report.
Report load_report(const std::string& path);

}  // namespace qie
