#include "qie/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "qie/classical.hpp"
#include "qie/encodings.hpp"
#include "qie/probe.hpp"
#include "qie/version.hpp"

namespace qie {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) {
    return "0";
  }
  return std::string(buf, ptr);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

double elapsed_ms(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

const std::vector<std::string>& qie_method_names() {
  static const std::vector<std::string> names{"amplitude", "angle", "basis"};
  return names;
}

const std::vector<std::string>& classical_method_names() {
  static const std::vector<std::string> names{"raw", "rff", "poly2", "poly3", "pca"};
  return names;
}

bool is_known_method(const std::string& name) {
  const auto& q = qie_method_names();
  const auto& c = classical_method_names();
  return std::find(q.begin(), q.end(), name) != q.end() ||
         std::find(c.begin(), c.end(), name) != c.end();
}

void validate_config(const RunConfig& config) {
  if (config.datasets.empty()) {
    throw InvalidInputError("config: at least one dataset is required");
  }
  std::set<std::string> names;
  for (const auto& spec : config.datasets) {
    if (spec.name.empty()) {
      throw InvalidInputError("config: dataset with empty name");
    }
    if (!names.insert(spec.name).second) {
      throw InvalidInputError("config: duplicate dataset name '" + spec.name + "'");
    }
    if (spec.kind != "csv" && spec.kind != "parity" && spec.kind != "highrank") {
      throw InvalidInputError("config: dataset '" + spec.name +
                              "' has unknown kind '" + spec.kind + "'");
    }
    if (spec.kind == "csv") {
      if (spec.path.empty()) {
        throw InvalidInputError("config: csv dataset '" + spec.name + "' needs a path");
      }
      if (spec.schema.label_column.empty()) {
        throw InvalidInputError("config: csv dataset '" + spec.name +
                                "' needs a label_column");
      }
    }
    if (spec.n < 0 || spec.d < 0 || spec.k < 0) {
      throw InvalidInputError("config: dataset '" + spec.name +
                              "' has negative generator sizes");
    }
  }
  if (config.methods.empty()) {
    throw InvalidInputError("config: at least one method is required");
  }
  std::set<std::string> methods;
  for (const auto& m : config.methods) {
    if (!is_known_method(m)) {
      throw InvalidInputError("config: unknown method '" + m + "'");
    }
    if (!methods.insert(m).second) {
      throw InvalidInputError("config: duplicate method '" + m + "'");
    }
  }
  if (config.seeds.empty()) {
    throw InvalidInputError("config: at least one seed is required");
  }
  std::set<std::uint64_t> seeds(config.seeds.begin(), config.seeds.end());
  if (seeds.size() != config.seeds.size()) {
    throw InvalidInputError("config: seeds must be distinct");
  }
  if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0)) {
    throw InvalidInputError("config: test_fraction must be in (0, 1)");
  }
  if (!(config.probe.lambda >= 0.0) || config.probe.max_iter < 1 ||
      !(config.probe.tol > 0.0)) {
    throw InvalidInputError("config: invalid probe options");
  }
  if (config.jobs < 1) {
    throw InvalidInputError("config: jobs must be >= 1");
  }
  if (config.poly_budget_mb < 0.0) {
    throw InvalidInputError("config: poly_budget_mb must be >= 0");
  }
  if (config.baseline_metric != "accuracy" && config.baseline_metric != "macro_f1") {
    throw InvalidInputError("config: baseline_metric must be accuracy or macro_f1");
  }
  if (config.cka_max_rows < 2) {
    throw InvalidInputError("config: cka_max_rows must be >= 2");
  }
  if (config.rff_dim < 0 || config.pca_dim < 0) {
    throw InvalidInputError("config: dimension overrides must be >= 0");
  }
}

namespace {

RunConfig normalized(RunConfig config) {
  for (auto& spec : config.datasets) {
    if (spec.kind == "parity") {
      if (spec.n == 0) spec.n = 10000;
      if (spec.d == 0) spec.d = 20;
      if (spec.k == 0) spec.k = 10;
    } else if (spec.kind == "highrank") {
      if (spec.n == 0) spec.n = 5000;
      if (spec.d == 0) spec.d = 200;
    }
  }
  return config;
}

// ---------------------------------------------------------------------------
// Method registry

struct IdentityFitted final : FittedMap {
  Index dim = 0;
  Matrix transform(const Eigen::Ref<const Matrix>& X) const override { return X; }
  Index output_dim() const override { return dim; }
};

struct AmplitudeFitted final : FittedMap {
  AmplitudeMap map;
  Matrix transform(const Eigen::Ref<const Matrix>& X) const override {
    return amplitude_encode(map, X);
  }
  Index output_dim() const override { return map.output_dim; }
};

struct AngleFitted final : FittedMap {
  AngleMap map;
  Matrix transform(const Eigen::Ref<const Matrix>& X) const override {
    return angle_encode(map, X);
  }
  Index output_dim() const override { return map.output_dim; }
};

struct BasisFitted final : FittedMap {
  BasisMap map;
  Matrix transform(const Eigen::Ref<const Matrix>& X) const override {
    return basis_encode(map, X);
  }
  Index output_dim() const override { return map.output_dim; }
};

struct RffFitted final : FittedMap {
  RffMap map;
  Matrix transform(const Eigen::Ref<const Matrix>& X) const override {
    return rff_transform(map, X);
  }
  Index output_dim() const override { return map.output_dim; }
};

struct PolyFitted final : FittedMap {
  int degree = 2;
  Index dim_in = 0;
  Index dim_out = 0;
  double budget_mb = 0.0;
  Matrix transform(const Eigen::Ref<const Matrix>& X) const override {
    return poly_expand(X, degree, budget_mb);
  }
  Index output_dim() const override { return dim_out; }
};

struct PcaFitted final : FittedMap {
  PcaMap map;
  Matrix transform(const Eigen::Ref<const Matrix>& X) const override {
    return pca_transform(map, X);
  }
  Index output_dim() const override { return map.output_dim; }
};

struct Fold {
  Split split;
  std::string fingerprint;
  Matrix train_raw, test_raw, train_std, test_std;
  std::vector<int> y_train, y_test;
};

bool method_uses_standardized(const std::string& method) {
  // QIE maps consume raw features (amplitude normalizes the raw vector; angle
  // and basis fit their own per-column ranges). Classical baselines consume
  // standardized features.
  return method == "raw" || method == "rff" || method == "poly2" ||
         method == "poly3" || method == "pca";
}

std::unique_ptr<FittedMap> fit_method(const std::string& method,
                                      const std::string& dataset,
                                      std::uint64_t seed, const Fold& fold,
                                      const RunConfig& config) {
  if (method == "raw") {
    auto m = std::make_unique<IdentityFitted>();
    m->dim = fold.train_std.cols();
    return m;
  }
  if (method == "amplitude") {
    auto m = std::make_unique<AmplitudeFitted>();
    m->map = make_amplitude_map(fold.train_raw.cols());
    return m;
  }
  if (method == "angle") {
    auto m = std::make_unique<AngleFitted>();
    m->map = fit_angle(fold.train_raw);
    return m;
  }
  if (method == "basis") {
    auto m = std::make_unique<BasisFitted>();
    m->map = fit_basis(fold.train_raw);
    return m;
  }
  if (method == "rff") {
    const Index d = fold.train_std.cols();
    const Index D = config.rff_dim > 0 ? config.rff_dim : 2 * d;
    RandomStream median_stream(seed, dataset + "/rff/median");
    const double sigma =
        median_heuristic_sigma(fold.train_std, median_stream, 1000);
    RandomStream weight_stream(seed, dataset + "/rff/weights");
    auto m = std::make_unique<RffFitted>();
    m->map = fit_rff(d, D, sigma, weight_stream);
    return m;
  }
  if (method == "poly2" || method == "poly3") {
    const int degree = method == "poly3" ? 3 : 2;
    const Index d = fold.train_std.cols();
    const Index d_out = poly_output_dim(d, degree);
    if (config.poly_budget_mb > 0.0) {
      const double mb = static_cast<double>(fold.train_std.rows()) *
                        static_cast<double>(d_out) * 8.0 / (1024.0 * 1024.0);
      if (mb > config.poly_budget_mb) {
        throw FeasibilityError(
            method + ": train expansion needs " +
            std::to_string(static_cast<long long>(mb)) + " MB, budget is " +
            std::to_string(static_cast<long long>(config.poly_budget_mb)) + " MB");
      }
    }
    auto m = std::make_unique<PolyFitted>();
    m->degree = degree;
    m->dim_in = d;
    m->dim_out = d_out;
    m->budget_mb = config.poly_budget_mb;
    return m;
  }
  if (method == "pca") {
    const Index d = fold.train_std.cols();
    const Index target = config.pca_dim > 0 ? config.pca_dim : 2 * d;
    auto m = std::make_unique<PcaFitted>();
    m->map = fit_pca(fold.train_std, target);
    return m;
  }
  throw InvalidInputError("unknown method '" + method + "'");
}

std::string split_fingerprint(const Split& split) {
  std::string acc = "train:";
  for (const Index i : split.train_indices) {
    acc += std::to_string(i);
    acc += ',';
  }
  acc += "|test:";
  for (const Index i : split.test_indices) {
    acc += std::to_string(i);
    acc += ',';
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(acc)));
  return std::string(buf);
}

Fold make_fold(const Dataset& ds, std::uint64_t seed, double test_fraction) {
  RandomStream stream(seed, ds.name + "/split");
  Fold fold;
  fold.split = stratified_split(ds, test_fraction, stream);
  fold.fingerprint = split_fingerprint(fold.split);
  fold.train_raw = select_rows(ds.features, fold.split.train_indices);
  fold.test_raw = select_rows(ds.features, fold.split.test_indices);
  fold.y_train = select_labels(ds.labels, fold.split.train_indices);
  fold.y_test = select_labels(ds.labels, fold.split.test_indices);
  const Standardizer std_fit = fit_standardizer(fold.train_raw);
  fold.train_std = standardize(std_fit, fold.train_raw);
  fold.test_std = standardize(std_fit, fold.test_raw);
  return fold;
}

CellResult compute_cell(const Dataset& ds, const std::string& method,
                        std::uint64_t seed, const Fold& fold,
                        const RunConfig& config) {
  CellResult cell;
  cell.dataset = ds.name;
  cell.method = method;
  cell.seed = seed;
  cell.split_fingerprint = fold.fingerprint;

  const auto fit_start = std::chrono::steady_clock::now();
  const auto map = fit_method(method, ds.name, seed, fold, config);
  const double fit_ms = elapsed_ms(fit_start);

  const bool standardized = method_uses_standardized(method);
  const Eigen::Ref<const Matrix> train_in =
      standardized ? fold.train_std : fold.train_raw;
  const Eigen::Ref<const Matrix> test_in =
      standardized ? fold.test_std : fold.test_raw;

  if (config.record_timings) {
    cell.fit_time_ms = fit_ms;
    cell.encode_time_ms = time_encoding(*map, train_in);
  }

  const Matrix train_enc = map->transform(train_in);
  const Matrix test_enc = map->transform(test_in);
  cell.output_dim = map->output_dim();
  cell.spectral = spectral_report(train_enc);

  TrainOptions opts;
  opts.lambda = config.probe.lambda;
  opts.max_iter = config.probe.max_iter;
  opts.tol = config.probe.tol;
  const auto train_start = std::chrono::steady_clock::now();
  const LogisticModel model =
      train_logistic(train_enc, fold.y_train, ds.class_count, opts);
  if (config.record_timings) {
    cell.train_time_s = elapsed_ms(train_start) / 1000.0;
  }
  cell.probe_iterations = model.iterations;
  cell.probe_converged = model.converged;

  const std::vector<int> predicted = predict(model, test_enc);
  const Metrics metrics = compute_metrics(fold.y_test, predicted, ds.class_count);
  cell.accuracy = metrics.accuracy;
  cell.macro_f1 = metrics.macro_f1;
  return cell;
}

std::vector<CkaEntry> compute_cka_entries(const Dataset& ds, std::uint64_t seed,
                                          const Fold& fold,
                                          const RunConfig& config) {
  // Representations compared: the QIE encodings present in the config, plus
  // the standardized raw features. Maps are fitted on the full training side;
  // all representations are evaluated on one shared row subset.
  std::vector<std::string> present;
  for (const auto& name : qie_method_names()) {
    if (std::find(config.methods.begin(), config.methods.end(), name) !=
        config.methods.end()) {
      present.push_back(name);
    }
  }
  if (present.empty()) {
    return {};
  }

  const Index n = fold.train_raw.rows();
  Matrix raw_rows, std_rows;
  Index sample_count = n;
  if (n > config.cka_max_rows) {
    RandomStream stream(seed, ds.name + "/cka");
    auto perm = stream.permutation(n);
    std::vector<Index> keep(perm.begin(), perm.begin() + config.cka_max_rows);
    std::sort(keep.begin(), keep.end());
    raw_rows = select_rows(fold.train_raw, keep);
    std_rows = select_rows(fold.train_std, keep);
    sample_count = config.cka_max_rows;
  } else {
    raw_rows = fold.train_raw;
    std_rows = fold.train_std;
  }

  std::map<std::string, Matrix> reps;
  for (const auto& name : present) {
    if (name == "amplitude") {
      reps[name] = amplitude_encode(make_amplitude_map(fold.train_raw.cols()), raw_rows);
    } else if (name == "angle") {
      reps[name] = angle_encode(fit_angle(fold.train_raw), raw_rows);
    } else if (name == "basis") {
      reps[name] = basis_encode(fit_basis(fold.train_raw), raw_rows);
    }
  }
  reps["raw_std"] = std_rows;

  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < present.size(); ++i) {
    for (std::size_t j = i + 1; j < present.size(); ++j) {
      pairs.emplace_back(present[i], present[j]);
    }
  }
  for (const auto& name : present) {
    pairs.emplace_back(name, "raw_std");
  }

  std::vector<CkaEntry> entries;
  entries.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    const CkaValue v = linear_cka(reps.at(a), reps.at(b));
    CkaEntry e;
    e.dataset = ds.name;
    e.seed = seed;
    e.rep_a = a;
    e.rep_b = b;
    e.value = v.value;
    e.sample_count = sample_count;
    entries.push_back(std::move(e));
  }
  return entries;
}

void run_parallel(std::size_t task_count, int jobs,
                  const std::function<void(std::size_t)>& fn) {
  const int workers = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), task_count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < task_count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= task_count) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

double time_encoding(const FittedMap& map, const Eigen::Ref<const Matrix>& X) {
  std::array<double, 3> runs{};
  for (auto& r : runs) {
    const auto start = std::chrono::steady_clock::now();
    const Matrix out = map.transform(X);
    r = elapsed_ms(start);
  }
  std::sort(runs.begin(), runs.end());
  return runs[1];
}

Report run_benchmark(const RunConfig& raw_config) {
  const RunConfig config = normalized(raw_config);
  validate_config(config);

  Report report;
  report.config = config;
  report.version = kVersion;

  struct Loaded {
    Dataset ds;
    std::vector<Fold> folds;  // one per config seed
  };
  std::vector<Loaded> loaded;

  for (const auto& spec : config.datasets) {
    try {
      Dataset ds;
      if (spec.kind == "csv") {
        if (spec.optional && !std::filesystem::exists(spec.path)) {
          continue;
        }
        ds = load_csv(spec.path, spec.schema, spec.name);
      } else if (spec.kind == "parity") {
        RandomStream stream(spec.gen_seed, spec.name + "/gen");
        ds = gen_parity(spec.n, spec.d, spec.k, stream);
        ds.name = spec.name;
      } else {
        RandomStream stream(spec.gen_seed, spec.name + "/gen");
        ds = gen_high_rank_noise(spec.n, spec.d, stream);
        ds.name = spec.name;
      }
      validate_dataset(ds);

      Loaded entry;
      entry.ds = std::move(ds);
      entry.folds.reserve(config.seeds.size());
      for (const std::uint64_t seed : config.seeds) {
        entry.folds.push_back(make_fold(entry.ds, seed, config.test_fraction));
      }
      loaded.push_back(std::move(entry));
    } catch (const std::exception& e) {
      report.errors.push_back({spec.name, e.what()});
    }
  }

  // One slot per (dataset, method, seed); tasks write only their own slot.
  struct CellSlot {
    std::optional<CellResult> cell;
    std::optional<SkippedCell> skip;
    std::optional<RunError> error;
  };
  struct CellTask {
    const Loaded* loaded;
    const std::string* method;
    std::uint64_t seed;
    std::size_t fold_index;
  };
  std::vector<CellTask> tasks;
  for (const auto& entry : loaded) {
    for (const auto& method : config.methods) {
      for (std::size_t s = 0; s < config.seeds.size(); ++s) {
        tasks.push_back({&entry, &method, config.seeds[s], s});
      }
    }
  }
  std::vector<CellSlot> slots(tasks.size());
  run_parallel(tasks.size(), config.jobs, [&](std::size_t i) {
    const CellTask& task = tasks[i];
    try {
      slots[i].cell = compute_cell(task.loaded->ds, *task.method, task.seed,
                                   task.loaded->folds[task.fold_index], config);
    } catch (const FeasibilityError& e) {
      slots[i].skip =
          SkippedCell{task.loaded->ds.name, *task.method, task.seed, e.what()};
    } catch (const std::exception& e) {
      slots[i].error = RunError{task.loaded->ds.name,
                                "cell " + task.loaded->ds.name + "/" +
                                    *task.method + "/seed " +
                                    std::to_string(task.seed) + ": " + e.what()};
    }
  });
  for (auto& slot : slots) {
    if (slot.cell) report.cells.push_back(std::move(*slot.cell));
    if (slot.skip) report.skipped.push_back(std::move(*slot.skip));
    if (slot.error) report.errors.push_back(std::move(*slot.error));
  }

  if (config.compute_cka) {
    struct CkaTask {
      const Loaded* loaded;
      std::uint64_t seed;
      std::size_t fold_index;
    };
    std::vector<CkaTask> cka_tasks;
    for (const auto& entry : loaded) {
      for (std::size_t s = 0; s < config.seeds.size(); ++s) {
        cka_tasks.push_back({&entry, config.seeds[s], s});
      }
    }
    std::vector<std::vector<CkaEntry>> cka_slots(cka_tasks.size());
    std::vector<std::optional<RunError>> cka_errors(cka_tasks.size());
    run_parallel(cka_tasks.size(), config.jobs, [&](std::size_t i) {
      const CkaTask& task = cka_tasks[i];
      try {
        cka_slots[i] = compute_cka_entries(
            task.loaded->ds, task.seed, task.loaded->folds[task.fold_index], config);
      } catch (const std::exception& e) {
        cka_errors[i] = RunError{task.loaded->ds.name,
                                 "cka " + task.loaded->ds.name + "/seed " +
                                     std::to_string(task.seed) + ": " + e.what()};
      }
    });
    for (std::size_t i = 0; i < cka_slots.size(); ++i) {
      for (auto& e : cka_slots[i]) report.cka.push_back(std::move(e));
      if (cka_errors[i]) report.errors.push_back(std::move(*cka_errors[i]));
    }
  }

  // Canonical ordering regardless of execution interleaving.
  std::sort(report.cells.begin(), report.cells.end(),
            [](const CellResult& a, const CellResult& b) {
              return std::tie(a.dataset, a.method, a.seed) <
                     std::tie(b.dataset, b.method, b.seed);
            });
  std::sort(report.skipped.begin(), report.skipped.end(),
            [](const SkippedCell& a, const SkippedCell& b) {
              return std::tie(a.dataset, a.method, a.seed) <
                     std::tie(b.dataset, b.method, b.seed);
            });
  std::sort(report.cka.begin(), report.cka.end(),
            [](const CkaEntry& a, const CkaEntry& b) {
              return std::tie(a.dataset, a.rep_a, a.rep_b, a.seed) <
                     std::tie(b.dataset, b.rep_a, b.rep_b, b.seed);
            });

  // Paired comparisons, isolated per dataset so one bad dataset cannot sink
  // the others.
  std::vector<std::string> qie_present, classical_present;
  for (const auto& m : config.methods) {
    const auto& q = qie_method_names();
    if (std::find(q.begin(), q.end(), m) != q.end()) qie_present.push_back(m);
    const auto& c = classical_method_names();
    if (std::find(c.begin(), c.end(), m) != c.end()) classical_present.push_back(m);
  }
  // Paired statistics need at least two seeds; single-seed runs emit no
  // comparisons rather than an error.
  if (config.seeds.size() >= 2 && !qie_present.empty() && !classical_present.empty()) {
    std::map<std::string, std::vector<ScoreCell>> per_dataset;
    for (const auto& cell : report.cells) {
      per_dataset[cell.dataset].push_back(ScoreCell{
          cell.dataset, cell.method, cell.seed, cell.accuracy, cell.macro_f1});
    }
    for (const auto& [dataset, score_cells] : per_dataset) {
      try {
        auto rows = compare_to_best(score_cells, qie_present, classical_present,
                                    config.baseline_metric == "macro_f1");
        for (auto& row : rows) report.comparisons.push_back(std::move(row));
      } catch (const std::exception& e) {
        report.errors.push_back({dataset, std::string("comparisons: ") + e.what()});
      }
    }
  }

  std::sort(report.errors.begin(), report.errors.end(),
            [](const RunError& a, const RunError& b) {
              return std::tie(a.dataset, a.message) < std::tie(b.dataset, b.message);
            });
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

ordered_json config_to_json(const RunConfig& config) {
  ordered_json j;
  j["datasets"] = ordered_json::array();
  for (const auto& spec : config.datasets) {
    ordered_json d;
    d["name"] = spec.name;
    d["kind"] = spec.kind;
    if (spec.kind == "csv") {
      d["path"] = spec.path;
      d["label_column"] = spec.schema.label_column;
      if (!spec.schema.feature_columns.empty()) {
        d["feature_columns"] = spec.schema.feature_columns;
      }
      if (!spec.schema.class_names.empty()) {
        d["class_names"] = spec.schema.class_names;
      }
      if (spec.optional) {
        d["optional"] = true;
      }
    } else {
      d["n"] = spec.n;
      d["d"] = spec.d;
      if (spec.kind == "parity") {
        d["k"] = spec.k;
      }
      d["gen_seed"] = spec.gen_seed;
    }
    j["datasets"].push_back(std::move(d));
  }
  j["methods"] = config.methods;
  j["seeds"] = config.seeds;
  j["test_fraction"] = config.test_fraction;
  j["probe"] = {{"lambda", config.probe.lambda},
                {"max_iter", config.probe.max_iter},
                {"tol", config.probe.tol}};
  j["record_timings"] = config.record_timings;
  j["poly_budget_mb"] = config.poly_budget_mb;
  j["compute_cka"] = config.compute_cka;
  j["baseline_metric"] = config.baseline_metric;
  j["cka_max_rows"] = config.cka_max_rows;
  j["rff_dim"] = config.rff_dim;
  j["pca_dim"] = config.pca_dim;
  return j;
}

ordered_json cell_to_json(const CellResult& c) {
  ordered_json j;
  j["dataset"] = c.dataset;
  j["method"] = c.method;
  j["seed"] = c.seed;
  j["accuracy"] = c.accuracy;
  j["macro_f1"] = c.macro_f1;
  j["output_dim"] = c.output_dim;
  j["effective_rank"] = c.spectral.effective_rank;
  j["condition_number"] = c.spectral.condition_number;
  j["log10_kappa"] = c.spectral.log10_kappa;
  j["normalized_erank"] = c.spectral.normalized_erank;
  j["kappa_capped"] = c.spectral.kappa_capped;
  j["encode_time_ms"] = c.encode_time_ms;
  j["fit_time_ms"] = c.fit_time_ms;
  j["train_time_s"] = c.train_time_s;
  j["probe_iterations"] = c.probe_iterations;
  j["probe_converged"] = c.probe_converged;
  j["split_fingerprint"] = c.split_fingerprint;
  return j;
}

ordered_json comparison_to_json(const PairedComparison& c) {
  ordered_json j;
  j["dataset"] = c.dataset;
  j["method"] = c.method;
  j["baseline"] = c.baseline;
  j["seeds"] = c.seeds;
  j["method_scores"] = c.method_scores;
  j["baseline_scores"] = c.baseline_scores;
  j["mean_difference"] = c.mean_difference;
  j["t_statistic"] = c.t_statistic;
  j["t_pvalue"] = c.t_pvalue;
  j["df"] = c.df;
  j["t_degenerate"] = c.t_degenerate;
  j["wilcoxon_statistic"] = c.wilcoxon_statistic;
  j["wilcoxon_pvalue"] = c.wilcoxon_pvalue;
  j["wilcoxon_degenerate"] = c.wilcoxon_degenerate;
  j["cohens_d"] = c.cohens_d;
  j["ci_low"] = c.ci_low;
  j["ci_high"] = c.ci_high;
  return j;
}

// Cohen's d and its confidence bounds for the forest plot, recomputed from
// the stored paired scores (never from the serialized statistic, whose
// non-finite values do not survive JSON): d = mean/sd of the differences,
// bounds d +/- t_crit / sqrt(n). Zero-sd differences give a point.
struct ForestRow {
  double d = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

ForestRow forest_row(const PairedComparison& c) {
  const std::size_t n = c.method_scores.size();
  if (n < 2) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan};
  }
  std::vector<double> diffs(n);
  for (std::size_t i = 0; i < n; ++i) {
    diffs[i] = c.method_scores[i] - c.baseline_scores[i];
  }
  const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) /
                      static_cast<double>(n);
  double ss = 0.0;
  for (const double x : diffs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) {
    const double inf = std::numeric_limits<double>::infinity();
    const double d = mean == 0.0 ? 0.0 : (mean > 0.0 ? inf : -inf);
    return {d, d, d};
  }
  const double d = mean / sd;
  const double crit = student_t_ppf(0.975, static_cast<int>(n) - 1);
  const double half = crit / std::sqrt(static_cast<double>(n));
  return {d, d - half, d + half};
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open for writing: " + path);
  }
  out << content;
  if (!out) {
    throw IoError("write failed: " + path);
  }
}

}  // namespace

std::string render_results_json(const Report& report) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["version"] = report.version;
  j["config"] = config_to_json(report.config);
  j["cells"] = ordered_json::array();
  for (const auto& c : report.cells) j["cells"].push_back(cell_to_json(c));
  j["skipped"] = ordered_json::array();
  for (const auto& s : report.skipped) {
    j["skipped"].push_back({{"dataset", s.dataset},
                            {"method", s.method},
                            {"seed", s.seed},
                            {"reason", s.reason}});
  }
  j["comparisons"] = ordered_json::array();
  for (const auto& c : report.comparisons) {
    j["comparisons"].push_back(comparison_to_json(c));
  }
  j["cka"] = ordered_json::array();
  for (const auto& e : report.cka) {
    j["cka"].push_back({{"dataset", e.dataset},
                        {"seed", e.seed},
                        {"rep_a", e.rep_a},
                        {"rep_b", e.rep_b},
                        {"cka", e.value},
                        {"sample_count", e.sample_count}});
  }
  j["errors"] = ordered_json::array();
  for (const auto& e : report.errors) {
    j["errors"].push_back({{"dataset", e.dataset}, {"message", e.message}});
  }
  return j.dump(2) + "\n";
}

std::string render_cells_csv(const Report& report) {
  std::string out =
      "dataset,method,seed,accuracy,macro_f1,output_dim,effective_rank,"
      "condition_number,log10_kappa,normalized_erank,kappa_capped,"
      "encode_time_ms,fit_time_ms,train_time_s,probe_iterations,"
      "probe_converged,split_fingerprint\n";
  for (const auto& c : report.cells) {
    out += csv_escape(c.dataset) + ',' + csv_escape(c.method) + ',' +
           std::to_string(c.seed) + ',' + fmt_double(c.accuracy) + ',' +
           fmt_double(c.macro_f1) + ',' + std::to_string(c.output_dim) + ',' +
           fmt_double(c.spectral.effective_rank) + ',' +
           fmt_double(c.spectral.condition_number) + ',' +
           fmt_double(c.spectral.log10_kappa) + ',' +
           fmt_double(c.spectral.normalized_erank) + ',' +
           (c.spectral.kappa_capped ? "true" : "false") + ',' +
           fmt_double(c.encode_time_ms) + ',' + fmt_double(c.fit_time_ms) + ',' +
           fmt_double(c.train_time_s) + ',' + std::to_string(c.probe_iterations) +
           ',' + (c.probe_converged ? "true" : "false") + ',' +
           c.split_fingerprint + '\n';
  }
  return out;
}

std::string render_comparisons_csv(const Report& report) {
  std::string out =
      "dataset,method,baseline,n_seeds,mean_difference,t_statistic,t_pvalue,df,"
      "t_degenerate,wilcoxon_statistic,wilcoxon_pvalue,wilcoxon_degenerate,"
      "cohens_d,ci_low,ci_high\n";
  for (const auto& c : report.comparisons) {
    out += csv_escape(c.dataset) + ',' + csv_escape(c.method) + ',' +
           csv_escape(c.baseline) + ',' + std::to_string(c.seeds.size()) + ',' +
           fmt_double(c.mean_difference) + ',' + fmt_double(c.t_statistic) + ',' +
           fmt_double(c.t_pvalue) + ',' + std::to_string(c.df) + ',' +
           (c.t_degenerate ? "true" : "false") + ',' +
           fmt_double(c.wilcoxon_statistic) + ',' + fmt_double(c.wilcoxon_pvalue) +
           ',' + (c.wilcoxon_degenerate ? "true" : "false") + ',' +
           fmt_double(c.cohens_d) + ',' + fmt_double(c.ci_low) + ',' +
           fmt_double(c.ci_high) + '\n';
  }
  return out;
}

std::string render_cka_csv(const Report& report) {
  std::string out = "dataset,seed,rep_a,rep_b,cka,sample_count\n";
  for (const auto& e : report.cka) {
    out += csv_escape(e.dataset) + ',' + std::to_string(e.seed) + ',' +
           csv_escape(e.rep_a) + ',' + csv_escape(e.rep_b) + ',' +
           fmt_double(e.value) + ',' + std::to_string(e.sample_count) + '\n';
  }
  return out;
}

std::string render_forest_csv(const Report& report) {
  std::string out = "method,dataset,d,ci_low,ci_high\n";
  for (const auto& c : report.comparisons) {
    const auto row = forest_row(c);
    out += csv_escape(c.method) + ',' + csv_escape(c.dataset) + ',' +
           fmt_double(row.d) + ',' + fmt_double(row.lo) + ',' +
           fmt_double(row.hi) + '\n';
  }
  return out;
}

std::string render_markdown(const Report& report) {
  std::ostringstream md;
  md << "# Benchmark report\n\ntoolkit version " << report.version
     << ", schema " << kSchemaVersion << "\n";

  // Per-dataset mean/sd over seeds.
  std::map<std::string, std::map<std::string, std::vector<const CellResult*>>> by_ds;
  for (const auto& c : report.cells) {
    by_ds[c.dataset][c.method].push_back(&c);
  }
  md.setf(std::ios::fixed);
  for (const auto& [dataset, methods] : by_ds) {
    md << "\n## " << dataset << "\n\n";
    md << "| method | accuracy (mean +/- sd) | macro F1 | effective rank | log10 kappa | output dim |\n";
    md << "|---|---|---|---|---|---|\n";
    for (const auto& [method, cells] : methods) {
      const double n = static_cast<double>(cells.size());
      double acc = 0.0, f1 = 0.0, erank = 0.0, lk = 0.0;
      for (const auto* c : cells) {
        acc += c->accuracy;
        f1 += c->macro_f1;
        erank += c->spectral.effective_rank;
        lk += c->spectral.log10_kappa;
      }
      acc /= n;
      f1 /= n;
      erank /= n;
      lk /= n;
      double var = 0.0;
      for (const auto* c : cells) var += (c->accuracy - acc) * (c->accuracy - acc);
      const double sd = cells.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
      md.precision(3);
      md << "| " << method << " | " << acc << " +/- " << sd << " | " << f1
         << " | ";
      md.precision(2);
      md << erank << " | " << lk << " | " << cells.front()->output_dim
         << " |\n";
    }
  }

  if (!report.comparisons.empty()) {
    md << "\n## Comparisons vs best classical baseline\n\n";
    md << "| dataset | method | baseline | mean diff | t | p(t) | p(Wilcoxon) | Cohen's d | 95% CI |\n";
    md << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& c : report.comparisons) {
      md.precision(4);
      md << "| " << c.dataset << " | " << c.method << " | " << c.baseline
         << " | " << c.mean_difference << " | " << c.t_statistic << " | "
         << c.t_pvalue << " | " << c.wilcoxon_pvalue << " | " << c.cohens_d
         << " | [" << c.ci_low << ", " << c.ci_high << "] |\n";
    }
  }

  if (!report.skipped.empty()) {
    md << "\n## Skipped cells\n\n";
    for (const auto& s : report.skipped) {
      md << "- " << s.dataset << "/" << s.method << "/seed " << s.seed << ": "
         << s.reason << "\n";
    }
  }
  if (!report.errors.empty()) {
    md << "\n## Errors\n\n";
    for (const auto& e : report.errors) {
      md << "- " << (e.dataset.empty() ? "(run)" : e.dataset) << ": "
         << e.message << "\n";
    }
  }
  return md.str();
}

void emit_report(const Report& report, const std::string& out_dir) {
  if (report.config.methods.empty()) {
    throw InvalidInputError("emit_report: report has no methods configured");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
  }
  const std::filesystem::path dir(out_dir);
  write_file((dir / "results.json").string(), render_results_json(report));
  write_file((dir / "cells.csv").string(), render_cells_csv(report));
  write_file((dir / "comparisons.csv").string(), render_comparisons_csv(report));
  write_file((dir / "cka.csv").string(), render_cka_csv(report));
  write_file((dir / "forest.csv").string(), render_forest_csv(report));
}

// ---------------------------------------------------------------------------
// Config / report loading

namespace {

void reject_unknown_keys(const ordered_json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (allowed.count(key) == 0) {
      throw SchemaError("config " + where + ": unknown key \"" + key + "\"");
    }
  }
}

DatasetSpec dataset_from_json(const ordered_json& j) {
  reject_unknown_keys(j,
                      {"name", "kind", "path", "label_column", "feature_columns",
                       "class_names", "optional", "n", "d", "k", "gen_seed"},
                      "dataset");
  DatasetSpec spec;
  spec.name = j.at("name").get<std::string>();
  spec.kind = j.at("kind").get<std::string>();
  spec.path = j.value("path", "");
  spec.schema.label_column = j.value("label_column", "");
  if (j.contains("feature_columns")) {
    spec.schema.feature_columns = j.at("feature_columns").get<std::vector<std::string>>();
  }
  if (j.contains("class_names")) {
    spec.schema.class_names = j.at("class_names").get<std::vector<std::string>>();
  }
  spec.optional = j.value("optional", false);
  spec.n = j.value("n", static_cast<Index>(0));
  spec.d = j.value("d", static_cast<Index>(0));
  spec.k = j.value("k", static_cast<Index>(0));
  spec.gen_seed = j.value("gen_seed", static_cast<std::uint64_t>(1234));
  return spec;
}

RunConfig config_from_json(const ordered_json& j) {
  reject_unknown_keys(j,
                      {"datasets", "methods", "seeds", "test_fraction", "probe",
                       "out_dir", "jobs", "record_timings", "poly_budget_mb",
                       "compute_cka", "baseline_metric", "cka_max_rows",
                       "rff_dim", "pca_dim"},
                      "(top level)");
  RunConfig config;
  if (!j.contains("datasets") || !j.at("datasets").is_array()) {
    throw SchemaError("config: \"datasets\" array is required");
  }
  config.datasets.clear();
  for (const auto& d : j.at("datasets")) {
    config.datasets.push_back(dataset_from_json(d));
  }
  if (!j.contains("methods") || !j.at("methods").is_array()) {
    throw SchemaError("config: \"methods\" array is required");
  }
  config.methods = j.at("methods").get<std::vector<std::string>>();
  if (j.contains("seeds")) {
    config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  }
  config.test_fraction = j.value("test_fraction", 0.2);
  if (j.contains("probe")) {
    const auto& p = j.at("probe");
    reject_unknown_keys(p, {"lambda", "max_iter", "tol"}, "probe");
    config.probe.lambda = p.value("lambda", 1.0);
    config.probe.max_iter = p.value("max_iter", 500);
    config.probe.tol = p.value("tol", 1e-6);
  }
  config.out_dir = j.value("out_dir", "results");
  config.jobs = j.value("jobs", 1);
  config.record_timings = j.value("record_timings", false);
  config.poly_budget_mb = j.value("poly_budget_mb", 512.0);
  config.compute_cka = j.value("compute_cka", true);
  config.baseline_metric = j.value("baseline_metric", "accuracy");
  config.cka_max_rows = j.value("cka_max_rows", static_cast<Index>(2000));
  config.rff_dim = j.value("rff_dim", static_cast<Index>(0));
  config.pca_dim = j.value("pca_dim", static_cast<Index>(0));
  return config;
}

ordered_json parse_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open: " + path);
  }
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace

RunConfig load_config(const std::string& path) {
  const ordered_json j = parse_json_file(path);
  try {
    RunConfig config = config_from_json(j);
    validate_config(normalized(config));
    return config;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("config " + path + ": " + e.what());
  }
}

namespace {

// Non-finite statistics serialize as JSON null; read them back as NaN so a
// re-render reproduces the same bytes.
double stat_or_nan(const ordered_json& row, const char* key) {
  const auto& v = row.at(key);
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

}  // namespace

Report load_report(const std::string& path) {
  const ordered_json j = parse_json_file(path);
  try {
    Report report;
    report.version = j.value("version", "");
    if (j.contains("config")) {
      report.config = config_from_json(j.at("config"));
    }
    for (const auto& c : j.value("cells", ordered_json::array())) {
      CellResult cell;
      cell.dataset = c.at("dataset").get<std::string>();
      cell.method = c.at("method").get<std::string>();
      cell.seed = c.at("seed").get<std::uint64_t>();
      cell.accuracy = c.at("accuracy").get<double>();
      cell.macro_f1 = c.at("macro_f1").get<double>();
      cell.output_dim = c.at("output_dim").get<Index>();
      cell.spectral.effective_rank = c.at("effective_rank").get<double>();
      cell.spectral.condition_number = c.at("condition_number").get<double>();
      cell.spectral.log10_kappa = c.at("log10_kappa").get<double>();
      cell.spectral.normalized_erank = c.at("normalized_erank").get<double>();
      cell.spectral.kappa_capped = c.at("kappa_capped").get<bool>();
      cell.encode_time_ms = c.at("encode_time_ms").get<double>();
      cell.fit_time_ms = c.at("fit_time_ms").get<double>();
      cell.train_time_s = c.at("train_time_s").get<double>();
      cell.probe_iterations = c.at("probe_iterations").get<int>();
      cell.probe_converged = c.at("probe_converged").get<bool>();
      cell.split_fingerprint = c.at("split_fingerprint").get<std::string>();
      report.cells.push_back(std::move(cell));
    }
    for (const auto& s : j.value("skipped", ordered_json::array())) {
      report.skipped.push_back(SkippedCell{
          s.at("dataset").get<std::string>(), s.at("method").get<std::string>(),
          s.at("seed").get<std::uint64_t>(), s.at("reason").get<std::string>()});
    }
    for (const auto& c : j.value("comparisons", ordered_json::array())) {
      PairedComparison row;
      row.dataset = c.at("dataset").get<std::string>();
      row.method = c.at("method").get<std::string>();
      row.baseline = c.at("baseline").get<std::string>();
      row.seeds = c.at("seeds").get<std::vector<std::uint64_t>>();
      row.method_scores = c.at("method_scores").get<std::vector<double>>();
      row.baseline_scores = c.at("baseline_scores").get<std::vector<double>>();
      row.mean_difference = c.at("mean_difference").get<double>();
      row.t_statistic = stat_or_nan(c, "t_statistic");
      row.t_pvalue = c.at("t_pvalue").get<double>();
      row.df = c.at("df").get<int>();
      row.t_degenerate = c.at("t_degenerate").get<bool>();
      row.wilcoxon_statistic = c.at("wilcoxon_statistic").get<double>();
      row.wilcoxon_pvalue = c.at("wilcoxon_pvalue").get<double>();
      row.wilcoxon_degenerate = c.at("wilcoxon_degenerate").get<bool>();
      row.cohens_d = stat_or_nan(c, "cohens_d");
      row.ci_low = c.at("ci_low").get<double>();
      row.ci_high = c.at("ci_high").get<double>();
      report.comparisons.push_back(std::move(row));
    }
    for (const auto& e : j.value("cka", ordered_json::array())) {
      report.cka.push_back(CkaEntry{
          e.at("dataset").get<std::string>(), e.at("seed").get<std::uint64_t>(),
          e.at("rep_a").get<std::string>(), e.at("rep_b").get<std::string>(),
          e.at("cka").get<double>(), e.at("sample_count").get<Index>()});
    }
    for (const auto& e : j.value("errors", ordered_json::array())) {
      report.errors.push_back(RunError{e.at("dataset").get<std::string>(),
                                       e.at("message").get<std::string>()});
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("results " + path + ": " + e.what());
  }
}

}  // namespace qie
