#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "qie/data.hpp"
#include "qie/errors.hpp"
#include "qie/harness.hpp"
#include "qie/version.hpp"

namespace {

std::string fmt_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, ptr) : std::string("0");
}

void write_dataset_csv(const qie::Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw qie::IoError("cannot open for writing: " + path);
  }
  for (qie::Index j = 0; j < ds.features.cols(); ++j) {
    out << 'f' << j << ',';
  }
  out << "label\n";
  for (qie::Index i = 0; i < ds.features.rows(); ++i) {
    for (qie::Index j = 0; j < ds.features.cols(); ++j) {
      out << fmt_double(ds.features(i, j)) << ',';
    }
    out << ds.labels[static_cast<std::size_t>(i)] << '\n';
  }
  if (!out) {
    throw qie::IoError("write failed: " + path);
  }
}

int cmd_run(const std::string& config_path, const std::vector<std::uint64_t>& seeds,
            const std::vector<std::string>& datasets, const std::string& out_dir,
            int jobs) {
  qie::RunConfig config = qie::load_config(config_path);
  if (!seeds.empty()) {
    config.seeds = seeds;
  }
  if (!datasets.empty()) {
    std::vector<qie::DatasetSpec> filtered;
    for (const auto& name : datasets) {
      const auto it = std::find_if(
          config.datasets.begin(), config.datasets.end(),
          [&](const qie::DatasetSpec& s) { return s.name == name; });
      if (it == config.datasets.end()) {
        throw qie::UsageError("--datasets: '" + name + "' is not in the config");
      }
      filtered.push_back(*it);
    }
    config.datasets = std::move(filtered);
  }
  if (!out_dir.empty()) {
    config.out_dir = out_dir;
  }
  if (jobs > 0) {
    config.jobs = jobs;
  }

  const qie::Report report = qie::run_benchmark(config);
  qie::emit_report(report, config.out_dir);

  for (const auto& e : report.errors) {
    std::cerr << "warning: " << (e.dataset.empty() ? "(run)" : e.dataset) << ": "
              << e.message << "\n";
  }
  std::cout << "wrote " << config.out_dir << "/results.json: "
            << report.cells.size() << " cells, " << report.skipped.size()
            << " skipped, " << report.comparisons.size() << " comparisons, "
            << report.cka.size() << " cka entries\n";
  if (report.cells.empty()) {
    std::cerr << "error: no cells were produced\n";
    return 1;
  }
  return 0;
}

int cmd_gen_data(const std::string& task, const std::string& out_path,
                 qie::Index n, qie::Index d, qie::Index k, std::uint64_t seed) {
  qie::Dataset ds;
  if (task == "parity") {
    if (n == 0) n = 10000;
    if (d == 0) d = 20;
    if (k == 0) k = 10;
    qie::RandomStream stream(seed, "parity/gen");
    ds = qie::gen_parity(n, d, k, stream);
  } else {
    if (n == 0) n = 5000;
    if (d == 0) d = 200;
    qie::RandomStream stream(seed, "high_rank_noise/gen");
    ds = qie::gen_high_rank_noise(n, d, stream);
  }
  write_dataset_csv(ds, out_path);
  std::cout << "wrote " << out_path << ": " << ds.features.rows() << " rows, "
            << ds.features.cols() << " features, " << ds.class_count
            << " classes\n";
  return 0;
}

int cmd_report(const std::string& in_path, const std::string& format,
               const std::string& out_dir) {
  const qie::Report report = qie::load_report(in_path);
  if (format == "markdown") {
    std::cout << qie::render_markdown(report);
    return 0;
  }
  std::string dir = out_dir;
  if (dir.empty()) {
    const auto parent = std::filesystem::path(in_path).parent_path();
    dir = parent.empty() ? "." : parent.string();
  }
  const std::filesystem::path base(dir);
  std::error_code ec;
  std::filesystem::create_directories(base, ec);
  if (ec) {
    throw qie::IoError("cannot create output directory " + dir + ": " + ec.message());
  }
  const auto write = [&](const char* name, const std::string& content) {
    std::ofstream out(base / name, std::ios::binary);
    if (!out || !(out << content)) {
      throw qie::IoError("write failed: " + (base / name).string());
    }
  };
  write("cells.csv", qie::render_cells_csv(report));
  write("comparisons.csv", qie::render_comparisons_csv(report));
  write("cka.csv", qie::render_cka_csv(report));
  write("forest.csv", qie::render_forest_csv(report));
  std::cout << "wrote cells.csv, comparisons.csv, cka.csv, forest.csv to " << dir
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qiebench: quantum-inspired encoding benchmark toolkit"};
  app.set_version_flag("--version", std::string(qie::kVersion));
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run the benchmark matrix from a JSON config");
  std::string config_path;
  run->add_option("--config", config_path, "Path to the run config (JSON)")
      ->required();
  std::vector<std::uint64_t> seeds;
  run->add_option("--seeds", seeds, "Override the config seed list")
      ->delimiter(',');
  std::vector<std::string> dataset_filter;
  run->add_option("--datasets", dataset_filter,
                  "Run only these datasets from the config")
      ->delimiter(',');
  std::string out_dir;
  run->add_option("--out", out_dir, "Output directory (overrides config)");
  int jobs = 0;
  run->add_option("--jobs", jobs, "Parallel cell tasks (overrides config)")
      ->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic dataset as CSV");
  std::string task;
  gen->add_option("--task", task, "Generator: parity or highrank")
      ->required()
      ->check(CLI::IsMember({"parity", "highrank"}));
  std::string gen_out;
  gen->add_option("--out", gen_out, "Output CSV path")->required();
  qie::Index gen_n = 0, gen_d = 0, gen_k = 0;
  gen->add_option("--n", gen_n, "Rows (default: task-specific)");
  gen->add_option("--d", gen_d, "Features (default: task-specific)");
  gen->add_option("--k", gen_k, "Parity bits (parity only)");
  std::uint64_t gen_seed = 1234;
  gen->add_option("--seed", gen_seed, "Generator seed (default 1234)");

  auto* rep = app.add_subcommand("report", "Re-render a results.json");
  std::string in_path;
  rep->add_option("--in", in_path, "Path to results.json")->required();
  std::string format = "markdown";
  rep->add_option("--format", format, "markdown (stdout) or csv (files)")
      ->check(CLI::IsMember({"csv", "markdown"}));
  std::string rep_out;
  rep->add_option("--out", rep_out, "Output directory for csv format");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(config_path, seeds, dataset_filter, out_dir, jobs);
    }
    if (gen->parsed()) {
      return cmd_gen_data(task, gen_out, gen_n, gen_d, gen_k, gen_seed);
    }
    if (rep->parsed()) {
      return cmd_report(in_path, format, rep_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
