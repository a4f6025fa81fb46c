// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/bench/methods.hpp"
#include "triage/bench/metrics.hpp"
#include "triage/bench/synthetic.hpp"

namespace triage::bench {

/// A dataset read from a JSON-lines file, or generated.
struct DatasetSource {
  std::string name;
  std::filesystem::path path;
  std::optional<KeywordCorpusSpec> synthetic;
  /// Label fields to benchmark; empty means every field.
  std::vector<std::string> fields;
};

struct BenchmarkConfig {
  std::vector<DatasetSource> datasets;
  /// "dataset:field" filters; empty keeps every task.
  std::vector<std::string> tasks;
  std::vector<Method> methods = all_methods();
  std::vector<std::uint64_t> seeds{1};
  double test_fraction = 0.15;
  double validation_fraction = 0.15;
  PreparationConfig preparation;
  /// Per-method settings layered over default_settings().
  std::map<Method, nlohmann::json> settings;
  std::map<Method, nlohmann::json> grids;
};

/// Relative dataset paths resolve against `base_dir`.
BenchmarkConfig benchmark_config_from_json(const nlohmann::json& j,
                                           const std::filesystem::path& base_dir = {});
nlohmann::json benchmark_config_to_json(const BenchmarkConfig& config);

struct CellResult {
  Method method = Method::NaiveBayes;
  std::string task;
  std::uint64_t seed = 0;
  nlohmann::json hyperparameters;
  std::vector<GridCellScore> grid;
  std::optional<Metrics> metrics;
  std::optional<ConfusionMatrix> confusion;
  ClassSet classes;
  double seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct BenchmarkReport {
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> tasks;
  std::vector<Method> methods;
  std::vector<CellResult> cells;
  std::vector<std::string> notes;
};

/// Scores from the original publication, keyed by method then task
/// (archlinux:priority, archlinux:product, chromium:type).
struct PublishedReference {
  std::map<Method, std::map<std::string, double>> accuracy;
  std::map<Method, std::map<std::string, double>> weighted_f1;
  std::map<std::string, std::string> task_labels;
  std::vector<std::string> tasks;
};
const PublishedReference& published_reference();

/// Loads every source named in the config.
std::map<std::string, Dataset> load_sources(const BenchmarkConfig& config);

/// Tasks are "dataset:field". Every (method, task, seed) produces exactly one
/// cell; failures are recorded and the run continues.
BenchmarkReport run_benchmark(const BenchmarkConfig& config, const std::map<std::string, Dataset>& datasets);

/// Without timing the output is a pure function of data, config and seeds.
nlohmann::json report_to_json(const BenchmarkReport& report, bool include_timing = true);
/// Plain-text tables of accuracy and weighted F1, methods by tasks, with the
/// published-score columns alongside.
std::string render_table(const BenchmarkReport& report);
std::string render_markdown(const BenchmarkReport& report);

}  // namespace triage::bench
