// SPDX-License-Identifier: Apache-2.0
#include "triage/bench/benchmark.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "triage/error.hpp"

namespace triage::bench {

namespace {

const std::set<std::string> kConfigKeys{"datasets", "tasks", "methods", "seeds", "test_fraction",
                                        "validation_fraction", "pipeline", "vocabulary", "embeddings",
                                        "settings", "grids"};

std::map<Method, nlohmann::json> per_method(const nlohmann::json& j, const char* what) {
  if (!j.is_object()) throw Error(std::string(what) + " must be an object keyed by method tag");
  std::map<Method, nlohmann::json> out;
  for (const auto& [tag, value] : j.items()) out[parse_method(tag)] = value;
  return out;
}

std::pair<std::string, std::string> split_task(const std::string& task) {
  const auto colon = task.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == task.size()) {
    throw Error("task \"" + task + "\" must look like dataset:field");
  }
  return {task.substr(0, colon), task.substr(colon + 1)};
}

nlohmann::json merged_settings(const BenchmarkConfig& config, Method m) {
  auto settings = default_settings(m);
  if (const auto it = config.settings.find(m); it != config.settings.end()) settings.update(it->second);
  return settings;
}

std::string status_of(bool failed) { return failed ? "failed" : "ok"; }

}  // namespace

BenchmarkConfig benchmark_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error("benchmark config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kConfigKeys.contains(key)) throw Error("unknown benchmark config key \"" + key + "\"");
  }
  BenchmarkConfig c;
  for (const auto& d : j.value("datasets", nlohmann::json::array())) {
    DatasetSource source;
    source.name = d.at("name").get<std::string>();
    if (d.contains("path")) {
      source.path = d.at("path").get<std::string>();
      if (source.path.is_relative() && !base_dir.empty()) source.path = base_dir / source.path;
    } else if (d.contains("synthetic")) {
      source.synthetic = keyword_spec_from_json(d.at("synthetic"));
    } else {
      throw Error("dataset \"" + source.name + "\" needs a path or a synthetic spec");
    }
    source.fields = d.value("fields", std::vector<std::string>{});
    c.datasets.push_back(std::move(source));
  }
  c.tasks = j.value("tasks", c.tasks);
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& tag : j.at("methods")) c.methods.push_back(parse_method(tag.get<std::string>()));
  }
  c.seeds = j.value("seeds", c.seeds);
  c.test_fraction = j.value("test_fraction", c.test_fraction);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  if (j.contains("pipeline")) c.preparation.pipeline = pipeline_from_json(j.at("pipeline"));
  if (j.contains("vocabulary")) {
    const auto& v = j.at("vocabulary");
    c.preparation.min_frequency = v.value("min_frequency", c.preparation.min_frequency);
    c.preparation.max_vocabulary = v.value("max_size", c.preparation.max_vocabulary);
  }
  if (j.contains("embeddings")) c.preparation.skipgram = skipgram_from_json(j.at("embeddings"));
  if (j.contains("settings")) c.settings = per_method(j.at("settings"), "settings");
  if (j.contains("grids")) c.grids = per_method(j.at("grids"), "grids");
  if (c.seeds.empty()) throw Error("benchmark config: need at least one seed");
  if (c.methods.empty()) throw Error("benchmark config: need at least one method");
  return c;
}

nlohmann::json benchmark_config_to_json(const BenchmarkConfig& c) {
  nlohmann::json datasets = nlohmann::json::array();
  for (const auto& d : c.datasets) {
    nlohmann::json entry{{"name", d.name}, {"fields", d.fields}};
    if (d.synthetic) {
      entry["synthetic"] = keyword_spec_to_json(*d.synthetic);
    } else {
      entry["path"] = d.path.string();
    }
    datasets.push_back(std::move(entry));
  }
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : c.methods) methods.push_back(method_tag(m));
  nlohmann::json settings = nlohmann::json::object(), grids = nlohmann::json::object();
  for (const auto& [m, s] : c.settings) settings[method_tag(m)] = s;
  for (const auto& [m, g] : c.grids) grids[method_tag(m)] = g;
  return {{"datasets", datasets},
          {"tasks", c.tasks},
          {"methods", methods},
          {"seeds", c.seeds},
          {"test_fraction", c.test_fraction},
          {"validation_fraction", c.validation_fraction},
          {"pipeline", pipeline_to_json(c.preparation.pipeline)},
          {"vocabulary", {{"min_frequency", c.preparation.min_frequency}, {"max_size", c.preparation.max_vocabulary}}},
          {"embeddings", skipgram_to_json(c.preparation.skipgram)},
          {"settings", settings},
          {"grids", grids}};
}

const PublishedReference& published_reference() {
  static const PublishedReference ref = [] {
    PublishedReference r;
    r.tasks = {"archlinux:priority", "archlinux:product", "chromium:type"};
    r.task_labels = {{"archlinux:priority", "Linux bugs: Importance (9 classes)"},
                     {"archlinux:product", "Linux bugs: Product (16 classes)"},
                     {"chromium:type", "Chromium bugs: Type (3 classes)"}};
    const auto row = [&](Method m, std::array<double, 3> acc, std::array<double, 3> f1) {
      for (std::size_t i = 0; i < 3; ++i) {
        r.accuracy[m][r.tasks[i]] = acc[i];
        r.weighted_f1[m][r.tasks[i]] = f1[i];
      }
    };
    row(Method::NaiveBayes, {0.516, 0.456, 0.805}, {0.479, 0.411, 0.787});
    row(Method::Svm, {0.650, 0.616, 0.805}, {0.568, 0.590, 0.804});
    row(Method::EmbeddingBag, {0.642, 0.587, 0.822}, {0.542, 0.579, 0.821});
    row(Method::DeepTriage, {0.614, 0.638, 0.816}, {0.516, 0.604, 0.816});
    row(Method::Han, {0.664, 0.589, 0.759}, {0.573, 0.574, 0.758});
    row(Method::Proposed, {0.691, 0.587, 0.882}, {0.579, 0.567, 0.879});
    return r;
  }();
  return ref;
}

std::map<std::string, Dataset> load_sources(const BenchmarkConfig& config) {
  std::map<std::string, Dataset> out;
  for (const auto& source : config.datasets) {
    if (out.contains(source.name)) throw Error("dataset name \"" + source.name + "\" used twice");
    if (source.synthetic) {
      out.emplace(source.name, make_keyword_corpus(*source.synthetic).dataset);
    } else {
      out.emplace(source.name, load_dataset(source.path));
    }
  }
  return out;
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config, const std::map<std::string, Dataset>& datasets) {
  BenchmarkReport report;
  report.seeds = config.seeds;
  report.methods = config.methods;

  std::vector<std::string> available;
  for (const auto& source : config.datasets) {
    const auto it = datasets.find(source.name);
    if (it == datasets.end()) throw Error("dataset \"" + source.name + "\" was not loaded");
    std::vector<std::string> fields = source.fields;
    if (fields.empty()) {
      for (const auto& [field, classes] : it->second.fields()) fields.push_back(field);
    }
    for (const auto& f : fields) available.push_back(source.name + ":" + f);
  }
  if (config.tasks.empty()) {
    report.tasks = available;
  } else {
    for (const auto& task : config.tasks) {
      split_task(task);
      if (std::find(available.begin(), available.end(), task) == available.end()) {
        throw Error("unknown task \"" + task + "\"");
      }
      report.tasks.push_back(task);
    }
  }
  if (report.tasks.empty()) throw Error("benchmark has no tasks");

  const bool any_neural = std::any_of(config.methods.begin(), config.methods.end(), is_neural);
  for (std::size_t ti = 0; ti < report.tasks.size(); ++ti) {
    const auto& task = report.tasks[ti];
    const auto [name, field] = split_task(task);
    const Dataset& dataset = datasets.at(name);
    for (const std::uint64_t seed : config.seeds) {
      const std::uint64_t task_seed = Rng::derive(seed, ti);
      std::optional<TaskData> data;
      std::string setup_error;
      SkipGramConfig skipgram = config.preparation.skipgram;
      skipgram.seed = Rng::derive(task_seed, skipgram.seed);
      try {
        const auto split = make_split(dataset, field, config.test_fraction, seed);
        data = prepare_task(dataset, task, split, config.preparation);
        if (any_neural) ensure_embeddings(*data, skipgram);
      } catch (const std::exception& e) {
        setup_error = e.what();
        spdlog::error("{} (seed {}): {}", task, seed, e.what());
      }

      for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
        const Method method = config.methods[mi];
        CellResult cell;
        cell.method = method;
        cell.task = task;
        cell.seed = seed;
        cell.hyperparameters = merged_settings(config, method);
        const bool needs_embeddings = is_neural(method);
        if (!data || (needs_embeddings && !data->embeddings)) {
          cell.failed = true;
          cell.error = setup_error;
          report.cells.push_back(std::move(cell));
          continue;
        }
        cell.classes = data->classes;
        spdlog::info("{} on {} (seed {})", method_tag(method), task, seed);
        const auto start = std::chrono::steady_clock::now();
        try {
          GridSearchSpec spec;
          spec.method = method;
          spec.base = cell.hyperparameters;
          if (const auto it = config.grids.find(method); it != config.grids.end()) {
            spec.grid = grid_from_json(it->second);
          }
          spec.validation_fraction = config.validation_fraction;
          auto result = grid_search(spec, *data, data->train, skipgram, Rng::derive(task_seed, 0x100 + mi));
          cell.hyperparameters = result.hyperparameters;
          cell.grid = std::move(result.cells);
          const auto predicted = result.model->predict(*data, data->test);
          std::vector<ClassId> truth;
          for (std::size_t i : data->test) truth.push_back(data->labels[i]);
          cell.confusion = confusion_matrix(truth, predicted, data->classes.size());
          cell.metrics = compute_metrics(*cell.confusion);
        } catch (const std::exception& e) {
          cell.failed = true;
          cell.error = e.what();
          spdlog::error("{} on {} (seed {}) failed: {}", method_tag(method), task, seed, e.what());
        }
        cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report.cells.push_back(std::move(cell));
      }
    }
  }

  report.notes = {
      "Published-score columns are shown for side-by-side reading only.",
      "Grid search scores candidates on a validation share of the training split, never on the test split.",
      "The fastText row is an embedding-bag linear classifier; the publication describes fastText as a "
      "many-to-one RNN, which does not match the fastText system.",
      "The DeepTriage row uses bidirectional GRU cells in place of LSTM cells.",
      "Naive Bayes trains on the full training split; the published Naive Bayes scores came from a subset "
      "of the data.",
      "Skip-gram embedding training is shared by the neural methods and excluded from per-cell seconds.",
  };
  return report;
}

nlohmann::json report_to_json(const BenchmarkReport& report, bool include_timing) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : report.cells) {
    nlohmann::json j{{"method", method_tag(cell.method)},
                     {"task", cell.task},
                     {"seed", cell.seed},
                     {"hyperparameters", cell.hyperparameters},
                     {"status", status_of(cell.failed)}};
    if (cell.metrics) {
      const auto m = metrics_to_json(*cell.metrics, cell.classes);
      j["accuracy"] = m.at("accuracy");
      j["weighted_f1"] = m.at("weighted_f1");
      j["per_class"] = m.at("per_class");
      j["confusion"] = cell.confusion->counts();
    } else {
      j["accuracy"] = nullptr;
      j["weighted_f1"] = nullptr;
      j["per_class"] = nlohmann::json::array();
    }
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& g : cell.grid) {
      nlohmann::json entry{{"hyperparameters", g.hyperparameters}, {"status", status_of(g.failed)}};
      entry["validation_accuracy"] = g.validation_accuracy ? nlohmann::json(*g.validation_accuracy) : nlohmann::json();
      if (g.failed) entry["error"] = g.error;
      grid.push_back(std::move(entry));
    }
    j["grid"] = std::move(grid);
    if (cell.failed) j["error"] = cell.error;
    if (include_timing) j["seconds"] = cell.seconds;
    cells.push_back(std::move(j));
  }

  const auto& ref = published_reference();
  nlohmann::json acc = nlohmann::json::object(), f1 = nlohmann::json::object();
  for (const auto& [m, row] : ref.accuracy) acc[method_tag(m)] = row;
  for (const auto& [m, row] : ref.weighted_f1) f1[method_tag(m)] = row;
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : report.methods) methods.push_back(method_tag(m));

  return {{"version", 1},
          {"seeds", report.seeds},
          {"tasks", report.tasks},
          {"methods", methods},
          {"cells", cells},
          {"published_reference", {{"label", "published"}, {"task_labels", ref.task_labels}, {"accuracy", acc}, {"weighted_f1", f1}}},
          {"notes", report.notes}};
}

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Mean over the seeds that succeeded; "*" marks partial failure.
std::string summarize(const BenchmarkReport& report, Method m, const std::string& task, bool f1) {
  double sum = 0.0;
  std::size_t ok = 0, total = 0;
  for (const auto& cell : report.cells) {
    if (cell.method != m || cell.task != task) continue;
    ++total;
    if (!cell.metrics) continue;
    sum += f1 ? cell.metrics->weighted_f1 : cell.metrics->accuracy;
    ++ok;
  }
  if (total == 0) return "-";
  if (ok == 0) return "failed";
  const double mean = sum / static_cast<double>(ok);
  auto text = f1 ? fmt::format("{:.3f}", mean) : fmt::format("{:.1f}%", 100.0 * mean);
  return ok < total ? text + "*" : text;
}

Table build_table(const BenchmarkReport& report, bool f1) {
  const auto& ref = published_reference();
  Table t;
  t.header.push_back("Method");
  for (const auto& task : report.tasks) t.header.push_back(task);
  for (const auto& task : ref.tasks) t.header.push_back("published " + task);
  for (Method m : report.methods) {
    std::vector<std::string> row{method_label(m)};
    for (const auto& task : report.tasks) row.push_back(summarize(report, m, task, f1));
    const auto& source = f1 ? ref.weighted_f1 : ref.accuracy;
    for (const auto& task : ref.tasks) {
      const double v = source.at(m).at(task);
      row.push_back(f1 ? fmt::format("{:.3f}", v) : fmt::format("{:.1f}%", 100.0 * v));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string render_plain(const Table& t) {
  std::vector<std::size_t> width(t.header.size(), 0);
  const auto measure = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  };
  measure(t.header);
  for (const auto& r : t.rows) measure(r);
  std::ostringstream out;
  const auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i == 0 ? "" : " | ") << (i == 0 ? fmt::format("{:<{}}", row[i], width[i]) : fmt::format("{:>{}}", row[i], width[i]));
    }
    out << '\n';
  };
  line(t.header);
  std::size_t rule = 0;
  for (std::size_t w : width) rule += w + 3;
  out << std::string(rule - 3, '-') << '\n';
  for (const auto& r : t.rows) line(r);
  return out.str();
}

std::string render_md(const Table& t) {
  std::ostringstream out;
  const auto line = [&](const std::vector<std::string>& row) {
    out << '|';
    for (const auto& cell : row) out << ' ' << cell << " |";
    out << '\n';
  };
  line(t.header);
  out << '|';
  for (std::size_t i = 0; i < t.header.size(); ++i) out << (i == 0 ? " --- |" : " ---: |");
  out << '\n';
  for (const auto& r : t.rows) line(r);
  return out.str();
}

std::string failures(const BenchmarkReport& report) {
  std::string out;
  for (const auto& cell : report.cells) {
    if (cell.failed) out += fmt::format("- {} on {} (seed {}): {}\n", method_tag(cell.method), cell.task, cell.seed, cell.error);
  }
  return out;
}

}  // namespace

std::string render_table(const BenchmarkReport& report) {
  std::string out = "Accuracy\n" + render_plain(build_table(report, false)) + "\nWeighted F1\n" +
                    render_plain(build_table(report, true));
  if (const auto f = failures(report); !f.empty()) out += "\nFailed cells\n" + f;
  return out;
}

std::string render_markdown(const BenchmarkReport& report) {
  std::ostringstream out;
  out << "# Benchmark\n\nSeeds:";
  for (auto s : report.seeds) out << ' ' << s;
  out << "\n\n## Accuracy\n\n" << render_md(build_table(report, false)) << "\n## Weighted F1\n\n"
      << render_md(build_table(report, true));
  if (const auto f = failures(report); !f.empty()) out << "\n## Failed cells\n\n" << f;
  out << "\n## Notes\n\n";
  for (const auto& n : report.notes) out << "- " << n << '\n';
  return out.str();
}

}  // namespace triage::bench
