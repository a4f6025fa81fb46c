// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>

#include "support/oracles.hpp"
#include "triage/bench/benchmark.hpp"
#include "triage/error.hpp"

using namespace triage;
using namespace triage::bench;

namespace {

KeywordCorpusSpec small_keywords() {
  KeywordCorpusSpec spec;
  spec.documents = 240;
  return spec;
}

TaskData keyword_task_data() {
  const auto corpus = make_keyword_corpus(small_keywords());
  const auto split = make_split(corpus.dataset, corpus.field, 0.15, 1);
  PreparationConfig prep;
  prep.skipgram.dim = 16;
  return prepare_task(corpus.dataset, "syn:" + corpus.field, split, prep);
}

}  // namespace

TEST_CASE("accuracy") {
  CHECK(accuracy(ConfusionMatrix::from_counts({{3, 0}, {0, 4}})) == 1.0);
  CHECK(accuracy(ConfusionMatrix::from_counts({{1, 1}, {1, 1}})) == 0.5);
  CHECK_THROWS_AS(accuracy(ConfusionMatrix(2)), Error);
  CHECK_THROWS_AS(ConfusionMatrix::from_counts({{1, 2}}), Error);
  Rng rng(5);
  for (int round = 0; round < 20; ++round) {
    std::vector<std::pair<int, int>> pairs;
    ConfusionMatrix cm(3);
    for (int i = 0; i < 30; ++i) {
      const int t = static_cast<int>(rng.below(3)), p = static_cast<int>(rng.below(3));
      pairs.emplace_back(t, p);
      cm.add(t, p);
    }
    CHECK(accuracy(cm) == oracle::recount(pairs, 3).first);
  }
}

TEST_CASE("weighted F1") {
  CHECK(weighted_f1(ConfusionMatrix::from_counts({{2, 0}, {0, 5}})) == 1.0);
  const auto cm = ConfusionMatrix::from_counts({{2, 0}, {1, 1}});
  const auto m = compute_metrics(cm);
  CHECK(m.per_class[0].precision == doctest::Approx(2.0 / 3.0));
  CHECK(m.per_class[0].recall == 1.0);
  CHECK(m.per_class[0].f1 == doctest::Approx(0.8));
  CHECK(m.per_class[1].f1 == doctest::Approx(2.0 / 3.0));
  CHECK(m.weighted_f1 == doctest::Approx(0.7333).epsilon(1e-4));

  const auto with_empty = compute_metrics(ConfusionMatrix::from_counts({{2, 0, 0}, {0, 0, 0}, {1, 0, 1}}));
  CHECK(with_empty.per_class[1] == ClassMetrics{0.0, 0.0, 0.0, 0});
  CHECK(with_empty.weighted_f1 == doctest::Approx(0.7333).epsilon(1e-4));
  CHECK_THROWS_AS(weighted_f1(ConfusionMatrix(3)), Error);
}

TEST_CASE("confusion matrix construction") {
  const std::vector<ClassId> truth{0, 1, 1}, pred{0, 0, 1};
  const auto cm = confusion_matrix(truth, pred, 2);
  CHECK(cm.at(1, 0) == 1);
  CHECK(cm.total() == 3);
  CHECK(cm.row_sum(1) == 2);
  CHECK(cm.col_sum(0) == 2);
  CHECK_THROWS_AS(ConfusionMatrix(2).add(2, 0), Error);
  const ClassSet names({"a", "b"});
  const auto j = metrics_to_json(compute_metrics(cm), names);
  CHECK(j.contains("accuracy"));
  CHECK(j.at("per_class").size() == 2);
}

TEST_CASE("method tags") {
  CHECK(parse_method("fasttext") == Method::EmbeddingBag);
  for (auto m : all_methods()) CHECK(parse_method(method_tag(m)) == m);
  CHECK_THROWS_AS(parse_method("lstm"), Error);
  CHECK(all_methods().size() == 6);
  CHECK_FALSE(is_neural(Method::Svm));
}

TEST_CASE("grid cells follow key order with the last key fastest") {
  GridSearchSpec spec;
  spec.grid = grid_from_json({{"b", {1, 2}}, {"a", {10, 20}}});
  const auto cells = grid_cells(spec);
  REQUIRE(cells.size() == 4);
  CHECK(cells[0] == nlohmann::json{{"a", 10}, {"b", 1}});
  CHECK(cells[1] == nlohmann::json{{"a", 10}, {"b", 2}});
  CHECK(cells[3] == nlohmann::json{{"a", 20}, {"b", 2}});
  CHECK_THROWS_AS(grid_from_json({{"a", nlohmann::json::array()}}), Error);
}

TEST_CASE("grid search") {
  auto data = keyword_task_data();
  const auto train = data.train;
  SkipGramConfig sg;
  sg.dim = 16;

  SUBCASE("a single cell wins without scoring") {
    GridSearchSpec spec;
    spec.method = Method::NaiveBayes;
    spec.grid = grid_from_json({{"alpha", {0.5}}});
    const auto r = grid_search(spec, data, train, sg, 1);
    CHECK(r.best == 0);
    CHECK(r.hyperparameters.at("alpha") == 0.5);
    CHECK(r.model != nullptr);
  }
  SUBCASE("a divergent cell loses") {
    GridSearchSpec spec;
    spec.method = Method::EmbeddingBag;
    spec.base = {{"epochs", 3}};
    spec.grid = grid_from_json({{"learning_rate", {1e308, 1e-2}}});
    const auto r = grid_search(spec, data, train, sg, 1);
    REQUIRE(r.cells.size() == 2);
    CHECK(r.cells[0].failed);
    CHECK_FALSE(r.cells[0].error.empty());
    CHECK(r.best == 1);
  }
  SUBCASE("exhaustive tie goes to the first cell") {
    GridSearchSpec spec;
    spec.method = Method::NaiveBayes;
    spec.grid = grid_from_json({{"alpha", {1.0, 1.0, 1.0}}});
    const auto r = grid_search(spec, data, train, sg, 1);
    CHECK(r.best == 0);
    CHECK(r.cells[0].validation_accuracy == r.cells[2].validation_accuracy);
  }
  SUBCASE("every cell failing is an error") {
    GridSearchSpec spec;
    spec.method = Method::EmbeddingBag;
    spec.grid = grid_from_json({{"learning_rate", {1e308, 1e307}}});
    CHECK_THROWS_AS(grid_search(spec, data, train, sg, 1), Error);
  }
}

TEST_CASE("classifiers save and reload with matching predictions") {
  auto data = keyword_task_data();
  SkipGramConfig sg;
  sg.dim = 16;
  const auto dir = std::filesystem::temp_directory_path() / "triage_bench_save";
  for (auto method : {Method::NaiveBayes, Method::Svm, Method::EmbeddingBag}) {
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto settings = default_settings(method);
    auto model = make_classifier(method, settings, sg, 3);
    model->fit(data, data.train);
    model->save(dir, data);
    auto loaded = load_classifier(method, settings, dir, data);
    CHECK(loaded->predict(data, data.test) == model->predict(data, data.test));
    for (const auto& row : model->probabilities(data, data.test)) {
      double sum = 0.0;
      for (double p : row) sum += p;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(make_classifier(Method::NaiveBayes, {{"beta", 1}}, sg, 1), Error);
}

TEST_CASE("benchmark filtering, report and published columns") {
  BenchmarkConfig config;
  DatasetSource source;
  source.name = "syn";
  source.synthetic = small_keywords();
  config.datasets = {source};
  config.methods = {Method::NaiveBayes, Method::Svm};
  config.seeds = {1, 2};
  const auto report = run_benchmark(config, load_sources(config));
  CHECK(report.cells.size() == 4);
  for (const auto& cell : report.cells) {
    CHECK_FALSE(cell.failed);
    CHECK(cell.metrics->accuracy >= 0.9);
  }
  const auto j = report_to_json(report, false);
  CHECK(j.at("cells").size() == 4);
  CHECK_FALSE(j.at("cells")[0].contains("seconds"));
  CHECK(report_to_json(report).at("cells")[0].contains("seconds"));
  CHECK(j.at("published_reference").at("accuracy").at("proposed").at("chromium:type") == 0.882);

  const auto table = render_table(report);
  CHECK(table.find("Naive Bayes") != std::string::npos);
  CHECK(table.find("published") != std::string::npos);
  CHECK(render_markdown(report).find("|") != std::string::npos);
}

TEST_CASE("published reference values") {
  const auto& ref = published_reference();
  CHECK(ref.accuracy.at(Method::Proposed).at("archlinux:priority") == 0.691);
  CHECK(ref.accuracy.at(Method::Proposed).at("archlinux:product") == 0.587);
  CHECK(ref.accuracy.at(Method::Proposed).at("chromium:type") == 0.882);
  CHECK(ref.weighted_f1.at(Method::Proposed).at("archlinux:priority") == 0.579);
  CHECK(ref.weighted_f1.at(Method::Proposed).at("archlinux:product") == 0.567);
  CHECK(ref.weighted_f1.at(Method::Proposed).at("chromium:type") == 0.879);
  CHECK(ref.accuracy.at(Method::NaiveBayes).at("archlinux:priority") == 0.516);
  CHECK(ref.weighted_f1.at(Method::Han).at("chromium:type") == 0.758);
}

TEST_CASE("benchmark configuration") {
  const auto config = benchmark_config_from_json(
      {{"datasets", {{{"name", "arch"}, {"path", "data/arch.jsonl"}, {"fields", {"priority"}}}}},
       {"methods", {"nb", "fasttext"}},
       {"seeds", {3, 4}}},
      "/base");
  CHECK(config.datasets.at(0).path == std::filesystem::path("/base/data/arch.jsonl"));
  CHECK(config.methods == std::vector<Method>{Method::NaiveBayes, Method::EmbeddingBag});
  CHECK(config.seeds == std::vector<std::uint64_t>{3, 4});
  const auto again = benchmark_config_from_json(benchmark_config_to_json(config));
  CHECK(benchmark_config_to_json(again) == benchmark_config_to_json(config));
  CHECK_THROWS_AS(benchmark_config_from_json({{"sedes", {1}}}), Error);
}

TEST_CASE("synthetic corpora") {
  const auto k = make_keyword_corpus(small_keywords());
  CHECK(k.dataset.size() == 240);
  CHECK(k.dataset.classes(k.field).size() == 3);
  CHECK(k.dataset.documents()[0].id == "syn-00000");
  CHECK(keyword_spec_from_json(keyword_spec_to_json(small_keywords())).documents == 240);
  const auto t = make_topic_corpus({});
  CHECK(t.vocabularies.size() == 2);
  Rng rng(1);
  const auto words = pseudo_words(50, rng);
  CHECK(std::set<std::string>(words.begin(), words.end()).size() == 50);
}
