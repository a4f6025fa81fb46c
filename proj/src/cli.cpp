// SPDX-License-Identifier: Apache-2.0
#include "triage/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "triage/bench/benchmark.hpp"
#include "triage/embeddings.hpp"
#include "triage/error.hpp"
#include "triage/hash.hpp"

namespace triage {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string config;
  std::string out;
};

struct Options {
  std::string data;
  std::string field;
  std::string method;
  std::string model;
  std::string input;
  std::string kind = "keyword";
  std::vector<std::string> schema;
  std::vector<std::string> methods;
  std::vector<std::string> tasks;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> sources;
  std::size_t documents = 0;
  bool verbose = false;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

bench::BenchmarkConfig load_config(const Common& common) {
  if (common.config.empty()) return {};
  return bench::benchmark_config_from_json(read_json_file(common.config),
                                           fs::path(common.config).parent_path());
}

std::string task_name(const std::string& data, const std::string& field) {
  return fs::path(data).stem().string() + ":" + field;
}

json merged_settings(const bench::BenchmarkConfig& config, bench::Method m) {
  auto settings = bench::default_settings(m);
  if (const auto it = config.settings.find(m); it != config.settings.end()) settings.update(it->second);
  return settings;
}

json preparation_to_json(const bench::PreparationConfig& p) {
  return {{"pipeline", pipeline_to_json(p.pipeline)},
          {"vocabulary", {{"min_frequency", p.min_frequency}, {"max_size", p.max_vocabulary}}},
          {"embeddings", skipgram_to_json(p.skipgram)}};
}

bench::PreparationConfig preparation_from_json(const json& j) {
  bench::PreparationConfig p;
  p.pipeline = pipeline_from_json(j.at("pipeline"));
  p.min_frequency = j.at("vocabulary").at("min_frequency").get<std::uint64_t>();
  p.max_vocabulary = j.at("vocabulary").at("max_size").get<std::size_t>();
  p.skipgram = skipgram_from_json(j.at("embeddings"));
  return p;
}

std::string read_document_line(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) return line;
  }
  throw Error("no document on input");
}

void emit(std::ostream& out, const Common& common, const json& j, bool to_file_only = false) {
  if (!common.out.empty()) {
    write_text(common.out, j.dump(2) + "\n");
    if (to_file_only) return;
  }
  out << j.dump(2) << '\n';
}

// ---- subcommands ---------------------------------------------------------------

int cmd_ingest(const Common& common, const Options& o, std::ostream& out) {
  const auto dataset = load_dataset(o.data, o.schema);
  json fields = json::object();
  for (const auto& [name, classes] : dataset.fields()) {
    fields[name] = {{"classes", classes.names()}, {"labeled", dataset.labeled(name).size()}};
  }
  emit(out, common, {{"path", o.data}, {"documents", dataset.size()}, {"fields", fields}});
  return kExitOk;
}

int cmd_preprocess(const Common& common, const Options& o, std::ostream& out) {
  const auto config = load_config(common);
  const auto dataset = load_dataset(o.data);
  std::ostringstream text;
  for (const auto& doc : dataset.documents()) {
    const auto processed = preprocess_document(doc, config.preparation.pipeline);
    text << json{{"id", processed.doc_id}, {"sentences", processed.sentences}}.dump() << '\n';
  }
  if (common.out.empty()) {
    out << text.str();
  } else {
    write_text(common.out, text.str());
  }
  return kExitOk;
}

int cmd_train_embeddings(const Common& common, const Options& o, std::ostream& out) {
  if (common.out.empty()) throw Error("train-embeddings needs --out DIR");
  const auto config = load_config(common);
  const auto dataset = load_dataset(o.data);
  std::vector<ProcessedDocument> docs;
  for (const auto& doc : dataset.documents()) docs.push_back(preprocess_document(doc, config.preparation.pipeline));
  const auto vocab = build_vocabulary(docs, config.preparation.min_frequency, config.preparation.max_vocabulary);
  std::vector<EncodedDocument> encoded;
  for (const auto& doc : docs) encoded.push_back(encode(doc, vocab));
  auto skipgram = config.preparation.skipgram;
  if (common.seed_given) skipgram.seed = common.seed;
  SkipGramReport report;
  const auto table = train_skipgram(encoded, vocab, skipgram, &report);
  const fs::path dir(common.out);
  fs::create_directories(dir);
  save_embeddings(dir / "embeddings.txt", table);
  std::ostringstream v;
  vocab.write(v);
  write_text(dir / "vocab.txt", v.str());
  out << json{{"vocab_size", table.vocab_size()},
              {"dim", table.dim()},
              {"vocab_hash", table.vocab_hash},
              {"epoch_loss", report.epoch_loss}}
             .dump(2)
      << '\n';
  return kExitOk;
}

int cmd_train(const Common& common, const Options& o, std::ostream& out) {
  if (common.out.empty()) throw Error("train needs --out DIR");
  const auto config = load_config(common);
  const auto method = bench::parse_method(o.method);
  const auto dataset = load_dataset(o.data);
  const auto split = make_split(dataset, o.field, config.test_fraction, common.seed);
  auto data = bench::prepare_task(dataset, task_name(o.data, o.field), split, config.preparation);
  auto skipgram = config.preparation.skipgram;
  skipgram.seed = Rng::derive(common.seed, skipgram.seed);

  bench::GridSearchSpec spec;
  spec.method = method;
  spec.base = merged_settings(config, method);
  if (const auto it = config.grids.find(method); it != config.grids.end()) spec.grid = bench::grid_from_json(it->second);
  spec.validation_fraction = config.validation_fraction;
  auto result = bench::grid_search(spec, data, data.train, skipgram, Rng::derive(common.seed, 0x100));

  const fs::path dir(common.out);
  fs::create_directories(dir);
  result.model->save(dir, data);
  std::ostringstream v;
  data.vocab.write(v);
  write_text(dir / "vocab.txt", v.str());
  const json meta{{"version", 1},
                  {"method", bench::method_tag(method)},
                  {"architecture", bench::method_label(method)},
                  {"field", o.field},
                  {"seed", common.seed},
                  {"test_fraction", config.test_fraction},
                  {"hyperparameters", result.hyperparameters},
                  {"classes", data.classes.names()},
                  {"vocab_hash", data.vocab.hash()},
                  {"embedding_hash", fs::exists(dir / "embeddings.txt") ? json(hash_file((dir / "embeddings.txt").string())) : json()},
                  {"preparation", preparation_to_json(config.preparation)}};
  write_text(dir / "model.json", meta.dump(2) + "\n");
  out << json{{"model", dir.string()},
              {"method", bench::method_tag(method)},
              {"train_documents", data.train.size()},
              {"test_documents", data.test.size()},
              {"hyperparameters", result.hyperparameters}}
             .dump(2)
      << '\n';
  return kExitOk;
}

struct LoadedModel {
  json meta;
  bench::Method method;
  ClassSet classes;
  bench::PreparationConfig preparation;
};

LoadedModel read_model(const std::string& dir) {
  LoadedModel m;
  m.meta = read_json_file((fs::path(dir) / "model.json").string());
  m.method = bench::parse_method(m.meta.at("method").get<std::string>());
  m.classes = ClassSet(m.meta.at("classes").get<std::vector<std::string>>());
  m.preparation = preparation_from_json(m.meta.at("preparation"));
  if (!m.meta.at("embedding_hash").is_null()) {
    const auto actual = hash_file((fs::path(dir) / "embeddings.txt").string());
    if (actual != m.meta.at("embedding_hash").get<std::string>()) {
      throw Error("embeddings.txt in " + dir + " does not match the hash recorded in model.json");
    }
  }
  return m;
}

int cmd_evaluate(const Common& common, const Options& o, std::ostream& out) {
  const auto model = read_model(o.model);
  const auto field = model.meta.at("field").get<std::string>();
  const auto dataset = load_dataset(o.data);
  const auto split = make_split(dataset, field, model.meta.at("test_fraction").get<double>(),
                                model.meta.at("seed").get<std::uint64_t>());
  const auto data = bench::prepare_task(dataset, task_name(o.data, field), split, model.preparation);
  const auto stored = model.meta.at("vocab_hash").get<std::string>();
  if (data.vocab.hash() != stored) {
    throw Error("vocabulary hash mismatch: the checkpoint was trained on vocabulary " + stored +
                " but this dataset yields " + data.vocab.hash() + "; evaluate with the dataset used for training");
  }
  if (!(data.classes == model.classes)) throw Error("class set of the dataset differs from the checkpoint's");
  auto classifier = bench::load_classifier(model.method, model.meta.at("hyperparameters"), o.model, data);
  const auto predicted = classifier->predict(data, data.test);
  std::vector<ClassId> truth;
  for (std::size_t i : data.test) truth.push_back(data.labels[i]);
  const auto cm = bench::confusion_matrix(truth, predicted, data.classes.size());
  auto report = bench::metrics_to_json(bench::compute_metrics(cm), data.classes);
  report["method"] = bench::method_tag(model.method);
  report["field"] = field;
  report["test_documents"] = data.test.size();
  report["confusion"] = cm.counts();
  emit(out, common, report);
  return kExitOk;
}

int cmd_predict(const Common& common, const Options& o, std::istream& in, std::ostream& out) {
  const auto model = read_model(o.model);
  std::string line;
  if (o.input.empty() || o.input == "-") {
    line = read_document_line(in);
  } else {
    std::ifstream file(o.input);
    if (!file) throw Error("cannot open " + o.input);
    line = read_document_line(file);
  }
  Document doc;
  try {
    doc = document_from_json(json::parse(line));
  } catch (const json::exception& e) {
    throw Error(std::string("input document: ") + e.what());
  }

  std::ifstream vocab_in(fs::path(o.model) / "vocab.txt");
  if (!vocab_in) throw Error("cannot open vocab.txt in " + o.model);
  bench::TaskData data;
  data.classes = model.classes;
  data.vocab = Vocabulary::read(vocab_in);
  if (data.vocab.hash() != model.meta.at("vocab_hash").get<std::string>()) {
    throw Error("vocab.txt does not match the hash recorded in model.json");
  }
  data.ids.push_back(doc.id);
  data.docs.push_back(preprocess_document(doc, model.preparation.pipeline));
  data.labels.push_back(0);
  data.encoded.push_back(encode(data.docs.back(), data.vocab));
  data.counts.push_back(term_counts(data.docs.back(), data.vocab));

  auto classifier = bench::load_classifier(model.method, model.meta.at("hyperparameters"), o.model, data);
  const std::vector<std::size_t> ids{0};
  const auto label = classifier->predict(data, ids).front();
  const auto probs = classifier->probabilities(data, ids).front();
  json p = json::object();
  for (std::size_t c = 0; c < probs.size(); ++c) p[model.classes.name(static_cast<ClassId>(c))] = probs[c];
  emit(out, common, {{"id", doc.id}, {"class", model.classes.name(label)}, {"probabilities", p}});
  return kExitOk;
}

int cmd_benchmark(const Common& common, const Options& o, std::ostream& out) {
  auto config = load_config(common);
  for (const auto& source : o.sources) {
    const auto eq = source.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("--data expects name=path, got \"" + source + "\"");
    bench::DatasetSource s;
    s.name = source.substr(0, eq);
    s.path = source.substr(eq + 1);
    config.datasets.push_back(std::move(s));
  }
  if (config.datasets.empty()) {
    bench::DatasetSource s;
    s.name = "synthetic";
    s.synthetic = bench::KeywordCorpusSpec{};
    config.datasets.push_back(std::move(s));
  }
  if (!o.methods.empty()) {
    config.methods.clear();
    for (const auto& tag : o.methods) config.methods.push_back(bench::parse_method(tag));
  }
  if (!o.tasks.empty()) config.tasks = o.tasks;
  if (!o.seeds.empty()) {
    config.seeds = o.seeds;
  } else if (common.seed_given) {
    config.seeds = {common.seed};
  }

  const auto datasets = bench::load_sources(config);
  const auto report = bench::run_benchmark(config, datasets);
  out << bench::render_table(report);
  if (!common.out.empty()) {
    const fs::path dir(common.out);
    fs::create_directories(dir);
    write_text(dir / "report.json", bench::report_to_json(report).dump(2) + "\n");
    write_text(dir / "report.md", bench::render_markdown(report));
    write_text(dir / "config.json", bench::benchmark_config_to_json(config).dump(2) + "\n");
  }
  const bool all_failed = std::all_of(report.cells.begin(), report.cells.end(), [](const auto& c) { return c.failed; });
  return all_failed ? kExitFailure : kExitOk;
}

int cmd_synthesize(const Common& common, const Options& o, std::ostream& out) {
  const json spec = common.config.empty() ? json::object() : read_json_file(common.config);
  bench::SyntheticCorpus corpus;
  if (o.kind == "keyword") {
    auto s = bench::keyword_spec_from_json(spec);
    if (common.seed_given) s.seed = common.seed;
    if (o.documents > 0) s.documents = o.documents;
    corpus = bench::make_keyword_corpus(s);
  } else if (o.kind == "topic") {
    auto s = bench::topic_spec_from_json(spec);
    if (common.seed_given) s.seed = common.seed;
    if (o.documents > 0) s.documents = o.documents;
    corpus = bench::make_topic_corpus(s);
  } else {
    throw Error("unknown corpus kind \"" + o.kind + "\" (expected keyword or topic)");
  }
  std::ostringstream text;
  write_dataset(text, corpus.dataset);
  if (common.out.empty()) {
    out << text.str();
  } else {
    write_text(common.out, text.str());
  }
  return kExitOk;
}

void add_common(CLI::App* sub, Common& common) {
  sub->add_option("--seed", common.seed, "Master seed")->each([&](const std::string&) { common.seed_given = true; });
  sub->add_option("--config", common.config, "JSON configuration file");
  sub->add_option("--out", common.out, "Output file or directory");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bug and ticket text classification toolkit", "triage"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  Options o;
  app.add_flag("-v,--verbose", o.verbose, "Log progress to stderr");

  auto* ingest = app.add_subcommand("ingest", "Validate a dataset file and summarize its labels");
  ingest->add_option("--data", o.data, "JSON-lines dataset")->required();
  ingest->add_option("--schema", o.schema, "Label fields to keep")->delimiter(',');
  add_common(ingest, common);

  auto* preprocess = app.add_subcommand("preprocess", "Write the sentence/token form of every document");
  preprocess->add_option("--data", o.data, "JSON-lines dataset")->required();
  add_common(preprocess, common);

  auto* embeddings = app.add_subcommand("train-embeddings", "Train skip-gram vectors on a dataset");
  embeddings->add_option("--data", o.data, "JSON-lines dataset")->required();
  add_common(embeddings, common);

  auto* train = app.add_subcommand("train", "Train one method on the training split of a field");
  train->add_option("--data", o.data, "JSON-lines dataset")->required();
  train->add_option("--field", o.field, "Label field")->required();
  train->add_option("--method", o.method, "nb, svm, embbag, deeptriage, han or proposed")->required();
  add_common(train, common);

  auto* evaluate = app.add_subcommand("evaluate", "Score a trained model on its test split");
  evaluate->add_option("--model", o.model, "Model directory written by train")->required();
  evaluate->add_option("--data", o.data, "JSON-lines dataset used for training")->required();
  add_common(evaluate, common);

  auto* predict = app.add_subcommand("predict", "Classify one JSON document");
  predict->add_option("--model", o.model, "Model directory written by train")->required();
  predict->add_option("--input", o.input, "File holding the document (default stdin)");
  add_common(predict, common);

  auto* benchmark = app.add_subcommand("benchmark", "Run methods x tasks x seeds and report");
  benchmark->add_option("--methods", o.methods, "Method tags")->delimiter(',');
  benchmark->add_option("--tasks", o.tasks, "dataset:field tasks")->delimiter(',');
  benchmark->add_option("--seeds", o.seeds, "Seeds")->delimiter(',');
  benchmark->add_option("--data", o.sources, "Extra dataset as name=path");
  add_common(benchmark, common);

  auto* synthesize = app.add_subcommand("synthesize", "Generate a synthetic labeled corpus");
  synthesize->add_option("--kind", o.kind, "keyword or topic");
  synthesize->add_option("--documents", o.documents, "Number of documents");
  add_common(synthesize, common);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  const auto previous = spdlog::get_level();
  spdlog::set_level(o.verbose ? spdlog::level::info : spdlog::level::warn);
  int code = kExitOk;
  try {
    if (ingest->parsed()) code = cmd_ingest(common, o, out);
    else if (preprocess->parsed()) code = cmd_preprocess(common, o, out);
    else if (embeddings->parsed()) code = cmd_train_embeddings(common, o, out);
    else if (train->parsed()) code = cmd_train(common, o, out);
    else if (evaluate->parsed()) code = cmd_evaluate(common, o, out);
    else if (predict->parsed()) code = cmd_predict(common, o, in, out);
    else if (benchmark->parsed()) code = cmd_benchmark(common, o, out);
    else if (synthesize->parsed()) code = cmd_synthesize(common, o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    code = kExitFailure;
  }
  spdlog::set_level(previous);
  return code;
}

}  // namespace triage
