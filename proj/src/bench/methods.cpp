// SPDX-License-Identifier: Apache-2.0
#include "triage/bench/methods.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "triage/baselines.hpp"
#include "triage/nn/checkpoint.hpp"
#include "triage/nn/layers.hpp"
#include "triage/error.hpp"
#include "triage/seq/trainer.hpp"

namespace triage::bench {

std::string method_tag(Method m) {
  switch (m) {
    case Method::NaiveBayes: return "nb";
    case Method::Svm: return "svm";
    case Method::EmbeddingBag: return "embbag";
    case Method::DeepTriage: return "deeptriage";
    case Method::Han: return "han";
    case Method::Proposed: return "proposed";
  }
  return "unknown";
}

Method parse_method(const std::string& tag) {
  if (tag == "fasttext") return Method::EmbeddingBag;
  for (Method m : all_methods()) {
    if (method_tag(m) == tag) return m;
  }
  throw Error("unknown method \"" + tag + "\" (expected nb, svm, embbag, deeptriage, han, proposed)");
}

std::string method_label(Method m) {
  switch (m) {
    case Method::NaiveBayes: return "Naive Bayes";
    case Method::Svm: return "TF-IDF with SVM";
    case Method::EmbeddingBag: return "fastText-style (embedding bag)";
    case Method::DeepTriage: return "DeepTriage-style";
    case Method::Han: return "Hierarchical Attention (regular)";
    case Method::Proposed: return "Multi-block attention + shallow";
  }
  return "unknown";
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::NaiveBayes,   Method::Svm, Method::EmbeddingBag,
                                           Method::DeepTriage, Method::Han, Method::Proposed};
  return methods;
}

bool is_neural(Method m) { return m != Method::NaiveBayes && m != Method::Svm; }

TaskData prepare_task(const Dataset& dataset, const std::string& task, const Split& split,
                      const PreparationConfig& config) {
  const auto& classes = dataset.classes(split.field);
  TaskData data;
  data.task = task;
  data.classes = classes;
  std::unordered_map<std::string, std::size_t> index;
  for (const Document* doc : dataset.labeled(split.field)) {
    index.emplace(doc->id, data.docs.size());
    data.ids.push_back(doc->id);
    data.docs.push_back(preprocess_document(*doc, config.pipeline));
    data.labels.push_back(classes.id(doc->labels.at(split.field)));
  }
  const auto resolve = [&](const std::vector<std::string>& ids, std::vector<std::size_t>& out) {
    for (const auto& id : ids) {
      const auto it = index.find(id);
      if (it == index.end()) throw Error("split document \"" + id + "\" is not labeled for " + split.field);
      out.push_back(it->second);
    }
  };
  resolve(split.train, data.train);
  resolve(split.test, data.test);

  std::vector<ProcessedDocument> train_docs;
  train_docs.reserve(data.train.size());
  for (std::size_t i : data.train) train_docs.push_back(data.docs[i]);
  data.vocab = build_vocabulary(train_docs, config.min_frequency, config.max_vocabulary);
  for (const auto& doc : data.docs) {
    data.encoded.push_back(encode(doc, data.vocab));
    data.counts.push_back(term_counts(doc, data.vocab));
  }
  return data;
}

const EmbeddingTable& ensure_embeddings(TaskData& data, const SkipGramConfig& config) {
  if (!data.embeddings) {
    std::vector<EncodedDocument> docs;
    docs.reserve(data.train.size());
    for (std::size_t i : data.train) docs.push_back(data.encoded[i]);
    data.embeddings = train_skipgram(docs, data.vocab, config);
  }
  return *data.embeddings;
}

namespace {

void require_keys(const nlohmann::json& settings, const std::set<std::string>& allowed, Method m) {
  if (!settings.is_object()) throw Error(method_tag(m) + " settings must be a JSON object");
  for (const auto& [key, value] : settings.items()) {
    if (!allowed.contains(key)) throw Error("unknown " + method_tag(m) + " setting \"" + key + "\"");
  }
}

const std::set<std::string> kNeuralKeys{"block_sizes", "shallow_size", "fc_width", "dropout",
                                        "attention_projection", "fine_tune_embeddings", "batch_size",
                                        "epochs", "patience", "learning_rate", "decay", "epsilon",
                                        "validation_fraction"};

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void check_vocab(const nlohmann::json& j, const Vocabulary& vocab, const std::filesystem::path& path) {
  const auto stored = j.value("vocab_hash", std::string());
  if (stored != vocab.hash()) {
    throw Error(path.string() + " was fitted on vocabulary " + stored + ", not " + vocab.hash());
  }
}

std::vector<double> softmax_row(std::span<const double> scores) {
  nn::Tensor t({1, scores.size()}, std::vector<double>(scores.begin(), scores.end()));
  const auto p = nn::softmax(t);
  return {p.data().begin(), p.data().end()};
}

class NaiveBayesClassifier final : public Classifier {
 public:
  explicit NaiveBayesClassifier(double alpha) : alpha_(alpha) {}

  void fit(TaskData& data, std::span<const std::size_t> train) override {
    std::vector<LabeledVector> rows;
    for (std::size_t i : train) rows.push_back({data.counts[i], data.labels[i]});
    model_ = nb_fit(rows, data.classes.size(), alpha_);
  }

  std::vector<ClassId> predict(const TaskData& data, std::span<const std::size_t> ids) override {
    std::vector<ClassId> out;
    for (std::size_t i : ids) out.push_back(nb_predict(model_, data.counts[i]).label);
    return out;
  }

  std::vector<std::vector<double>> probabilities(const TaskData& data, std::span<const std::size_t> ids) override {
    std::vector<std::vector<double>> out;
    for (std::size_t i : ids) out.push_back(softmax_row(nb_predict(model_, data.counts[i]).scores));
    return out;
  }

  void save(const std::filesystem::path& dir, const TaskData& data) const override {
    write_json(dir / "nb.json", model_.to_json(data.vocab.hash()));
  }

  void load(const std::filesystem::path& dir, const TaskData& data) {
    const auto j = read_json(dir / "nb.json");
    check_vocab(j, data.vocab, dir / "nb.json");
    model_ = NaiveBayesModel::from_json(j);
  }

 private:
  double alpha_;
  NaiveBayesModel model_;
};

class SvmClassifier final : public Classifier {
 public:
  SvmClassifier(double lambda, std::size_t epochs, std::uint64_t seed)
      : lambda_(lambda), epochs_(epochs), seed_(seed) {}

  void fit(TaskData& data, std::span<const std::size_t> train) override {
    std::vector<ProcessedDocument> docs;
    for (std::size_t i : train) docs.push_back(data.docs[i]);
    tfidf_ = fit_tfidf(docs, data.vocab);
    std::vector<LabeledVector> rows;
    for (std::size_t i : train) rows.push_back({transform_tfidf(data.docs[i], data.vocab, tfidf_), data.labels[i]});
    model_ = svm_fit(rows, data.classes.size(), lambda_, epochs_, seed_);
  }

  std::vector<ClassId> predict(const TaskData& data, std::span<const std::size_t> ids) override {
    std::vector<ClassId> out;
    for (std::size_t i : ids) {
      out.push_back(svm_predict(model_, transform_tfidf(data.docs[i], data.vocab, tfidf_)).label);
    }
    return out;
  }

  std::vector<std::vector<double>> probabilities(const TaskData& data, std::span<const std::size_t> ids) override {
    std::vector<std::vector<double>> out;
    for (std::size_t i : ids) {
      out.push_back(softmax_row(svm_predict(model_, transform_tfidf(data.docs[i], data.vocab, tfidf_)).scores));
    }
    return out;
  }

  void save(const std::filesystem::path& dir, const TaskData& data) const override {
    write_json(dir / "tfidf.json", tfidf_.to_json());
    write_json(dir / "svm.json", model_.to_json(data.vocab.hash()));
  }

  void load(const std::filesystem::path& dir, const TaskData& data) {
    const auto svm = read_json(dir / "svm.json");
    check_vocab(svm, data.vocab, dir / "svm.json");
    tfidf_ = TfidfModel::from_json(read_json(dir / "tfidf.json"));
    if (tfidf_.vocab_hash() != data.vocab.hash()) throw Error("tfidf.json was fitted on another vocabulary");
    model_ = LinearSvmModel::from_json(svm);
  }

 private:
  double lambda_;
  std::size_t epochs_;
  std::uint64_t seed_;
  TfidfModel tfidf_;
  LinearSvmModel model_;
};

class NeuralClassifier final : public Classifier {
 public:
  NeuralClassifier(seq::ModelSpec spec, seq::TrainConfig train, SkipGramConfig skipgram, std::uint64_t seed)
      : spec_(std::move(spec)), train_(std::move(train)), skipgram_(skipgram), seed_(seed) {}

  void fit(TaskData& data, std::span<const std::size_t> train) override {
    table_ = ensure_embeddings(data, skipgram_);
    spec_.num_classes = data.classes.size();
    model_ = seq::build_model(spec_, table_, Rng::derive(seed_, 1));
    std::vector<seq::LabeledDocument> docs;
    docs.reserve(train.size());
    for (std::size_t i : train) docs.push_back({data.encoded[i], data.labels[i]});
    history_ = seq::train(*model_, docs, train_);
  }

  std::vector<ClassId> predict(const TaskData& data, std::span<const std::size_t> ids) override {
    if (!model_) throw Error("predict before fit");
    std::vector<const EncodedDocument*> docs;
    for (std::size_t i : ids) docs.push_back(&data.encoded[i]);
    std::vector<ClassId> out;
    for (const auto& p : seq::predict_batch(*model_, docs)) out.push_back(p.label);
    return out;
  }

  std::vector<std::vector<double>> probabilities(const TaskData& data, std::span<const std::size_t> ids) override {
    if (!model_) throw Error("predict before fit");
    std::vector<const EncodedDocument*> docs;
    for (std::size_t i : ids) docs.push_back(&data.encoded[i]);
    std::vector<std::vector<double>> out;
    for (auto& p : seq::predict_batch(*model_, docs)) out.push_back(std::move(p.probabilities));
    return out;
  }

  void save(const std::filesystem::path& dir, const TaskData&) const override {
    if (!model_) throw Error("save before fit");
    save_embeddings(dir / "embeddings.txt", table_);
    const auto params = model_->parameters();
    nn::save_checkpoint(dir / "params.bin", std::vector<const nn::Parameter*>(params.begin(), params.end()));
  }

  void load(const std::filesystem::path& dir, const TaskData& data) {
    table_ = load_embeddings(dir / "embeddings.txt");
    if (table_.vocab_hash != data.vocab.hash()) throw Error("embeddings.txt belongs to another vocabulary");
    spec_.num_classes = data.classes.size();
    model_ = seq::build_model(spec_, table_, Rng::derive(seed_, 1));
    auto params = model_->parameters();
    nn::restore_parameters(params, nn::load_checkpoint(dir / "params.bin"));
  }

 private:
  seq::ModelSpec spec_;
  seq::TrainConfig train_;
  SkipGramConfig skipgram_;
  std::uint64_t seed_;
  EmbeddingTable table_;
  std::unique_ptr<seq::Model> model_;
  seq::TrainHistory history_;
};

seq::Architecture architecture_of(Method m) {
  switch (m) {
    case Method::EmbeddingBag: return seq::Architecture::EmbeddingBag;
    case Method::DeepTriage: return seq::Architecture::DeepTriage;
    case Method::Han: return seq::Architecture::Han;
    default: return seq::Architecture::Proposed;
  }
}

}  // namespace

nlohmann::json default_settings(Method method) {
  switch (method) {
    case Method::NaiveBayes: return {{"alpha", 1.0}};
    case Method::Svm: return {{"lambda", 1e-4}, {"epochs", 10}};
    case Method::EmbeddingBag: return {{"learning_rate", 1e-2}, {"epochs", 30}, {"batch_size", 32}};
    case Method::DeepTriage:
      return {{"block_sizes", {64}}, {"fc_width", 64}, {"dropout", 0.5}, {"learning_rate", 1e-3},
              {"epochs", 30}, {"batch_size", 32}};
    case Method::Han:
      return {{"block_sizes", {64}}, {"dropout", 0.5}, {"learning_rate", 1e-3}, {"epochs", 30},
              {"batch_size", 32}};
    case Method::Proposed:
      return {{"block_sizes", {32, 64, 128}}, {"shallow_size", 64}, {"fc_width", 64}, {"dropout", 0.5},
              {"learning_rate", 1e-3}, {"epochs", 30}, {"batch_size", 32}};
  }
  return nlohmann::json::object();
}

namespace {

std::unique_ptr<NaiveBayesClassifier> make_nb(const nlohmann::json& settings) {
  require_keys(settings, {"alpha"}, Method::NaiveBayes);
  return std::make_unique<NaiveBayesClassifier>(settings.value("alpha", 1.0));
}

std::unique_ptr<SvmClassifier> make_svm(const nlohmann::json& settings, std::uint64_t seed) {
  require_keys(settings, {"lambda", "epochs"}, Method::Svm);
  return std::make_unique<SvmClassifier>(settings.value("lambda", 1e-4), settings.value("epochs", std::size_t{10}),
                                         seed);
}

std::unique_ptr<NeuralClassifier> make_neural(Method method, const nlohmann::json& settings,
                                              const SkipGramConfig& skipgram, std::uint64_t seed) {
  require_keys(settings, kNeuralKeys, method);
  seq::ModelSpec defaults;
  defaults.architecture = architecture_of(method);
  auto spec = seq::spec_from_json(settings, defaults);
  seq::TrainConfig train_defaults;
  train_defaults.seed = Rng::derive(seed, 2);
  auto train = seq::train_config_from_json(settings, train_defaults);
  return std::make_unique<NeuralClassifier>(std::move(spec), std::move(train), skipgram, seed);
}

}  // namespace

std::unique_ptr<Classifier> make_classifier(Method method, const nlohmann::json& settings,
                                            const SkipGramConfig& skipgram, std::uint64_t seed) {
  switch (method) {
    case Method::NaiveBayes: return make_nb(settings);
    case Method::Svm: return make_svm(settings, seed);
    default: return make_neural(method, settings, skipgram, seed);
  }
}

std::unique_ptr<Classifier> load_classifier(Method method, const nlohmann::json& settings,
                                            const std::filesystem::path& dir, const TaskData& data) {
  switch (method) {
    case Method::NaiveBayes: {
      auto c = make_nb(settings);
      c->load(dir, data);
      return c;
    }
    case Method::Svm: {
      auto c = make_svm(settings, 0);
      c->load(dir, data);
      return c;
    }
    default: {
      auto c = make_neural(method, settings, SkipGramConfig{}, 0);
      c->load(dir, data);
      return c;
    }
  }
}

std::vector<std::pair<std::string, std::vector<nlohmann::json>>> grid_from_json(const nlohmann::json& grid) {
  if (!grid.is_object()) throw Error("grid must be a JSON object of name -> candidate list");
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> out;
  for (const auto& [name, values] : grid.items()) {
    if (!values.is_array() || values.empty()) throw Error("grid entry \"" + name + "\" needs a non-empty list");
    out.emplace_back(name, std::vector<nlohmann::json>(values.begin(), values.end()));
  }
  return out;
}

std::vector<nlohmann::json> grid_cells(const GridSearchSpec& spec) {
  for (const auto& [name, values] : spec.grid) {
    if (values.empty()) throw Error("grid entry \"" + name + "\" has no candidates");
  }
  std::vector<nlohmann::json> cells;
  std::vector<std::size_t> digit(spec.grid.size(), 0);
  while (true) {
    nlohmann::json cell = spec.base.is_null() ? nlohmann::json::object() : spec.base;
    for (std::size_t i = 0; i < spec.grid.size(); ++i) cell[spec.grid[i].first] = spec.grid[i].second[digit[i]];
    cells.push_back(std::move(cell));
    std::size_t pos = spec.grid.size();
    while (pos > 0) {
      --pos;
      if (++digit[pos] < spec.grid[pos].second.size()) break;
      digit[pos] = 0;
      if (pos == 0) return cells;
    }
    if (spec.grid.empty()) return cells;
  }
}

GridSearchResult grid_search(const GridSearchSpec& spec, TaskData& data, std::span<const std::size_t> train,
                             const SkipGramConfig& skipgram, std::uint64_t seed) {
  const auto cells = grid_cells(spec);
  GridSearchResult result;
  for (const auto& c : cells) result.cells.push_back({c, std::nullopt, false, {}});

  if (cells.size() > 1) {
    if (!(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0)) {
      throw Error("grid search: validation_fraction must lie in (0, 1)");
    }
    std::vector<std::size_t> order(train.begin(), train.end());
    Rng rng(Rng::derive(seed, 0x9A));
    rng.shuffle(std::span<std::size_t>(order));
    const auto held = static_cast<std::size_t>(
        std::llround(spec.validation_fraction * static_cast<double>(order.size())));
    if (held == 0 || held >= order.size()) throw Error("grid search: training set too small to hold out validation");
    const std::vector<std::size_t> validation(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
    const std::vector<std::size_t> fit(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());

    std::optional<double> best_score;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      auto& score = result.cells[i];
      try {
        auto model = make_classifier(spec.method, cells[i], skipgram, Rng::derive(seed, i + 1));
        model->fit(data, fit);
        const auto predicted = model->predict(data, validation);
        std::size_t correct = 0;
        for (std::size_t v = 0; v < validation.size(); ++v) correct += predicted[v] == data.labels[validation[v]];
        score.validation_accuracy = static_cast<double>(correct) / static_cast<double>(validation.size());
        if (!best_score || *score.validation_accuracy > *best_score) {
          best_score = score.validation_accuracy;
          result.best = i;
        }
      } catch (const std::exception& e) {
        score.failed = true;
        score.error = e.what();
        spdlog::warn("{} grid cell {} failed: {}", method_tag(spec.method), i, e.what());
      }
    }
    if (!best_score) throw Error("grid search: every cell failed");
  }

  result.hyperparameters = cells[result.best];
  result.model = make_classifier(spec.method, cells[result.best], skipgram, Rng::derive(seed, result.best + 1));
  result.model->fit(data, train);
  return result;
}

}  // namespace triage::bench
