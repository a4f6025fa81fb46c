// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/corpus.hpp"
#include "triage/embeddings.hpp"
#include "triage/features.hpp"
#include "triage/preprocess.hpp"

namespace triage::bench {

enum class Method { NaiveBayes, Svm, EmbeddingBag, DeepTriage, Han, Proposed };

/// Short tags: nb, svm, embbag, deeptriage, han, proposed.
std::string method_tag(Method m);
/// Also accepts "fasttext" for embbag.
Method parse_method(const std::string& tag);
/// Row label used in rendered tables.
std::string method_label(Method m);
const std::vector<Method>& all_methods();
bool is_neural(Method m);

struct PreparationConfig {
  PipelineConfig pipeline;
  std::uint64_t min_frequency = 1;
  std::size_t max_vocabulary = 50000;
  SkipGramConfig skipgram;
};

/// One labeled field of a dataset, preprocessed and encoded. The vocabulary
/// comes from the training documents only.
struct TaskData {
  std::string task;
  ClassSet classes;
  std::vector<std::string> ids;
  std::vector<ProcessedDocument> docs;
  std::vector<ClassId> labels;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  Vocabulary vocab;
  std::vector<EncodedDocument> encoded;
  std::vector<SparseVector> counts;
  std::optional<EmbeddingTable> embeddings;
};

TaskData prepare_task(const Dataset& dataset, const std::string& task, const Split& split,
                      const PreparationConfig& config);

/// Skip-gram vectors over the training documents, trained on first use.
const EmbeddingTable& ensure_embeddings(TaskData& data, const SkipGramConfig& config);

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(TaskData& data, std::span<const std::size_t> train) = 0;
  virtual std::vector<ClassId> predict(const TaskData& data, std::span<const std::size_t> ids) = 0;
  /// One probability row per document. Linear models report the softmax of
  /// their scores.
  virtual std::vector<std::vector<double>> probabilities(const TaskData& data,
                                                         std::span<const std::size_t> ids) = 0;
  /// Writes the fitted state into an existing directory.
  virtual void save(const std::filesystem::path& dir, const TaskData& data) const = 0;
};

/// Settings keys:
///   nb: alpha
///   svm: lambda, epochs
///   neural: block_sizes, shallow_size, fc_width, dropout, attention_projection,
///           fine_tune_embeddings, batch_size, epochs, patience, learning_rate,
///           decay, epsilon, validation_fraction
/// Unknown keys are rejected.
std::unique_ptr<Classifier> make_classifier(Method method, const nlohmann::json& settings,
                                            const SkipGramConfig& skipgram, std::uint64_t seed);

/// Restores a classifier written by save(). `data` supplies the class set
/// and vocabulary; a vocabulary other than the saved one is an error.
std::unique_ptr<Classifier> load_classifier(Method method, const nlohmann::json& settings,
                                            const std::filesystem::path& dir, const TaskData& data);

/// Default settings of a method.
nlohmann::json default_settings(Method method);

/// Candidate values per hyperparameter. Cells enumerate the product in
/// key order with the last key varying fastest.
struct GridSearchSpec {
  Method method = Method::NaiveBayes;
  nlohmann::json base = nlohmann::json::object();
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> grid;
  double validation_fraction = 0.15;
};

/// `grid` is an object of name -> array of candidates.
std::vector<std::pair<std::string, std::vector<nlohmann::json>>> grid_from_json(const nlohmann::json& grid);
/// Base settings overridden by each cell's values.
std::vector<nlohmann::json> grid_cells(const GridSearchSpec& spec);

struct GridCellScore {
  nlohmann::json hyperparameters;
  std::optional<double> validation_accuracy;
  bool failed = false;
  std::string error;
};

struct GridSearchResult {
  std::size_t best = 0;
  nlohmann::json hyperparameters;
  std::vector<GridCellScore> cells;
  /// Retrained on all of `train` with the winning settings.
  std::unique_ptr<Classifier> model;
};

/// Scores each cell on a seeded validation share of `train`; the first
/// cell with the highest accuracy wins. A single-cell grid skips scoring.
/// Failed cells are recorded; throws if every cell fails.
GridSearchResult grid_search(const GridSearchSpec& spec, TaskData& data,
                             std::span<const std::size_t> train, const SkipGramConfig& skipgram,
                             std::uint64_t seed);

}  // namespace triage::bench
