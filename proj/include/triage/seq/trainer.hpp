// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/corpus.hpp"
#include "triage/nn/optim.hpp"
#include "triage/seq/models.hpp"

namespace triage::seq {

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  /// Epochs without a validation improvement before stopping.
  std::size_t patience = 5;
  nn::RmsPropState optimizer;
  std::uint64_t seed = 1;
  /// Share of the training documents held out for early stopping.
  double validation_fraction = 0.15;

  void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig defaults = {});

struct LabeledDocument {
  EncodedDocument tokens;
  ClassId label = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_accuracy = 0.0;

  bool operator==(const EpochStats&) const = default;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double best_validation_accuracy = 0.0;
  bool stopped_early = false;

  bool operator==(const TrainHistory&) const = default;
};

/// Mini-batch RMSprop on cross-entropy. Batches group documents of similar
/// sentence count. With a validation set the parameters of the best epoch
/// are restored at the end. Throws DivergenceError on a non-finite loss or
/// gradient.
TrainHistory train(Model& model, std::span<const LabeledDocument> data, const TrainConfig& config);

struct Prediction {
  ClassId label = 0;
  std::vector<double> probabilities;
};

/// Eval-mode prediction; ties go to the smaller class id.
std::vector<Prediction> predict_batch(Model& model, std::span<const EncodedDocument* const> docs,
                                      std::size_t batch_size = 64);
Prediction predict(Model& model, const EncodedDocument& doc);

}  // namespace triage::seq
