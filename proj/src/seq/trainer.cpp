// SPDX-License-Identifier: Apache-2.0
#include "triage/seq/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "triage/error.hpp"
#include "triage/nn/layers.hpp"

namespace triage::seq {

void TrainConfig::validate() const {
  if (batch_size == 0) throw Error("train config: batch_size must be positive");
  if (epochs == 0) throw Error("train config: epochs must be positive");
  if (patience == 0) throw Error("train config: patience must be positive");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw Error("train config: validation_fraction must lie in [0, 1)");
  }
  optimizer.validate();
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"patience", c.patience},
          {"learning_rate", c.optimizer.learning_rate},
          {"decay", c.optimizer.decay},
          {"epsilon", c.optimizer.epsilon},
          {"seed", c.seed},
          {"validation_fraction", c.validation_fraction}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.patience = j.value("patience", c.patience);
  c.optimizer.learning_rate = j.value("learning_rate", c.optimizer.learning_rate);
  c.optimizer.decay = j.value("decay", c.optimizer.decay);
  c.optimizer.epsilon = j.value("epsilon", c.optimizer.epsilon);
  c.seed = j.value("seed", c.seed);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.validate();
  return c;
}

namespace {

std::size_t sentence_count(const EncodedDocument& doc) {
  return static_cast<std::size_t>(std::count_if(doc.begin(), doc.end(), [](const auto& s) {
    return std::any_of(s.begin(), s.end(), [](TokenId id) { return id != Vocabulary::kPad; });
  }));
}

std::vector<std::vector<std::size_t>> make_buckets(std::span<const LabeledDocument> data,
                                                   std::vector<std::size_t> order,
                                                   std::size_t batch_size, Rng& rng) {
  rng.shuffle(std::span<std::size_t>(order));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sentence_count(data[a].tokens) < sentence_count(data[b].tokens);
  });
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch_size)));
  }
  rng.shuffle(std::span<std::vector<std::size_t>>(batches));
  return batches;
}

ClassId best_class(std::span<const double> probs) {
  return static_cast<ClassId>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

double accuracy_on(Model& model, std::span<const LabeledDocument> data,
                   std::span<const std::size_t> ids) {
  std::vector<const EncodedDocument*> docs;
  docs.reserve(ids.size());
  for (std::size_t i : ids) docs.push_back(&data[i].tokens);
  const auto predictions = predict_batch(model, docs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) correct += predictions[i].label == data[ids[i]].label;
  return static_cast<double>(correct) / static_cast<double>(ids.size());
}

std::vector<nn::Tensor> snapshot(const std::vector<Parameter*>& params) {
  std::vector<nn::Tensor> out;
  out.reserve(params.size());
  for (const auto* p : params) out.push_back(p->value);
  return out;
}

}  // namespace

TrainHistory train(Model& model, std::span<const LabeledDocument> data, const TrainConfig& config) {
  config.validate();
  if (data.empty()) throw Error("train: no training documents");
  const auto classes = static_cast<ClassId>(model.spec().num_classes);
  for (const auto& d : data) {
    if (d.label < 0 || d.label >= classes) throw Error("train: label outside the model's classes");
  }

  Rng rng(Rng::derive(config.seed, 0x7A));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));
  auto held = static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(data.size())));
  if (held >= data.size()) held = 0;
  const std::vector<std::size_t> validation(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
  std::vector<std::size_t> fit(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());
  std::sort(fit.begin(), fit.end());

  auto params = model.parameters();
  nn::RmsPropState optimizer = config.optimizer;
  optimizer.cache.clear();
  nn::zero_grads(params);

  TrainHistory history;
  std::vector<nn::Tensor> best;
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    const auto batches = make_buckets(data, fit, config.batch_size, rng);
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const auto& ids = batches[bi];
      std::vector<const EncodedDocument*> docs;
      std::vector<ClassId> labels;
      for (std::size_t i : ids) {
        docs.push_back(&data[i].tokens);
        labels.push_back(data[i].label);
      }
      const Batch batch = make_batch(docs);
      const auto logits = model.forward(batch, nn::Mode::Train);
      const auto result = nn::cross_entropy(nn::softmax(logits), labels);
      if (!std::isfinite(result.loss) || !logits.all_finite()) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(bi + 1));
      }
      model.backward(result.logit_grad);
      try {
        nn::rmsprop_step(params, optimizer);
      } catch (const DivergenceError& e) {
        throw DivergenceError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(bi + 1));
      }
      loss_sum += result.loss * static_cast<double>(ids.size());
    }
    EpochStats stats{epoch, loss_sum / static_cast<double>(fit.size()), 0.0};
    if (!validation.empty()) stats.validation_accuracy = accuracy_on(model, data, validation);
    history.epochs.push_back(stats);
    spdlog::debug("epoch {}: loss {:.6f}, validation accuracy {:.4f}", epoch, stats.train_loss,
                  stats.validation_accuracy);

    if (validation.empty()) {
      history.best_epoch = epoch;
      continue;
    }
    if (best.empty() || stats.validation_accuracy > history.best_validation_accuracy) {
      history.best_epoch = epoch;
      history.best_validation_accuracy = stats.validation_accuracy;
      best = snapshot(params);
      stale = 0;
    } else if (++stale >= config.patience) {
      history.stopped_early = epoch < config.epochs;
      break;
    }
  }
  if (!best.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  }
  return history;
}

std::vector<Prediction> predict_batch(Model& model, std::span<const EncodedDocument* const> docs,
                                      std::size_t batch_size) {
  if (batch_size == 0) throw Error("predict: batch_size must be positive");
  std::vector<Prediction> out;
  out.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); i += batch_size) {
    const auto chunk = docs.subspan(i, std::min(batch_size, docs.size() - i));
    const auto probs = nn::softmax(model.forward(make_batch(chunk), nn::Mode::Eval));
    for (std::size_t b = 0; b < chunk.size(); ++b) {
      const auto row = probs.row(b);
      out.push_back({best_class(row), std::vector<double>(row.begin(), row.end())});
    }
  }
  return out;
}

Prediction predict(Model& model, const EncodedDocument& doc) {
  const EncodedDocument* ptr = &doc;
  return predict_batch(model, std::span<const EncodedDocument* const>(&ptr, 1)).front();
}

}  // namespace triage::seq
