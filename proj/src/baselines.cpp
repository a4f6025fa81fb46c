// SPDX-License-Identifier: Apache-2.0
#include "triage/baselines.hpp"

#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "triage/error.hpp"
#include "triage/rng.hpp"

namespace triage {

ClassId argmax(std::span<const double> scores) {
  if (scores.empty()) throw Error("argmax of an empty score list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return static_cast<ClassId>(best);
}

// ---- Naive Bayes ---------------------------------------------------------

NaiveBayesModel::NaiveBayesModel(std::vector<double> class_log_prior,
                                 std::vector<std::vector<double>> token_log_likelihood,
                                 double alpha)
    : class_log_prior_(std::move(class_log_prior)),
      token_log_likelihood_(std::move(token_log_likelihood)),
      alpha_(alpha) {
  if (class_log_prior_.size() != token_log_likelihood_.size()) {
    throw ShapeError("naive bayes: prior and likelihood class counts differ");
  }
}

NaiveBayesModel nb_fit(std::span<const LabeledVector> train, std::size_t num_classes, double alpha) {
  if (train.empty()) throw Error("nb_fit: empty training set");
  if (!(alpha > 0.0)) throw Error("nb_fit: alpha must be positive");
  if (num_classes < 1) throw Error("nb_fit: need at least one class");
  const std::size_t dim = train.front().features.dim();

  std::vector<double> doc_count(num_classes, 0.0);
  std::vector<std::vector<double>> token_count(num_classes, std::vector<double>(dim, 0.0));
  for (const auto& example : train) {
    if (example.label < 0 || static_cast<std::size_t>(example.label) >= num_classes) {
      throw Error("nb_fit: class id out of range");
    }
    if (example.features.dim() != dim) throw ShapeError("nb_fit: inconsistent feature dims");
    const auto c = static_cast<std::size_t>(example.label);
    doc_count[c] += 1.0;
    const auto& idx = example.features.indices();
    const auto& val = example.features.values();
    for (std::size_t i = 0; i < idx.size(); ++i) token_count[c][idx[i]] += val[i];
  }

  const double n = static_cast<double>(train.size());
  std::vector<double> prior(num_classes);
  std::vector<std::vector<double>> likelihood(num_classes, std::vector<double>(dim));
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (doc_count[c] == 0.0) {
      spdlog::warn("naive bayes: class {} has no training documents; it will never be predicted", c);
      prior[c] = kEmptyClassLogPrior;
    } else {
      prior[c] = std::log(doc_count[c] / n);
    }
    const double total = std::accumulate(token_count[c].begin(), token_count[c].end(), 0.0);
    const double denom = std::log(total + alpha * static_cast<double>(dim));
    for (std::size_t t = 0; t < dim; ++t) likelihood[c][t] = std::log(token_count[c][t] + alpha) - denom;
  }
  return NaiveBayesModel(std::move(prior), std::move(likelihood), alpha);
}

ScoredPrediction nb_predict(const NaiveBayesModel& model, const SparseVector& counts) {
  if (counts.dim() != model.dim()) {
    throw ShapeError("nb_predict: feature dim " + std::to_string(counts.dim()) +
                     " does not match model dim " + std::to_string(model.dim()));
  }
  ScoredPrediction out;
  out.scores = model.class_log_prior();
  for (std::size_t c = 0; c < model.num_classes(); ++c) {
    const auto& ll = model.token_log_likelihood()[c];
    for (std::size_t i = 0; i < counts.nnz(); ++i) {
      out.scores[c] += counts.values()[i] * ll[counts.indices()[i]];
    }
  }
  out.label = argmax(out.scores);
  return out;
}

nlohmann::json NaiveBayesModel::to_json(const std::string& vocab_hash) const {
  return {{"version", kFormatVersion},
          {"kind", "naive_bayes"},
          {"vocab_hash", vocab_hash},
          {"alpha", alpha_},
          {"class_log_prior", class_log_prior_},
          {"token_log_likelihood", token_log_likelihood_}};
}

NaiveBayesModel NaiveBayesModel::from_json(const nlohmann::json& j) {
  if (j.value("version", 0) != kFormatVersion || j.value("kind", "") != "naive_bayes") {
    throw Error("not a version-1 naive bayes model");
  }
  return NaiveBayesModel(j.at("class_log_prior").get<std::vector<double>>(),
                         j.at("token_log_likelihood").get<std::vector<std::vector<double>>>(),
                         j.at("alpha").get<double>());
}

// ---- Linear SVM ----------------------------------------------------------

LinearSvmModel::LinearSvmModel(std::vector<std::vector<double>> weights, std::vector<double> bias,
                               double lambda, std::size_t epochs)
    : weights_(std::move(weights)), bias_(std::move(bias)), lambda_(lambda), epochs_(epochs) {
  if (weights_.size() != bias_.size()) throw ShapeError("svm: weight and bias counts differ");
}

double svm_objective(std::span<const double> weights, double bias, double lambda,
                     std::span<const LabeledVector> data, ClassId positive) {
  double sq = bias * bias;
  for (double w : weights) sq += w * w;
  double hinge = 0.0;
  for (const auto& example : data) {
    const double y = example.label == positive ? 1.0 : -1.0;
    hinge += std::max(0.0, 1.0 - y * (example.features.dot(weights) + bias));
  }
  return 0.5 * lambda * sq + hinge / static_cast<double>(data.size());
}

namespace {

// w = scale * v, with the bias stored as v's last coordinate.
class ScaledWeights {
 public:
  explicit ScaledWeights(std::size_t dim) : v_(dim + 1, 0.0) {}

  double margin(const SparseVector& x) const {
    double sum = v_.back();
    for (std::size_t i = 0; i < x.nnz(); ++i) sum += x.values()[i] * v_[x.indices()[i]];
    return scale_ * sum;
  }

  void shrink(double factor) {
    if (factor <= 0.0) {
      std::fill(v_.begin(), v_.end(), 0.0);
      scale_ = 1.0;
      sq_norm_ = 0.0;
      return;
    }
    scale_ *= factor;
    if (scale_ < 1e-9) renormalize();
  }

  void add(const SparseVector& x, double step) {
    const double s = step / scale_;
    for (std::size_t i = 0; i < x.nnz(); ++i) {
      double& vi = v_[x.indices()[i]];
      const double next = vi + s * x.values()[i];
      sq_norm_ += next * next - vi * vi;
      vi = next;
    }
    double& b = v_.back();
    const double next = b + s;
    sq_norm_ += next * next - b * b;
    b = next;
  }

  double norm() const { return scale_ * std::sqrt(std::max(sq_norm_, 0.0)); }

  std::vector<double> weights() const {
    std::vector<double> w(v_.size() - 1);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = scale_ * v_[i];
    return w;
  }
  double bias() const { return scale_ * v_.back(); }

 private:
  void renormalize() {
    sq_norm_ = 0.0;
    for (double& x : v_) {
      x *= scale_;
      sq_norm_ += x * x;
    }
    scale_ = 1.0;
  }

  std::vector<double> v_;
  double scale_ = 1.0;
  double sq_norm_ = 0.0;
};

}  // namespace

LinearSvmModel svm_fit(std::span<const LabeledVector> train, std::size_t num_classes, double lambda,
                       std::size_t epochs, std::uint64_t seed, SvmTrace* trace) {
  if (train.empty()) throw Error("svm_fit: empty training set");
  if (!(lambda > 0.0)) throw Error("svm_fit: lambda must be positive");
  if (num_classes < 1) throw Error("svm_fit: need at least one class");
  const std::size_t dim = train.front().features.dim();
  for (const auto& example : train) {
    if (example.features.dim() != dim) throw ShapeError("svm_fit: inconsistent feature dims");
    if (example.label < 0 || static_cast<std::size_t>(example.label) >= num_classes) {
      throw Error("svm_fit: class id out of range");
    }
    for (double v : example.features.values()) {
      if (!std::isfinite(v)) throw Error("svm_fit: non-finite feature value");
    }
  }

  const double radius = 1.0 / std::sqrt(lambda);
  std::vector<std::vector<double>> weights(num_classes);
  std::vector<double> bias(num_classes);
  if (trace) trace->objective.assign(epochs, 0.0);

  std::vector<std::size_t> order(train.size());
  for (std::size_t c = 0; c < num_classes; ++c) {
    const auto positive = static_cast<ClassId>(c);
    Rng rng(Rng::derive(seed, c));
    ScaledWeights w(dim);
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng.shuffle(std::span<std::size_t>(order));
      for (std::size_t i : order) {
        ++t;
        const auto& x = train[i].features;
        const double y = train[i].label == positive ? 1.0 : -1.0;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const bool violated = y * w.margin(x) < 1.0;
        w.shrink(1.0 - eta * lambda);
        if (violated) w.add(x, eta * y);
        const double norm = w.norm();
        if (norm > radius) w.shrink(radius / norm);
      }
      if (trace) {
        trace->objective[epoch] += svm_objective(w.weights(), w.bias(), lambda, train, positive) /
                                   static_cast<double>(num_classes);
      }
    }
    weights[c] = w.weights();
    bias[c] = w.bias();
  }
  return LinearSvmModel(std::move(weights), std::move(bias), lambda, epochs);
}

ScoredPrediction svm_predict(const LinearSvmModel& model, const SparseVector& x) {
  if (x.dim() != model.dim()) {
    throw ShapeError("svm_predict: feature dim " + std::to_string(x.dim()) +
                     " does not match model dim " + std::to_string(model.dim()));
  }
  ScoredPrediction out;
  out.scores.resize(model.num_classes());
  for (std::size_t c = 0; c < model.num_classes(); ++c) {
    out.scores[c] = x.dot(model.weights()[c]) + model.bias()[c];
  }
  out.label = argmax(out.scores);
  return out;
}

nlohmann::json LinearSvmModel::to_json(const std::string& vocab_hash) const {
  return {{"version", kFormatVersion}, {"kind", "linear_svm"}, {"vocab_hash", vocab_hash},
          {"lambda", lambda_},         {"epochs", epochs_},    {"weights", weights_},
          {"bias", bias_}};
}

LinearSvmModel LinearSvmModel::from_json(const nlohmann::json& j) {
  if (j.value("version", 0) != kFormatVersion || j.value("kind", "") != "linear_svm") {
    throw Error("not a version-1 linear svm model");
  }
  return LinearSvmModel(j.at("weights").get<std::vector<std::vector<double>>>(),
                        j.at("bias").get<std::vector<double>>(), j.at("lambda").get<double>(),
                        j.at("epochs").get<std::size_t>());
}

}  // namespace triage
