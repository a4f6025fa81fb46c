// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/corpus.hpp"
#include "triage/features.hpp"

namespace triage {

struct LabeledVector {
  SparseVector features;
  ClassId label = 0;
};

struct ScoredPrediction {
  ClassId label = 0;
  std::vector<double> scores;
};

/// Index of the largest score; ties go to the smaller index.
ClassId argmax(std::span<const double> scores);

/// Finite stand-in for log(0) used as the prior of classes without
/// training documents.
inline constexpr double kEmptyClassLogPrior = -1e300;

class NaiveBayesModel {
 public:
  static constexpr int kFormatVersion = 1;

  NaiveBayesModel() = default;
  NaiveBayesModel(std::vector<double> class_log_prior,
                  std::vector<std::vector<double>> token_log_likelihood, double alpha);

  std::size_t num_classes() const noexcept { return class_log_prior_.size(); }
  std::size_t dim() const noexcept {
    return token_log_likelihood_.empty() ? 0 : token_log_likelihood_.front().size();
  }
  double alpha() const noexcept { return alpha_; }
  const std::vector<double>& class_log_prior() const noexcept { return class_log_prior_; }
  /// [class][token] = log P(token | class).
  const std::vector<std::vector<double>>& token_log_likelihood() const noexcept {
    return token_log_likelihood_;
  }

  nlohmann::json to_json(const std::string& vocab_hash) const;
  static NaiveBayesModel from_json(const nlohmann::json& j);

 private:
  std::vector<double> class_log_prior_;
  std::vector<std::vector<double>> token_log_likelihood_;
  double alpha_ = 1.0;
};

/// Multinomial NB with additive smoothing over raw term counts.
NaiveBayesModel nb_fit(std::span<const LabeledVector> train, std::size_t num_classes, double alpha);
ScoredPrediction nb_predict(const NaiveBayesModel& model, const SparseVector& counts);

class LinearSvmModel {
 public:
  static constexpr int kFormatVersion = 1;

  LinearSvmModel() = default;
  LinearSvmModel(std::vector<std::vector<double>> weights, std::vector<double> bias,
                 double lambda, std::size_t epochs);

  std::size_t num_classes() const noexcept { return weights_.size(); }
  std::size_t dim() const noexcept { return weights_.empty() ? 0 : weights_.front().size(); }
  const std::vector<std::vector<double>>& weights() const noexcept { return weights_; }
  const std::vector<double>& bias() const noexcept { return bias_; }
  double lambda() const noexcept { return lambda_; }
  std::size_t epochs() const noexcept { return epochs_; }

  nlohmann::json to_json(const std::string& vocab_hash) const;
  static LinearSvmModel from_json(const nlohmann::json& j);

 private:
  std::vector<std::vector<double>> weights_;
  std::vector<double> bias_;
  double lambda_ = 1e-4;
  std::size_t epochs_ = 0;
};

/// Per-epoch one-vs-rest objective, averaged over classes.
struct SvmTrace {
  std::vector<double> objective;
};

/// One-vs-rest hinge loss, Pegasos subgradient steps of size 1/(lambda t)
/// with projection onto the ball of radius 1/sqrt(lambda). The bias is an
/// extra weight on a constant feature of value 1.
LinearSvmModel svm_fit(std::span<const LabeledVector> train, std::size_t num_classes,
                       double lambda, std::size_t epochs, std::uint64_t seed,
                       SvmTrace* trace = nullptr);
ScoredPrediction svm_predict(const LinearSvmModel& model, const SparseVector& x);

/// lambda/2 (|w|^2 + b^2) + mean hinge, for the binary problem of `positive`.
double svm_objective(std::span<const double> weights, double bias, double lambda,
                     std::span<const LabeledVector> data, ClassId positive);

}  // namespace triage
