// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/corpus.hpp"

namespace triage::bench {

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0);
  /// Throws unless `counts` is square.
  static ConfusionMatrix from_counts(std::vector<std::vector<std::uint64_t>> counts);

  void add(ClassId truth, ClassId predicted, std::uint64_t n = 1);
  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth][predicted]; }
  std::size_t classes() const noexcept { return counts_.size(); }
  std::uint64_t total() const noexcept;
  std::uint64_t row_sum(std::size_t c) const;
  std::uint64_t col_sum(std::size_t c) const;
  const std::vector<std::vector<std::uint64_t>>& counts() const noexcept { return counts_; }

 private:
  std::vector<std::vector<std::uint64_t>> counts_;
};

ConfusionMatrix confusion_matrix(std::span<const ClassId> truth, std::span<const ClassId> predicted,
                                 std::size_t classes);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;

  bool operator==(const ClassMetrics&) const = default;
};

struct Metrics {
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  std::vector<ClassMetrics> per_class;

  bool operator==(const Metrics&) const = default;
};

/// trace / total. Throws on an empty matrix.
double accuracy(const ConfusionMatrix& cm);
/// Support-weighted mean of per-class F1, with 0/0 taken as 0.
double weighted_f1(const ConfusionMatrix& cm);
Metrics compute_metrics(const ConfusionMatrix& cm);

nlohmann::json metrics_to_json(const Metrics& m, const ClassSet& classes);

}  // namespace triage::bench
