// SPDX-License-Identifier: Apache-2.0
#include "triage/bench/metrics.hpp"

#include <numeric>

#include "triage/error.hpp"

namespace triage::bench {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : counts_(classes, std::vector<std::uint64_t>(classes, 0)) {}

ConfusionMatrix ConfusionMatrix::from_counts(std::vector<std::vector<std::uint64_t>> counts) {
  for (const auto& row : counts) {
    if (row.size() != counts.size()) throw ShapeError("confusion matrix must be square");
  }
  ConfusionMatrix cm;
  cm.counts_ = std::move(counts);
  return cm;
}

void ConfusionMatrix::add(ClassId truth, ClassId predicted, std::uint64_t n) {
  const auto C = static_cast<ClassId>(classes());
  if (truth < 0 || truth >= C || predicted < 0 || predicted >= C) {
    throw Error("confusion matrix: class id outside [0, " + std::to_string(C) + ")");
  }
  counts_[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)] += n;
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t t = 0;
  for (const auto& row : counts_) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t c) const {
  return std::accumulate(counts_.at(c).begin(), counts_.at(c).end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t c) const {
  std::uint64_t s = 0;
  for (const auto& row : counts_) s += row.at(c);
  return s;
}

ConfusionMatrix confusion_matrix(std::span<const ClassId> truth, std::span<const ClassId> predicted,
                                 std::size_t classes) {
  if (truth.size() != predicted.size()) throw ShapeError("confusion matrix: length mismatch");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

namespace {

std::uint64_t checked_total(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw Error("metrics of an empty confusion matrix");
  return total;
}

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double accuracy(const ConfusionMatrix& cm) {
  const auto total = checked_total(cm);
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) trace += cm.at(c, c);
  return ratio(trace, total);
}

Metrics compute_metrics(const ConfusionMatrix& cm) {
  const auto total = checked_total(cm);
  Metrics m;
  m.accuracy = accuracy(cm);
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    ClassMetrics k;
    k.support = cm.row_sum(c);
    k.precision = ratio(cm.at(c, c), cm.col_sum(c));
    k.recall = ratio(cm.at(c, c), k.support);
    k.f1 = k.precision + k.recall == 0.0 ? 0.0 : 2.0 * k.precision * k.recall / (k.precision + k.recall);
    m.weighted_f1 += ratio(k.support, total) * k.f1;
    m.per_class.push_back(k);
  }
  return m;
}

double weighted_f1(const ConfusionMatrix& cm) { return compute_metrics(cm).weighted_f1; }

nlohmann::json metrics_to_json(const Metrics& m, const ClassSet& classes) {
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t c = 0; c < m.per_class.size(); ++c) {
    const auto& k = m.per_class[c];
    per_class.push_back({{"class", classes.name(static_cast<ClassId>(c))},
                         {"precision", k.precision},
                         {"recall", k.recall},
                         {"f1", k.f1},
                         {"support", k.support}});
  }
  return {{"accuracy", m.accuracy}, {"weighted_f1", m.weighted_f1}, {"per_class", per_class}};
}

}  // namespace triage::bench
