// SPDX-License-Identifier: Apache-2.0
// Reference computations written directly from the defining formulas,
// sharing no code with the library beyond its data types.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace triage::oracle {

/// The documented generator: splitmix64 seeding, xorshift64* (12, 25, 27)
/// with multiplier 0x2545F4914F6CDD1D, bounded draws by 128-bit multiply.
class Xorshift {
 public:
  explicit Xorshift(std::uint64_t seed);
  std::uint64_t next();
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t s_;
};

/// Fisher-Yates from the last position; returns the permuted copy.
std::vector<std::string> shuffled(std::vector<std::string> items, std::uint64_t seed);

/// {train, test}: test is the first round(fraction * n) of the shuffled ids.
std::pair<std::vector<std::string>, std::vector<std::string>> split(std::vector<std::string> labeled_ids,
                                                                    double fraction, std::uint64_t seed);

/// log P(c) + sum over token occurrences of log P(x_i | c), with
/// P(x | c) = (n(x, c) + alpha) / (n(c) + alpha V), evaluated token by token.
/// Classes without documents get `empty_prior`.
std::vector<double> nb_log_scores(const std::vector<std::vector<int>>& train_docs,
                                  const std::vector<int>& train_labels, int classes, int vocab,
                                  double alpha, const std::vector<int>& query, double empty_prior);

/// idf(t) = ln((1 + N) / (1 + df(t))) + 1; score = count * idf, L2-normalized.
std::vector<double> tfidf(const std::vector<std::vector<int>>& corpus, int vocab, const std::vector<int>& doc);

/// Accuracy and support-weighted F1 recounted from per-document pairs.
std::pair<double, double> recount(const std::vector<std::pair<int, int>>& truth_predicted, int classes);

}  // namespace triage::oracle
