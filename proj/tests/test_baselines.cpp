// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "triage/baselines.hpp"
#include "triage/error.hpp"
#include "triage/rng.hpp"

using namespace triage;

namespace {

// V = 4: kernel 0, crash 1, button 2, color 3.
std::vector<LabeledVector> two_docs() {
  return {{SparseVector(4, {{0, 1.0}, {1, 1.0}}), 0}, {SparseVector(4, {{2, 1.0}, {3, 1.0}}), 1}};
}

// Disjoint keyword vocabularies: class c uses features [c*5, c*5+5).
std::vector<LabeledVector> separable(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LabeledVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    const ClassId c = static_cast<ClassId>(i % 2);
    std::vector<std::pair<std::size_t, double>> e;
    for (int k = 0; k < 3; ++k) e.emplace_back(static_cast<std::size_t>(c) * 5 + rng.below(5), 1.0);
    SparseVector v(10, e);
    const double norm = v.norm();
    for (auto& x : v.mutable_values()) x /= norm;
    out.push_back({v, c});
  }
  return out;
}

double accuracy_of(const LinearSvmModel& m, const std::vector<LabeledVector>& data) {
  std::size_t hit = 0;
  for (const auto& d : data) hit += svm_predict(m, d.features).label == d.label;
  return static_cast<double>(hit) / static_cast<double>(data.size());
}

}  // namespace

TEST_CASE("naive bayes smoothed likelihoods") {
  const auto m = nb_fit(two_docs(), 2, 1.0);
  CHECK(std::exp(m.class_log_prior()[0]) == doctest::Approx(0.5));
  CHECK(std::exp(m.class_log_prior()[1]) == doctest::Approx(0.5));
  CHECK(std::exp(m.token_log_likelihood()[0][0]) == doctest::Approx(1.0 / 3.0));
  CHECK(std::exp(m.token_log_likelihood()[0][2]) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("naive bayes prediction") {
  const auto m = nb_fit(two_docs(), 2, 1.0);
  // "kernel panic": panic is out of vocabulary here, kernel decides.
  const auto p = nb_predict(m, SparseVector(4, {{0, 1.0}}));
  CHECK(p.label == 0);
  CHECK(p.scores[0] - p.scores[1] == doctest::Approx(std::log(2.0)));
  const auto skewed = nb_fit(std::vector<LabeledVector>{{SparseVector(4), 1}, {SparseVector(4), 1}, {SparseVector(4), 0}}, 2, 1.0);
  CHECK(nb_predict(skewed, SparseVector(4)).label == 1);
}

TEST_CASE("naive bayes degenerate classes and smoothing limit") {
  const auto one_class = nb_fit(std::vector<LabeledVector>{two_docs()[0]}, 2, 1.0);
  CHECK(one_class.class_log_prior()[0] == 0.0);
  CHECK(one_class.class_log_prior()[1] == kEmptyClassLogPrior);
  CHECK(nb_predict(one_class, SparseVector(4, {{2, 5.0}})).label == 0);
  const auto smooth = nb_fit(two_docs(), 2, 1e9);
  for (double l : smooth.token_log_likelihood()[0]) CHECK(std::exp(l) == doctest::Approx(0.25));
  CHECK_THROWS_AS(nb_fit(two_docs(), 2, 0.0), Error);
}

TEST_CASE("naive bayes json round trip") {
  const auto m = nb_fit(two_docs(), 2, 1.0);
  const auto back = NaiveBayesModel::from_json(m.to_json("h"));
  CHECK(back.token_log_likelihood() == m.token_log_likelihood());
  CHECK(back.class_log_prior() == m.class_log_prior());
}

TEST_CASE("svm separates disjoint vocabularies") {
  const auto train = separable(40, 1);
  const auto m = svm_fit(train, 2, 1e-4, 20, 5);
  CHECK(accuracy_of(m, train) == 1.0);
  CHECK(accuracy_of(m, separable(40, 2)) >= 0.95);
}

TEST_CASE("svm determinism and degenerate inputs") {
  const auto train = separable(20, 3);
  const auto a = svm_fit(train, 2, 1e-3, 5, 9);
  const auto b = svm_fit(train, 2, 1e-3, 5, 9);
  CHECK(a.weights() == b.weights());
  CHECK(a.bias() == b.bias());

  const auto single = svm_fit(std::vector<LabeledVector>{train[1]}, 2, 1e-3, 5, 1);
  CHECK(svm_predict(single, train[1].features).label == train[1].label);

  const auto zero = svm_predict(a, SparseVector(10));
  CHECK(zero.scores == a.bias());
  CHECK(zero.label == argmax(a.bias()));
  CHECK_THROWS_AS(svm_predict(a, SparseVector(3)), Error);

  auto bad = train;
  bad[0].features.mutable_values()[0] = std::nan("");
  CHECK_THROWS_AS(svm_fit(bad, 2, 1e-3, 1, 1), Error);
}

TEST_CASE("svm objective decreases over epochs") {
  SvmTrace trace;
  svm_fit(separable(40, 4), 2, 1e-3, 10, 2, &trace);
  REQUIRE(trace.objective.size() == 10);
  CHECK(trace.objective.back() < trace.objective.front());
}

TEST_CASE("argmax ties go to the smaller index") {
  CHECK(argmax(std::vector<double>{1.0, 3.0, 3.0}) == 1);
}
