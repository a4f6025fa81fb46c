// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "support/fragments.hpp"
#include "triage/error.hpp"
#include "triage/nn/checkpoint.hpp"
#include "triage/nn/gradcheck.hpp"
#include "triage/nn/layers.hpp"
#include "triage/nn/optim.hpp"

using namespace triage;
using namespace triage::nn;

TEST_CASE("affine forward") {
  const Tensor x({1, 2}, {1, 2});
  Parameter w("w", Tensor({2, 2}, {1, 0, 0, 1}));
  Parameter b("b", Tensor({2}, {3, 4}));
  CHECK(affine_forward(x, w, b) == Tensor({1, 2}, {4, 6}));
  Parameter zero("b", Tensor({2}));
  CHECK(affine_forward(x, w, zero) == x);
  try {
    affine_forward(Tensor({1, 3}), w, b);
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("[1x3]") != std::string::npos);
  }
}

TEST_CASE("softmax") {
  CHECK(softmax(Tensor({1, 2})) == Tensor({1, 2}, {0.5, 0.5}));
  const auto big = softmax(Tensor({1, 2}, {1000, 0}));
  CHECK(big.all_finite());
  CHECK(big[0] == doctest::Approx(1.0));
  const auto third = softmax(Tensor({1, 2}, {std::log(2.0), 0}));
  CHECK(third[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(third[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("cross entropy") {
  const std::vector<ClassId> zero{0};
  CHECK(cross_entropy(Tensor({1, 2}, {1, 0}), zero).loss == 0.0);
  CHECK(cross_entropy(Tensor({1, 2}, {0.5, 0.5}), zero).loss == doctest::Approx(0.6931).epsilon(1e-4));
  const std::vector<ClassId> bad{2};
  CHECK_THROWS_AS(cross_entropy(Tensor({1, 2}, {0.5, 0.5}), bad), Error);
}

TEST_CASE("dropout") {
  const Tensor x({4, 5}, 2.0);
  CHECK(dropout(x, {0.5, Mode::Eval, 1}) == x);
  CHECK(dropout(x, {0.0, Mode::Train, 1}) == x);
  CHECK_THROWS_AS(dropout(x, {1.0, Mode::Train, 1}), Error);
  const auto y = dropout(Tensor({10000}, 1.0), {0.5, Mode::Train, 3});
  double mean = 0.0;
  for (double v : y.data()) {
    CHECK((v == 0.0 || v == 2.0));
    mean += v / 10000.0;
  }
  CHECK(std::abs(mean - 1.0) <= 0.02);
}

TEST_CASE("rmsprop") {
  Parameter a("a", Tensor({2}, {1.0, -1.0}));
  Parameter b("b", Tensor({2}, {1.0, -1.0}));
  a.grad = Tensor({2}, {1.0, 0.0});
  b.grad = Tensor({2}, {1.0, 0.0});
  RmsPropState state;
  state.learning_rate = 0.01;
  std::vector<Parameter*> params{&a, &b};
  rmsprop_step(params, state);
  CHECK(state.cache[0][0] == doctest::Approx(0.1));
  CHECK(1.0 - a.value[0] == doctest::Approx(0.0316227).epsilon(1e-6));
  CHECK(a.value[1] == -1.0);
  CHECK(a.value == b.value);
  CHECK(a.grad[0] == 0.0);

  a.grad[1] = std::nan("");
  const auto before = a.value;
  try {
    rmsprop_step(params, state);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("a") != std::string::npos);
  }
  CHECK(a.value == before);
}

TEST_CASE("gradient checks for the building blocks") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    testing::AffineFragment affine(3, 4, 2, seed);
    CHECK(gradient_check(affine).max_relative_error < 1e-4);
    testing::SoftmaxCrossEntropyFragment ce(4, 3, seed);
    CHECK(gradient_check(ce).max_relative_error < 1e-4);
    testing::DropoutFragment drop(3, 4, 0.3, seed);
    CHECK(gradient_check(drop).max_relative_error < 1e-4);
  }
}

TEST_CASE("checkpoint round trip") {
  Parameter a("layer.w", Tensor({2, 3}, {1, 2, 3, 4, 5, 6.5}));
  Parameter b("layer.b", Tensor({3}, {-1, 0, 1e-300}));
  std::vector<const Parameter*> saved{&a, &b};
  std::stringstream io;
  write_checkpoint(io, saved);
  CHECK(io.str().substr(0, 4) == "TBNK");
  const auto stored = read_checkpoint(io);
  REQUIRE(stored.size() == 2);
  CHECK(stored[0].name == "layer.w");

  Parameter a2("layer.w", Tensor({2, 3}));
  Parameter b2("layer.b", Tensor({3}));
  std::vector<Parameter*> targets{&b2, &a2};
  restore_parameters(targets, stored);
  CHECK(a2.value == a.value);
  CHECK(b2.value == b.value);

  Parameter wrong("layer.w", Tensor({3, 2}));
  std::vector<Parameter*> bad{&wrong};
  CHECK_THROWS_AS(restore_parameters(bad, stored), Error);
  Parameter missing("other", Tensor({1}));
  std::vector<Parameter*> absent{&missing};
  CHECK_THROWS_AS(restore_parameters(absent, stored), Error);

  std::istringstream garbage("XXXX");
  CHECK_THROWS_AS(read_checkpoint(garbage), Error);
  std::istringstream truncated(io.str().substr(0, 20));
  CHECK_THROWS_AS(read_checkpoint(truncated), Error);
}
