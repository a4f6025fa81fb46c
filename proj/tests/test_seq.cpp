// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "support/fragments.hpp"
#include "triage/bench/synthetic.hpp"
#include "triage/error.hpp"
#include "triage/nn/gradcheck.hpp"
#include "triage/seq/trainer.hpp"

using namespace triage;
using namespace triage::seq;
using nn::Tensor;

namespace {

constexpr std::array<Architecture, 4> kArchitectures{Architecture::EmbeddingBag, Architecture::DeepTriage,
                                                     Architecture::Han, Architecture::Proposed};

struct KeywordTask {
  std::vector<LabeledDocument> train;
  std::vector<LabeledDocument> test;
  EmbeddingTable table;
  std::size_t classes = 0;
};

KeywordTask keyword_task() {
  const auto corpus = bench::make_keyword_corpus({});
  const auto split = make_split(corpus.dataset, corpus.field, 0.15, 3);
  const auto& classes = corpus.dataset.classes(corpus.field);
  PipelineConfig pipeline;
  std::vector<ProcessedDocument> train_docs;
  for (const auto& id : split.train) train_docs.push_back(preprocess_document(corpus.dataset.document(id), pipeline));
  const auto vocab = build_vocabulary(train_docs, 1, 50000);
  KeywordTask task;
  task.classes = classes.size();
  std::vector<EncodedDocument> encoded;
  for (std::size_t i = 0; i < train_docs.size(); ++i) {
    encoded.push_back(encode(train_docs[i], vocab));
    task.train.push_back({encoded.back(), classes.id(corpus.dataset.document(split.train[i]).labels.at(corpus.field))});
  }
  for (const auto& id : split.test) {
    const auto& doc = corpus.dataset.document(id);
    task.test.push_back({encode(preprocess_document(doc, pipeline), vocab), classes.id(doc.labels.at(corpus.field))});
  }
  SkipGramConfig sg;
  sg.dim = 32;
  task.table = train_skipgram(encoded, vocab, sg);
  return task;
}

const KeywordTask& shared_task() {
  static const KeywordTask task = keyword_task();
  return task;
}

ModelSpec small_proposed(std::size_t classes) {
  ModelSpec spec;
  spec.architecture = Architecture::Proposed;
  spec.block_sizes = {8, 16};
  spec.shallow_size = 8;
  spec.fc_width = 16;
  spec.num_classes = classes;
  return spec;
}

Tensor logits_for(Model& model, const std::vector<EncodedDocument>& docs) {
  std::vector<const EncodedDocument*> ptrs;
  for (const auto& d : docs) ptrs.push_back(&d);
  return model.forward(make_batch(ptrs), nn::Mode::Eval);
}

}  // namespace

TEST_CASE("gru cell zero-weight cases") {
  Rng rng(1);
  GruCell cell("c", 3, 2, rng);
  std::vector<Parameter*> params;
  cell.collect(params);
  for (auto* p : params) p->value.fill(0.0);
  const Tensor x({1, 3}, {1, 2, 3});
  CHECK(gru_step(cell, x, Tensor({1, 2}, {0.4, -2})) == Tensor({1, 2}, {0.2, -1}));
  CHECK(gru_step(cell, x, Tensor({1, 2})) == Tensor({1, 2}));
  CHECK_THROWS_AS(gru_step(cell, Tensor({1, 2}), Tensor({1, 2})), ShapeError);
}

TEST_CASE("gru encoder contracts") {
  Rng rng(2);
  GruEncoder enc("e", 3, 4, false, rng);
  const auto inputs = testing::random_tensor({1, 2, 3}, rng);
  const auto one = enc.forward(inputs, SequenceMask(1, 2));
  Tensor x({2, 3});
  std::copy(inputs.data().begin(), inputs.data().end(), x.data().begin());
  Rng rng2(2);
  GruCell cell("e", 3, 4, rng2);
  CHECK(one.final_state == gru_step(cell, x, Tensor({2, 4})));

  // Trailing padded steps leave the final state alone.
  auto longer = Tensor({3, 2, 3});
  std::copy(inputs.data().begin(), inputs.data().end(), longer.data().begin());
  for (std::size_t i = inputs.size(); i < longer.size(); ++i) longer[i] = 5.0;
  SequenceMask mask(3, 2);
  for (std::size_t t = 1; t < 3; ++t) {
    for (std::size_t b = 0; b < 2; ++b) mask.set(t, b, false);
  }
  CHECK(enc.forward(longer, mask).final_state == one.final_state);

  const auto empty = enc.forward(longer, SequenceMask(3, 2, false));
  for (double v : empty.outputs.data()) CHECK(v == 0.0);

  Rng rng3(3);
  GruEncoder bi("b", 3, 4, true, rng3);
  CHECK(bi.output_dim() == 8);
  CHECK(bi.forward(longer, mask).outputs.dim(2) == 8);
}

TEST_CASE("attention pool contracts") {
  Rng rng(4);
  AttentionPool pool("a", 3, false, rng);
  Tensor same({4, 1, 3});
  for (std::size_t t = 0; t < 4; ++t) {
    same.at(t, 0, 0) = 1.0;
    same.at(t, 0, 1) = -2.0;
    same.at(t, 0, 2) = 0.5;
  }
  const auto r = pool.forward(same, SequenceMask(4, 1));
  CHECK(r.pooled[0] == doctest::Approx(1.0));
  CHECK(r.pooled[1] == doctest::Approx(-2.0));
  const auto single = testing::random_tensor({1, 2, 3}, rng);
  const auto s = pool.forward(single, SequenceMask(1, 2));
  CHECK(s.weights == Tensor({1, 2}, {1.0, 1.0}));
  CHECK(s.pooled == Tensor({2, 3}, std::vector<double>(single.data().begin(), single.data().end())));
  CHECK_THROWS_AS(pool.forward(single, SequenceMask(1, 2, false)), Error);
}

TEST_CASE("gradient checks for recurrent and attention fragments") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    testing::GruCellFragment cell(2, 3, 4, seed, 3);
    CHECK(nn::gradient_check(cell).max_relative_error < 1e-4);
    testing::GruEncoderFragment encoder(4, 3, 2, 3, seed % 2 == 0, seed);
    CHECK(nn::gradient_check(encoder).max_relative_error < 1e-4);
    testing::AttentionFragment attention(4, 3, 3, seed % 2 == 1, seed);
    CHECK(nn::gradient_check(attention).max_relative_error < 1e-4);
  }
}

TEST_CASE("whole-model gradients in both modes") {
  for (auto arch : kArchitectures) {
    for (auto mode : {nn::Mode::Eval, nn::Mode::Train}) {
      testing::ModelFragment fragment(arch, mode, 7);
      CAPTURE(to_string(arch));
      CHECK(nn::gradient_check(fragment).max_relative_error < 1e-4);
    }
  }
}

TEST_CASE("document vector sizes") {
  const auto table = testing::random_table(10, 4, 1);
  ModelSpec spec;
  spec.block_sizes = {32, 64, 128};
  spec.shallow_size = 64;
  CHECK(build_model(spec, table, 1)->document_dim() == 288);
  spec.fc_width = 0;
  CHECK(build_model(spec, table, 1)->document_dim() == 288);
  spec.architecture = Architecture::Han;
  spec.block_sizes = {64};
  CHECK(build_model(spec, table, 1)->document_dim() == 64);
  spec.architecture = Architecture::EmbeddingBag;
  CHECK(build_model(spec, table, 1)->document_dim() == 4);
  CHECK_THROWS_AS(parse_architecture("lstm"), Error);
  CHECK(parse_architecture(to_string(Architecture::DeepTriage)) == Architecture::DeepTriage);
}

TEST_CASE("pad-only documents take the OOV path") {
  const auto table = testing::random_table(10, 4, 2);
  for (auto arch : kArchitectures) {
    auto spec = testing::micro_spec(arch);
    auto model = build_model(spec, table, 3);
    const std::vector<EncodedDocument> pad_only{{{Vocabulary::kPad, Vocabulary::kPad}}};
    const std::vector<EncodedDocument> oov{{{Vocabulary::kOov}}};
    const std::vector<EncodedDocument> empty{{}};
    CHECK(logits_for(*model, pad_only) == logits_for(*model, oov));
    CHECK(logits_for(*model, empty) == logits_for(*model, oov));
  }
}

TEST_CASE("spec and config serialization") {
  auto spec = small_proposed(3);
  spec.attention_projection = true;
  const auto back = spec_from_json(spec_to_json(spec));
  CHECK(spec_to_json(back) == spec_to_json(spec));
  spec.dropout = 1.0;
  CHECK_THROWS_AS(spec.validate(), Error);

  TrainConfig config;
  config.epochs = 7;
  config.optimizer.learning_rate = 0.5;
  const auto cfg = train_config_from_json(train_config_to_json(config));
  CHECK(cfg.epochs == 7);
  CHECK(cfg.optimizer.learning_rate == 0.5);
  CHECK_THROWS_AS(train_config_from_json({{"batch_size", 0}}), Error);
}

TEST_CASE("training on the separable corpus") {
  const auto& task = shared_task();
  auto model = build_model(small_proposed(task.classes), task.table, 11);
  TrainConfig config;
  config.epochs = 30;
  const auto history = train(*model, task.train, config);
  REQUIRE_FALSE(history.epochs.empty());
  CHECK(history.epochs.front().train_loss < std::log(static_cast<double>(task.classes)) + 0.05);
  CHECK(history.best_validation_accuracy == history.epochs[history.best_epoch - 1].validation_accuracy);

  std::size_t hits = 0;
  std::vector<const EncodedDocument*> ptrs;
  for (const auto& d : task.test) ptrs.push_back(&d.tokens);
  const auto preds = predict_batch(*model, ptrs);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    hits += preds[i].label == task.test[i].label;
    double sum = 0.0;
    for (double p : preds[i].probabilities) sum += p;
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
  CHECK(static_cast<double>(hits) / static_cast<double>(preds.size()) >= 0.95);
  const auto again = predict(*model, task.test[0].tokens);
  CHECK(again.probabilities == preds[0].probabilities);
  CHECK(predict(*model, EncodedDocument{}).probabilities.size() == task.classes);
}

TEST_CASE("training is deterministic and stops early") {
  const auto& task = shared_task();
  ModelSpec spec;
  spec.architecture = Architecture::EmbeddingBag;
  spec.block_sizes = {};
  spec.num_classes = task.classes;
  TrainConfig config;
  config.epochs = 40;
  config.patience = 2;
  config.optimizer.learning_rate = 1e-2;
  auto a = build_model(spec, task.table, 5);
  auto b = build_model(spec, task.table, 5);
  const auto ha = train(*a, task.train, config);
  const auto hb = train(*b, task.train, config);
  CHECK(ha == hb);
  CHECK(ha.stopped_early);
  CHECK(ha.epochs.size() == ha.best_epoch + config.patience);
}

TEST_CASE("divergence is reported with context") {
  const auto& task = shared_task();
  ModelSpec spec;
  spec.architecture = Architecture::EmbeddingBag;
  spec.block_sizes = {};
  spec.num_classes = task.classes;
  spec.fine_tune_embeddings = true;
  TrainConfig config;
  config.optimizer.learning_rate = 1e308;
  auto model = build_model(spec, task.table, 5);
  try {
    train(*model, task.train, config);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}
