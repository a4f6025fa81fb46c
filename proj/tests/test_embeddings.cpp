// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "triage/bench/synthetic.hpp"
#include "triage/embeddings.hpp"
#include "triage/error.hpp"

using namespace triage;

namespace {

struct TopicData {
  bench::SyntheticCorpus corpus;
  Vocabulary vocab;
  std::vector<EncodedDocument> encoded;
};

TopicData topic_data() {
  TopicData t{bench::make_topic_corpus({}), {}, {}};
  PipelineConfig pipeline;
  std::vector<ProcessedDocument> docs;
  for (const auto& d : t.corpus.dataset.documents()) docs.push_back(preprocess_document(d, pipeline));
  t.vocab = build_vocabulary(docs, 1, 1000);
  for (const auto& d : docs) t.encoded.push_back(encode(d, t.vocab));
  return t;
}

SkipGramConfig small_config() {
  SkipGramConfig c;
  c.dim = 16;
  c.epochs = 30;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("skip-gram separates topics and lowers its loss") {
  const auto t = topic_data();
  SkipGramReport report;
  // At the default rate the loss settles inside the first epoch on this
  // tiny corpus; a smaller rate keeps the descent visible across epochs.
  auto config = small_config();
  config.learning_rate = 0.0025;
  const auto table = train_skipgram(t.encoded, t.vocab, config, &report);
  CHECK(table.vocab_size() == t.vocab.size());
  CHECK(table.dim() == 16);
  CHECK(table.vocab_hash == t.vocab.hash());
  REQUIRE(report.epoch_loss.size() == 30);
  CHECK(report.epoch_loss.back() < report.epoch_loss.front());

  double intra = 0, inter = 0;
  int ni = 0, nx = 0;
  const auto& a = t.corpus.vocabularies[0];
  const auto& b = t.corpus.vocabularies[1];
  const auto row = [&](const std::string& w) { return table.matrix.row(static_cast<std::size_t>(t.vocab.id(w))); };
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j, ++ni) intra += cosine_similarity(row(a[i]), row(a[j]));
    for (const auto& w : b) {
      inter += cosine_similarity(row(a[i]), row(w));
      ++nx;
    }
  }
  CHECK(intra / ni > inter / nx);
  for (double v : table.matrix.row(0)) CHECK(v == 0.0);
}

TEST_CASE("skip-gram determinism and errors") {
  const auto t = topic_data();
  auto config = small_config();
  config.epochs = 2;
  CHECK(train_skipgram(t.encoded, t.vocab, config).matrix == train_skipgram(t.encoded, t.vocab, config).matrix);
  config.negatives = t.vocab.size();
  CHECK_THROWS_AS(train_skipgram(t.encoded, t.vocab, config), Error);
  CHECK_THROWS_AS(train_skipgram(std::vector<EncodedDocument>{}, t.vocab, small_config()), Error);
  config.window = 0;
  CHECK_THROWS_AS(config.validate(), Error);
}

TEST_CASE("negative sampler follows count^0.75") {
  const std::vector<std::uint64_t> counts{0, 0, 16, 1, 81};
  const NegativeSampler sampler(counts);
  const double z = 8.0 + 1.0 + 27.0;
  CHECK(sampler.probability(2) == doctest::Approx(8.0 / z));
  CHECK(sampler.probability(0) == 0.0);
  Rng rng(1);
  std::vector<double> hits(counts.size());
  for (int i = 0; i < 200000; ++i) hits[static_cast<std::size_t>(sampler.sample(rng))] += 1.0 / 200000;
  CHECK(hits[0] == 0.0);
  CHECK(hits[4] == doctest::Approx(27.0 / z).epsilon(0.02));
}

TEST_CASE("lookup") {
  EmbeddingTable table{nn::Tensor({4, 2}, {0, 0, 1, 1, 2, 3, 4, 5}), {"<pad>", "<oov>", "a", "b"}, "h"};
  const std::vector<TokenId> ids{2, 3, 2, 0};
  const auto rows = lookup(table, ids);
  CHECK(rows == nn::Tensor({4, 2}, {2, 3, 4, 5, 2, 3, 0, 0}));
  const std::vector<TokenId> bad{4};
  CHECK_THROWS_AS(lookup(table, bad), Error);
}

TEST_CASE("text format round trip and fixtures") {
  std::istringstream fixture("2 2\nkernel 0.5 -1\ngui 2 3\n");
  const auto t = read_embeddings(fixture);
  CHECK(t.matrix == nn::Tensor({2, 2}, {0.5, -1, 2, 3}));
  CHECK(t.tokens == std::vector<std::string>{"kernel", "gui"});

  std::stringstream io;
  write_embeddings(io, t);
  const auto back = read_embeddings(io);
  for (std::size_t i = 0; i < t.matrix.size(); ++i) CHECK(std::abs(back.matrix[i] - t.matrix[i]) < 1e-6);

  std::istringstream short_body("3 2\nkernel 0.5 -1\n");
  CHECK_THROWS_AS(read_embeddings(short_body), ParseError);
  std::istringstream bad_row("1 2\nkernel 0.5\n");
  try {
    read_embeddings(bad_row);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}
