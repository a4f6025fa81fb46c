// SPDX-License-Identifier: Apache-2.0
#include "triage/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "triage/error.hpp"
#include "triage/hash.hpp"

namespace triage {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(sigmoid(x)) without overflow.
double log_sigmoid(double x) { return x < 0.0 ? x - std::log1p(std::exp(x)) : -std::log1p(std::exp(-x)); }

std::string tokens_hash(const std::vector<std::string>& tokens) {
  Fnv1a h;
  for (const auto& t : tokens) h.update(t).update("\n");
  return h.hex();
}

}  // namespace

void SkipGramConfig::validate() const {
  if (dim < 1 || window < 1 || negatives < 1 || epochs < 1) {
    throw Error("skip-gram: dim, window, negatives and epochs must be positive");
  }
  if (!(learning_rate > 0.0)) throw Error("skip-gram: learning rate must be positive");
}

SkipGramConfig skipgram_from_json(const nlohmann::json& j, SkipGramConfig c) {
  if (j.is_null()) return c;
  c.dim = j.value("dim", c.dim);
  c.window = j.value("window", c.window);
  c.negatives = j.value("negatives", c.negatives);
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

nlohmann::json skipgram_to_json(const SkipGramConfig& c) {
  return {{"dim", c.dim},       {"window", c.window},
          {"negatives", c.negatives}, {"epochs", c.epochs},
          {"learning_rate", c.learning_rate}, {"seed", c.seed}};
}

NegativeSampler::NegativeSampler(std::span<const std::uint64_t> counts) {
  cumulative_.reserve(counts.size());
  double total = 0.0;
  for (auto c : counts) {
    total += std::pow(static_cast<double>(c), 0.75);
    cumulative_.push_back(total);
  }
  if (!(total > 0.0)) throw Error("negative sampler: all counts are zero");
}

TokenId NegativeSampler::sample(Rng& rng) const {
  const double u = rng.uniform() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return static_cast<TokenId>(it - cumulative_.begin());
}

double NegativeSampler::probability(TokenId id) const {
  const auto i = static_cast<std::size_t>(id);
  const double lo = i == 0 ? 0.0 : cumulative_[i - 1];
  return (cumulative_[i] - lo) / cumulative_.back();
}

EmbeddingTable train_skipgram(std::span<const EncodedDocument> docs, const Vocabulary& vocab,
                              const SkipGramConfig& config, SkipGramReport* report) {
  config.validate();
  if (docs.empty()) throw Error("skip-gram: empty corpus");
  const std::size_t V = vocab.size(), d = config.dim;
  if (V < config.negatives + 2) {
    throw Error("skip-gram: vocabulary of " + std::to_string(V) + " is smaller than negatives + 2");
  }

  std::vector<std::vector<TokenId>> streams;
  std::vector<std::uint64_t> counts(V, 0);
  std::size_t centers = 0;
  for (const auto& doc : docs) {
    auto& stream = streams.emplace_back();
    for (const auto& sentence : doc) {
      for (TokenId id : sentence) {
        if (id < 0 || static_cast<std::size_t>(id) >= V) throw Error("skip-gram: token id out of range");
        if (id == Vocabulary::kPad) continue;
        stream.push_back(id);
        if (id != Vocabulary::kOov) {
          ++counts[static_cast<std::size_t>(id)];
          ++centers;
        }
      }
    }
  }
  if (centers == 0) throw Error("skip-gram: corpus has no in-vocabulary tokens");
  const NegativeSampler sampler(counts);

  Rng rng(config.seed);
  nn::Tensor input({V, d});
  nn::Tensor output({V, d});
  for (std::size_t v = 1; v < V; ++v) {
    for (std::size_t j = 0; j < d; ++j) input.at(v, j) = (rng.uniform() - 0.5) / static_cast<double>(d);
  }

  std::vector<double> grad_center(d);
  const double total_steps = static_cast<double>(config.epochs * centers);
  double processed = 0.0;
  if (report) report->epoch_loss.clear();

  const auto dot = [d](const double* a, const double* b) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += a[j] * b[j];
    return s;
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss = 0.0;
    std::size_t pairs = 0;
    for (const auto& stream : streams) {
      for (std::size_t i = 0; i < stream.size(); ++i) {
        const TokenId center = stream[i];
        if (center == Vocabulary::kOov) continue;
        const double lr =
            config.learning_rate * std::max(1e-4, 1.0 - processed / total_steps);
        processed += 1.0;
        double* vc = &input.at(static_cast<std::size_t>(center), 0);
        const std::size_t lo = i >= config.window ? i - config.window : 0;
        const std::size_t hi = std::min(stream.size() - 1, i + config.window);
        for (std::size_t o = lo; o <= hi; ++o) {
          if (o == i) continue;
          const TokenId context = stream[o];
          std::fill(grad_center.begin(), grad_center.end(), 0.0);

          double* uo = &output.at(static_cast<std::size_t>(context), 0);
          const double pos = dot(vc, uo);
          loss -= log_sigmoid(pos);
          const double g_pos = lr * (1.0 - sigmoid(pos));
          for (std::size_t j = 0; j < d; ++j) {
            grad_center[j] += g_pos * uo[j];
            uo[j] += g_pos * vc[j];
          }
          for (std::size_t k = 0; k < config.negatives; ++k) {
            const TokenId neg = sampler.sample(rng);
            if (neg == context) continue;
            double* un = &output.at(static_cast<std::size_t>(neg), 0);
            const double score = dot(vc, un);
            loss -= log_sigmoid(-score);
            const double g_neg = -lr * sigmoid(score);
            for (std::size_t j = 0; j < d; ++j) {
              grad_center[j] += g_neg * un[j];
              un[j] += g_neg * vc[j];
            }
          }
          for (std::size_t j = 0; j < d; ++j) vc[j] += grad_center[j];
          ++pairs;
        }
      }
    }
    if (report) report->epoch_loss.push_back(pairs ? loss / static_cast<double>(pairs) : 0.0);
  }

  EmbeddingTable table;
  table.matrix = std::move(input);
  table.tokens = vocab.tokens();
  table.vocab_hash = vocab.hash();
  return table;
}

nn::Tensor lookup(const EmbeddingTable& table, std::span<const TokenId> ids) {
  const std::size_t d = table.dim();
  nn::Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= table.vocab_size()) {
      throw Error("embedding lookup: id " + std::to_string(ids[i]) + " out of range");
    }
    const auto src = table.matrix.row(static_cast<std::size_t>(ids[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  out << table.vocab_size() << ' ' << table.dim() << '\n';
  out << std::setprecision(17);
  for (std::size_t v = 0; v < table.vocab_size(); ++v) {
    out << table.tokens.at(v);
    for (double x : table.matrix.row(v)) out << ' ' << x;
    out << '\n';
  }
}

EmbeddingTable read_embeddings(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  std::istringstream header(line);
  std::size_t V = 0, d = 0;
  if (!(header >> V >> d) || V == 0 || d == 0) throw ParseError("header must be \"V d\"", 1);
  std::string extra;
  if (header >> extra) throw ParseError("header must be \"V d\"", 1);

  EmbeddingTable table;
  table.matrix = nn::Tensor({V, d});
  std::size_t row = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (row == V) throw ParseError("more rows than the header's " + std::to_string(V), line_no);
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    for (std::size_t j = 0; j < d; ++j) {
      std::string text;
      if (!(fields >> text)) throw ParseError("expected " + std::to_string(d) + " components", line_no);
      try {
        std::size_t used = 0;
        table.matrix.at(row, j) = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
      } catch (const std::exception&) {
        throw ParseError("bad number \"" + text + "\"", line_no);
      }
    }
    if (fields >> extra) throw ParseError("more than " + std::to_string(d) + " components", line_no);
    table.tokens.push_back(std::move(token));
    ++row;
  }
  if (row != V) {
    throw ParseError("header declares " + std::to_string(V) + " rows, found " + std::to_string(row),
                     line_no);
  }
  table.vocab_hash = tokens_hash(table.tokens);
  return table;
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_embeddings(out, table);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_embeddings(in);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

}  // namespace triage
