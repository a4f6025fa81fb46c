// SPDX-License-Identifier: Apache-2.0
#include "triage/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "triage/error.hpp"
#include "triage/rng.hpp"

namespace triage {

namespace {

std::string trim(const std::string& s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  auto begin = std::find_if_not(s.begin(), s.end(), is_space);
  auto end = std::find_if_not(s.rbegin(), std::string::const_reverse_iterator(begin),
                              is_space).base();
  return std::string(begin, end);
}

const std::string& required_string(const nlohmann::json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end()) throw Error(std::string("missing key \"") + key + "\"");
  if (!it->is_string()) throw Error(std::string("key \"") + key + "\" is not a string");
  return it->get_ref<const std::string&>();
}

}  // namespace

ClassSet::ClassSet(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!index_.emplace(names_[i], static_cast<ClassId>(i)).second) {
      throw Error("duplicate class name \"" + names_[i] + "\"");
    }
  }
}

std::optional<ClassId> ClassSet::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ClassId ClassSet::id(const std::string& name) const {
  auto found = find(name);
  if (!found) throw Error("unknown class \"" + name + "\"");
  return *found;
}

Dataset::Dataset(std::vector<Document> documents, std::map<std::string, ClassSet> fields)
    : documents_(std::move(documents)), fields_(std::move(fields)) {
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    const auto& doc = documents_[i];
    if (doc.id.empty()) throw Error("document with empty id");
    if (!by_id_.emplace(doc.id, i).second) throw Error("duplicate id \"" + doc.id + "\"");
    for (const auto& [field, value] : doc.labels) {
      auto it = fields_.find(field);
      if (it == fields_.end() || !it->second.find(value)) {
        throw Error("label " + field + "=" + value + " of \"" + doc.id +
                    "\" is not in the class set");
      }
    }
  }
}

const ClassSet& Dataset::classes(const std::string& field) const {
  auto it = fields_.find(field);
  if (it == fields_.end()) throw Error("unknown label field \"" + field + "\"");
  return it->second;
}

const Document& Dataset::document(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw Error("unknown document id \"" + id + "\"");
  return documents_[it->second];
}

std::vector<const Document*> Dataset::labeled(const std::string& field) const {
  std::vector<const Document*> out;
  for (const auto& doc : documents_) {
    if (doc.labels.contains(field)) out.push_back(&doc);
  }
  return out;
}

Document document_from_json(const nlohmann::json& record) {
  if (!record.is_object()) throw Error("record is not a JSON object");
  Document doc;
  doc.id = required_string(record, "id");
  if (doc.id.empty()) throw Error("empty id");
  doc.title = required_string(record, "title");
  doc.body = required_string(record, "content");
  if (auto it = record.find("labels"); it != record.end()) {
    if (!it->is_object()) throw Error("\"labels\" is not an object");
    for (const auto& [field, value] : it->items()) {
      if (!value.is_string()) throw Error("label \"" + field + "\" is not a string");
      doc.labels.emplace(field, trim(value.get<std::string>()));
    }
  }
  return doc;
}

nlohmann::json document_to_json(const Document& doc) {
  return {{"id", doc.id}, {"title", doc.title}, {"content", doc.body}, {"labels", doc.labels}};
}

Dataset parse_dataset(std::istream& in, const std::vector<std::string>& schema) {
  const std::set<std::string> wanted(schema.begin(), schema.end());
  std::vector<Document> documents;
  std::map<std::string, std::set<std::string>> observed;
  std::set<std::string> seen_ids;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char c) { return std::isspace(c) != 0; })) {
      continue;
    }
    Document doc;
    try {
      const auto record = nlohmann::json::parse(line);
      if (record.is_object() && !record.contains("labels")) throw Error("missing key \"labels\"");
      doc = document_from_json(record);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    } catch (const Error& e) {
      throw ParseError(e.what(), line_no);
    }
    if (!seen_ids.insert(doc.id).second) {
      throw ParseError("duplicate id \"" + doc.id + "\"", line_no);
    }
    if (!wanted.empty()) {
      std::erase_if(doc.labels, [&](const auto& kv) { return !wanted.contains(kv.first); });
    }
    for (const auto& [field, value] : doc.labels) observed[field].insert(value);
    documents.push_back(std::move(doc));
  }
  if (documents.empty()) throw ParseError("dataset is empty", 0);

  std::map<std::string, ClassSet> fields;
  for (const auto& field : wanted) observed.try_emplace(field);
  for (auto& [field, values] : observed) {
    fields.emplace(field, ClassSet(std::vector<std::string>(values.begin(), values.end())));
  }
  return Dataset(std::move(documents), std::move(fields));
}

Dataset load_dataset(const std::filesystem::path& path, const std::vector<std::string>& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path.string());
  return parse_dataset(in, schema);
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  for (const auto& doc : dataset.documents()) out << document_to_json(doc).dump() << '\n';
}

Split make_split(const Dataset& dataset, const std::string& field, double test_fraction,
                 std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error("test fraction must lie in (0, 1)");
  }
  const auto& classes = dataset.classes(field);
  const auto labeled = dataset.labeled(field);
  if (labeled.size() < 2) throw Error("field \"" + field + "\" has fewer than 2 labeled documents");

  std::vector<std::string> ids;
  ids.reserve(labeled.size());
  for (const auto* doc : labeled) ids.push_back(doc->id);
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(ids));

  const auto n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(ids.size())));
  if (n_test < 1) throw Error("split leaves no test documents");
  if (n_test >= ids.size()) throw Error("split leaves no training documents");

  Split split;
  split.field = field;
  split.seed = seed;
  split.test_fraction = test_fraction;
  split.test.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_test), ids.end());

  if (spdlog::should_log(spdlog::level::debug)) {
    for (const auto* part : {&split.train, &split.test}) {
      std::vector<std::size_t> counts(classes.size(), 0);
      for (const auto& id : *part) {
        counts[static_cast<std::size_t>(classes.id(dataset.document(id).labels.at(field)))]++;
      }
      std::ostringstream line;
      for (std::size_t c = 0; c < counts.size(); ++c) {
        line << (c ? ", " : "") << classes.name(static_cast<ClassId>(c)) << '=' << counts[c];
      }
      spdlog::debug("split {} {}: {}", field, part == &split.train ? "train" : "test", line.str());
    }
  }
  return split;
}

nlohmann::json split_to_json(const Split& split) {
  return {{"seed", split.seed},
          {"test_fraction", split.test_fraction},
          {"train", split.train},
          {"test", split.test}};
}

}  // namespace triage
