#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adprompt/chat_parser.hpp"
#include "adprompt/errors.hpp"
#include "adprompt/label.hpp"

namespace adprompt {

// One subject record of the dataset manifest. Serialized as JSON Lines with
// field names: subject_id, split ("train"|"test"), label ("AD"|"HC"),
// mmse (integer, may be absent).
struct ManifestEntry {
  std::string subject_id;
  std::string split;
  std::optional<ClassLabel> label;
  std::optional<int> mmse;
};

class Manifest {
 public:
  void add(ManifestEntry entry) {
    if (entries_.count(entry.subject_id)) {
      throw DataError("duplicate manifest subject_id '" + entry.subject_id + "'");
    }
    order_.push_back(entry.subject_id);
    entries_.emplace(entry.subject_id, std::move(entry));
  }

  bool contains(const std::string& subject_id) const {
    return entries_.count(subject_id) != 0;
  }

  const ManifestEntry& require(const std::string& subject_id) const {
    auto it = entries_.find(subject_id);
    if (it == entries_.end()) {
      throw DataError("subject '" + subject_id + "' not found in manifest");
    }
    return it->second;
  }

  // Subject ids in file order, optionally restricted to one split.
  std::vector<std::string> subjects(const std::string& split = "") const {
    std::vector<std::string> out;
    for (const auto& id : order_) {
      if (split.empty() || entries_.at(id).split == split) out.push_back(id);
    }
    return out;
  }

  size_t size() const { return order_.size(); }

 private:
  std::vector<std::string> order_;
  std::map<std::string, ManifestEntry> entries_;
};

inline Manifest parse_manifest(std::istream& in, const std::string& origin) {
  Manifest manifest;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto where = [&] { return origin + ":" + std::to_string(line_no); };
    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      throw DataError(where() + ": manifest record is not a JSON object");
    }
    ManifestEntry entry;
    if (!rec.contains("subject_id") || !rec["subject_id"].is_string()) {
      throw DataError(where() + ": manifest record missing string field 'subject_id'");
    }
    entry.subject_id = rec["subject_id"].get<std::string>();
    if (!rec.contains("split") || !rec["split"].is_string()) {
      throw DataError(where() + ": manifest record missing string field 'split'");
    }
    entry.split = rec["split"].get<std::string>();
    if (entry.split != "train" && entry.split != "test") {
      throw DataError(where() + ": split must be 'train' or 'test', got '" +
                      entry.split + "'");
    }
    if (rec.contains("label") && !rec["label"].is_null()) {
      if (!rec["label"].is_string()) {
        throw DataError(where() + ": 'label' must be a string");
      }
      entry.label = class_label_from_string(rec["label"].get<std::string>());
    }
    if (rec.contains("mmse") && !rec["mmse"].is_null()) {
      if (!rec["mmse"].is_number_integer()) {
        throw DataError(where() + ": 'mmse' must be an integer");
      }
      int m = rec["mmse"].get<int>();
      if (m < 0 || m > 30) {
        throw DataError(where() + ": 'mmse' out of range 0..30");
      }
      entry.mmse = m;
    }
    manifest.add(std::move(entry));
  }
  return manifest;
}

inline Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest file '" + path + "'");
  return parse_manifest(in, path);
}

inline Transcript build_transcript(const RawChatDocument& doc, const ManifestEntry& entry) {
  Transcript t;
  t.subject_id = doc.source_id;
  t.split = entry.split;
  t.label = entry.label;
  t.mmse = entry.mmse;
  std::string text;
  for (const auto& utterance : extract_participant(doc)) {
    std::string norm = normalize_utterance(utterance);
    if (norm.empty()) continue;
    if (!text.empty()) text += ' ';
    text += norm;
  }
  t.text = std::move(text);
  return t;
}

}  // namespace adprompt
