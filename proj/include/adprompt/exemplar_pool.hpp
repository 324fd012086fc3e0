#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "adprompt/errors.hpp"
#include "adprompt/label.hpp"
#include "adprompt/manifest.hpp"
#include "adprompt/mmse_proxy.hpp"
#include "adprompt/rng.hpp"
#include "adprompt/tfidf.hpp"

namespace adprompt {

enum class PoolKind { mmse_proxy, no_proxy, reasoning_augmented };

inline std::string to_string(PoolKind kind) {
  switch (kind) {
    case PoolKind::mmse_proxy: return "mmse_proxy";
    case PoolKind::no_proxy: return "no_proxy";
    case PoolKind::reasoning_augmented: return "reasoning_augmented";
  }
  return "?";
}

inline PoolKind pool_kind_from_string(std::string_view s) {
  if (s == "mmse_proxy") return PoolKind::mmse_proxy;
  if (s == "no_proxy") return PoolKind::no_proxy;
  if (s == "reasoning_augmented") return PoolKind::reasoning_augmented;
  throw DataError("unknown pool_kind '" + std::string(s) + "'");
}

// A labeled demonstration. probability_text is the exact token rendered into
// prompts and pool files: two-decimal (side-clamped) for proxy pools, the
// generated value for reasoning pools.
struct Exemplar {
  std::string id;
  std::string transcript;
  ClassLabel label = ClassLabel::HC;
  std::optional<int> mmse;
  std::optional<double> probability;
  std::string probability_text;
  std::optional<std::string> comment;
};

struct ExemplarPool {
  PoolKind kind = PoolKind::mmse_proxy;
  std::vector<Exemplar> ad;
  std::vector<Exemplar> hc;

  const std::vector<Exemplar>& class_list(ClassLabel label) const {
    return label == ClassLabel::AD ? ad : hc;
  }
  size_t capacity() const { return std::min(ad.size(), hc.size()); }
};

enum class SelectionStrategy { nested_random, tfidf };

struct SelectionPlan {
  SelectionStrategy strategy = SelectionStrategy::nested_random;
  int k = 0;         // examples per class
  uint64_t seed = 0; // consumed by nested_random only
};

namespace detail {

inline size_t count_ws_tokens(std::string_view s) {
  std::istringstream in{std::string(s)};
  std::string tok;
  size_t n = 0;
  while (in >> tok) ++n;
  return n;
}

inline void validate_exemplar(const Exemplar& e, PoolKind kind) {
  auto fail = [&](const std::string& why) {
    throw DataError("pool record '" + e.id + "': " + why);
  };
  if (e.id.empty()) throw DataError("pool record with empty id");
  if (e.transcript.empty()) fail("empty transcript");
  if (e.mmse && (*e.mmse < 0 || *e.mmse > 30)) fail("mmse out of range 0..30");
  const bool needs_probability = kind != PoolKind::no_proxy;
  if (needs_probability && !e.probability) fail("missing probability");
  if (e.probability) {
    const double p = *e.probability;
    if (p < 0.0 || p > 1.0) fail("probability out of [0,1]");
    if (e.label == ClassLabel::HC && p >= 0.5) {
      fail("HC probability must be < 0.5");
    }
    if (e.label == ClassLabel::AD) {
      if (kind == PoolKind::reasoning_augmented ? p <= 0.5 : p < 0.5) {
        fail(kind == PoolKind::reasoning_augmented
                 ? "AD probability must be > 0.5"
                 : "AD probability must be >= 0.5");
      }
    }
  }
  if (kind == PoolKind::reasoning_augmented) {
    if (!e.comment || e.comment->empty()) fail("reasoning pool requires a comment");
    if (count_ws_tokens(*e.comment) > 100) fail("comment exceeds 100 tokens");
  }
}

}  // namespace detail

// Canonical one-line serialization of an exemplar record; also the byte
// string hashed by the pool digest manifest.
inline std::string pool_record_line(const Exemplar& e) {
  std::string line = "{\"id\":" + nlohmann::json(e.id).dump();
  line += ",\"transcript\":" + nlohmann::json(e.transcript).dump();
  line += ",\"label\":\"" + to_string(e.label) + "\"";
  if (e.mmse) line += ",\"mmse\":" + std::to_string(*e.mmse);
  if (e.probability) {
    line += ",\"probability\":" + (e.probability_text.empty()
                                       ? nlohmann::json(*e.probability).dump()
                                       : e.probability_text);
  }
  if (e.comment) line += ",\"comment\":" + nlohmann::json(*e.comment).dump();
  line += "}";
  return line;
}

inline void save_pool(const ExemplarPool& pool, const std::string& path) {
  std::vector<const Exemplar*> all;
  for (const auto& e : pool.ad) all.push_back(&e);
  for (const auto& e : pool.hc) all.push_back(&e);
  std::sort(all.begin(), all.end(),
            [](const Exemplar* a, const Exemplar* b) { return a->id < b->id; });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write pool file '" + path + "'");
  out << "{\"pool_kind\":\"" << to_string(pool.kind) << "\"}\n";
  for (const auto* e : all) out << pool_record_line(*e) << "\n";
}

// Loads and validates a pool file (JSON Lines; first line is a header object
// carrying pool_kind). Every record is checked against the exemplar
// invariants; with a manifest, provenance and split hygiene are enforced too.
inline ExemplarPool load_pool(const std::string& path, const Manifest* manifest = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open pool file '" + path + "'");

  ExemplarPool pool;
  std::set<std::string> seen_ids;
  std::vector<std::string> leaked;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto where = [&] { return path + ":" + std::to_string(line_no); };
    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      throw DataError(where() + ": pool line is not a JSON object");
    }
    if (!header_seen) {
      if (!rec.contains("pool_kind") || !rec["pool_kind"].is_string()) {
        throw DataError(where() + ": pool header must carry string field 'pool_kind'");
      }
      pool.kind = pool_kind_from_string(rec["pool_kind"].get<std::string>());
      header_seen = true;
      continue;
    }
    Exemplar e;
    if (!rec.contains("id") || !rec["id"].is_string()) {
      throw DataError(where() + ": record missing string field 'id'");
    }
    e.id = rec["id"].get<std::string>();
    if (!rec.contains("transcript") || !rec["transcript"].is_string()) {
      throw DataError("pool record '" + e.id + "': missing string field 'transcript'");
    }
    e.transcript = rec["transcript"].get<std::string>();
    if (!rec.contains("label") || !rec["label"].is_string()) {
      throw DataError("pool record '" + e.id + "': missing string field 'label'");
    }
    e.label = class_label_from_string(rec["label"].get<std::string>());
    if (rec.contains("mmse") && !rec["mmse"].is_null()) {
      if (!rec["mmse"].is_number_integer()) {
        throw DataError("pool record '" + e.id + "': 'mmse' must be an integer");
      }
      e.mmse = rec["mmse"].get<int>();
    }
    if (rec.contains("probability") && !rec["probability"].is_null()) {
      if (!rec["probability"].is_number()) {
        throw DataError("pool record '" + e.id + "': 'probability' must be a number");
      }
      e.probability = rec["probability"].get<double>();
      e.probability_text = pool.kind == PoolKind::reasoning_augmented
                               ? rec["probability"].dump()
                               : format_proxy_probability(*e.probability, e.label);
    }
    if (rec.contains("comment") && !rec["comment"].is_null()) {
      if (!rec["comment"].is_string()) {
        throw DataError("pool record '" + e.id + "': 'comment' must be a string");
      }
      e.comment = rec["comment"].get<std::string>();
    }
    detail::validate_exemplar(e, pool.kind);
    if (!seen_ids.insert(e.id).second) {
      throw DataError("pool record '" + e.id + "': duplicate id");
    }
    if (manifest) {
      if (!manifest->contains(e.id)) {
        throw DataError("pool record '" + e.id + "': subject not present in manifest");
      }
      const auto& entry = manifest->require(e.id);
      if (entry.split != "train") leaked.push_back(e.id);
      if (entry.label && *entry.label != e.label) {
        throw DataError("pool record '" + e.id + "': label disagrees with manifest");
      }
    }
    (e.label == ClassLabel::AD ? pool.ad : pool.hc).push_back(std::move(e));
  }
  if (!header_seen) throw DataError(path + ": empty pool file (missing header line)");
  if (!leaked.empty()) throw LeakageError(std::move(leaked));
  return pool;
}

// Deterministic within-class shuffle. Each class list is first put into
// canonical (ascending id) order, then permuted by Fisher-Yates driven by
// SplitMix64 keyed on (seed, class tag) — see rng.hpp. File order therefore
// never influences the result.
inline std::pair<std::vector<Exemplar>, std::vector<Exemplar>> seeded_shuffle(
    const ExemplarPool& pool, uint64_t seed) {
  auto shuffle_class = [&](const std::vector<Exemplar>& list, std::string_view tag) {
    std::vector<Exemplar> sorted = list;
    std::sort(sorted.begin(), sorted.end(),
              [](const Exemplar& a, const Exemplar& b) { return a.id < b.id; });
    auto idx = shuffled_indices(sorted.size(), keyed_rng(seed, tag));
    std::vector<Exemplar> out;
    out.reserve(sorted.size());
    for (size_t i : idx) out.push_back(sorted[i]);
    return out;
  };
  return {shuffle_class(pool.ad, "AD"), shuffle_class(pool.hc, "HC")};
}

// Class-alternating interleave (a1, h1, ..., ak, hk). Growing k appends to
// the end and never rewrites the existing prefix.
inline std::vector<Exemplar> nested_interleave(
    const std::pair<std::vector<Exemplar>, std::vector<Exemplar>>& shuffled, int k) {
  const auto& [ad, hc] = shuffled;
  if (k < 0) throw DomainError("k must be >= 0");
  if (static_cast<size_t>(k) > ad.size() || static_cast<size_t>(k) > hc.size()) {
    throw DomainError("k=" + std::to_string(k) + " exceeds pool capacity (" +
                      std::to_string(ad.size()) + " AD, " + std::to_string(hc.size()) +
                      " HC exemplars available)");
  }
  std::vector<Exemplar> seq;
  seq.reserve(2 * static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) {
    seq.push_back(ad[static_cast<size_t>(i)]);
    seq.push_back(hc[static_cast<size_t>(i)]);
  }
  return seq;
}

// Ranks each class by descending TF-IDF cosine similarity to the test
// transcript. IDF statistics come from the pool transcripts only; the test
// text is transformed, never fit. Ties (including the all-zero similarities
// of an empty or out-of-vocabulary test text) break by ascending id.
inline std::pair<std::vector<Exemplar>, std::vector<Exemplar>> tfidf_rank(
    const ExemplarPool& pool, const std::string& test_text) {
  if (pool.ad.empty() && pool.hc.empty()) throw DataError("tfidf_rank on empty pool");
  TfidfVectorizer vectorizer;
  std::vector<std::string> corpus;
  corpus.reserve(pool.ad.size() + pool.hc.size());
  for (const auto& e : pool.ad) corpus.push_back(e.transcript);
  for (const auto& e : pool.hc) corpus.push_back(e.transcript);
  vectorizer.fit(corpus);
  const auto test_vec = vectorizer.transform(test_text);

  auto rank_class = [&](const std::vector<Exemplar>& list) {
    std::vector<std::pair<double, const Exemplar*>> scored;
    scored.reserve(list.size());
    for (const auto& e : list) {
      scored.emplace_back(TfidfVectorizer::cosine(vectorizer.transform(e.transcript), test_vec),
                          &e);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second->id < b.second->id;
    });
    std::vector<Exemplar> out;
    out.reserve(scored.size());
    for (const auto& [_, e] : scored) out.push_back(*e);
    return out;
  };
  return {rank_class(pool.ad), rank_class(pool.hc)};
}

// Produces the ordered demonstration sequence for one prompt.
// nested_random ignores the test text (one global exemplar set per seed);
// tfidf re-ranks per test transcript. Both alternate AD-first.
inline std::vector<Exemplar> select(const ExemplarPool& pool, const SelectionPlan& plan,
                                    const std::string& test_text = "") {
  switch (plan.strategy) {
    case SelectionStrategy::nested_random:
      return nested_interleave(seeded_shuffle(pool, plan.seed), plan.k);
    case SelectionStrategy::tfidf:
      return nested_interleave(tfidf_rank(pool, test_text), plan.k);
  }
  throw DomainError("unknown selection strategy");
}

}  // namespace adprompt
