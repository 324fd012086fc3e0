#pragma once

#include <cctype>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace adprompt {

// Small TF-IDF vectorizer with one pinned recipe so rankings are exactly
// reproducible:
//   tokens  — lowercase, split on runs of non-alphanumeric characters
//             (pause phrases therefore contribute "short"/"pause" etc.,
//             "xxx" is an ordinary token)
//   tf      — raw term count
//   idf     — ln((1 + N) / (1 + df)) + 1
//   norm    — L2
// Statistics are fit on the pool documents only; query documents are
// transformed with the fitted vocabulary (unseen terms ignored).
class TfidfVectorizer {
 public:
  static std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      } else if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
  }

  void fit(const std::vector<std::string>& documents) {
    idf_.clear();
    std::map<std::string, size_t> df;
    for (const auto& doc : documents) {
      std::map<std::string, bool> seen;
      for (auto& tok : tokenize(doc)) seen.emplace(std::move(tok), true);
      for (const auto& [tok, _] : seen) ++df[tok];
    }
    const double n = static_cast<double>(documents.size());
    for (const auto& [tok, count] : df) {
      idf_[tok] = std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0;
    }
  }

  // L2-normalized sparse vector over the fitted vocabulary.
  std::map<std::string, double> transform(std::string_view text) const {
    std::map<std::string, double> vec;
    for (auto& tok : tokenize(text)) {
      auto it = idf_.find(tok);
      if (it != idf_.end()) vec[tok] += it->second;
    }
    double norm_sq = 0.0;
    for (const auto& [_, w] : vec) norm_sq += w * w;
    if (norm_sq > 0.0) {
      const double inv = 1.0 / std::sqrt(norm_sq);
      for (auto& [_, w] : vec) w *= inv;
    }
    return vec;
  }

  static double cosine(const std::map<std::string, double>& a,
                       const std::map<std::string, double>& b) {
    const auto& small = a.size() <= b.size() ? a : b;
    const auto& large = a.size() <= b.size() ? b : a;
    double dot = 0.0;
    for (const auto& [tok, w] : small) {
      auto it = large.find(tok);
      if (it != large.end()) dot += w * it->second;
    }
    return dot;
  }

 private:
  std::map<std::string, double> idf_;
};

}  // namespace adprompt
