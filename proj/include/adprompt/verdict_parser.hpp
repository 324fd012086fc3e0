#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "adprompt/label.hpp"

namespace adprompt {

// Successfully validated model output under the forced-decision schema.
struct Verdict {
  std::string comment;
  ClassLabel prediction = ClassLabel::HC;  // YES -> AD, NO -> HC
  std::optional<double> probability;       // absent only when not required
  std::string raw_text;

  std::string prediction_token() const {
    return prediction == ClassLabel::AD ? "YES" : "NO";
  }
};

struct ParseFailure {
  enum class Reason {
    NoJsonObject,           // no '{' anywhere in the output
    InvalidJson,            // braces present but no parsable object
    MissingField,           // required field absent (or of the wrong JSON type)
    OutOfRangeProbability,  // probability_score outside [0,1]
    InvalidPrediction,      // alzheimers_prediction not exactly "YES"/"NO"
    EmptyOutput,
  };
  Reason reason = Reason::EmptyOutput;
  std::string missing_field;  // set for MissingField
  std::string raw_text;
};

inline std::string to_string(ParseFailure::Reason reason) {
  switch (reason) {
    case ParseFailure::Reason::NoJsonObject: return "NoJsonObject";
    case ParseFailure::Reason::InvalidJson: return "InvalidJson";
    case ParseFailure::Reason::MissingField: return "MissingField";
    case ParseFailure::Reason::OutOfRangeProbability: return "OutOfRangeProbability";
    case ParseFailure::Reason::InvalidPrediction: return "InvalidPrediction";
    case ParseFailure::Reason::EmptyOutput: return "EmptyOutput";
  }
  return "?";
}

using VerdictOrFailure = std::variant<Verdict, ParseFailure>;

namespace detail {

// Extracts the balanced {...} group starting at `start` (which must index a
// '{'), honoring JSON string literals and escapes. Returns the substring or
// nothing when the group never closes.
inline std::optional<std::string_view> balanced_object_at(std::string_view text,
                                                          size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return text.substr(start, i - start + 1);
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Parses arbitrary model output against the forced-decision schema. Locates
// the first balanced JSON object in the text (models often wrap the object in
// prose), then validates fields in order: prediction, probability, comment.
// A field of the wrong JSON type counts as missing. With
// require_probability=false a missing probability_score yields a Verdict with
// no probability instead of a failure (the no-proxy ablation); a present one
// is still range-checked. Total: returns a value for every input, never
// throws, and failures are never coerced into a class decision.
inline VerdictOrFailure parse_verdict(const std::string& text, bool require_probability,
                                      bool require_comment = true) {
  auto fail = [&](ParseFailure::Reason reason, std::string field = "") {
    return ParseFailure{reason, std::move(field), text};
  };

  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    return fail(ParseFailure::Reason::EmptyOutput);
  }

  nlohmann::json obj;
  bool found = false;
  bool saw_brace = false;
  for (size_t pos = text.find('{'); pos != std::string::npos;
       pos = text.find('{', pos + 1)) {
    saw_brace = true;
    auto candidate = detail::balanced_object_at(text, pos);
    if (!candidate) continue;
    nlohmann::json parsed = nlohmann::json::parse(*candidate, nullptr, false);
    if (!parsed.is_discarded() && parsed.is_object()) {
      obj = std::move(parsed);
      found = true;
      break;
    }
  }
  if (!found) {
    return fail(saw_brace ? ParseFailure::Reason::InvalidJson
                          : ParseFailure::Reason::NoJsonObject);
  }

  if (!obj.contains("alzheimers_prediction")) {
    return fail(ParseFailure::Reason::MissingField, "alzheimers_prediction");
  }
  if (!obj["alzheimers_prediction"].is_string()) {
    return fail(ParseFailure::Reason::InvalidPrediction);
  }
  const std::string prediction = obj["alzheimers_prediction"].get<std::string>();
  if (prediction != "YES" && prediction != "NO") {  // exact match, case-sensitive
    return fail(ParseFailure::Reason::InvalidPrediction);
  }

  std::optional<double> probability;
  if (obj.contains("probability_score") && obj["probability_score"].is_number()) {
    probability = obj["probability_score"].get<double>();
    if (*probability < 0.0 || *probability > 1.0) {
      return fail(ParseFailure::Reason::OutOfRangeProbability);
    }
  } else if (require_probability) {
    return fail(ParseFailure::Reason::MissingField, "probability_score");
  }

  std::string comment;
  if (obj.contains("comment") && obj["comment"].is_string()) {
    comment = obj["comment"].get<std::string>();  // empty string is acceptable
  } else if (require_comment) {
    return fail(ParseFailure::Reason::MissingField, "comment");
  }

  Verdict verdict;
  verdict.comment = std::move(comment);
  verdict.prediction = prediction == "YES" ? ClassLabel::AD : ClassLabel::HC;
  verdict.probability = probability;
  verdict.raw_text = text;
  return verdict;
}

}  // namespace adprompt
