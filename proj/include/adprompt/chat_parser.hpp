#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adprompt/errors.hpp"
#include "adprompt/label.hpp"

namespace adprompt {

// One tier line of a CHAT file: tag as found in the source (including the
// leading sigil and the colon when present, e.g. "*PAR:", "%mor:", "@Begin"),
// plus the content with continuation lines already merged.
struct ChatLine {
  std::string tag;
  std::string content;
};

struct RawChatDocument {
  std::string source_id;
  std::vector<ChatLine> lines;  // original order preserved
};

// Normalized participant-only transcript with its manifest metadata.
struct Transcript {
  std::string subject_id;
  std::string text;
  std::string split;  // "train" or "test"
  std::optional<ClassLabel> label;
  std::optional<int> mmse;
};

namespace detail {

inline bool is_ws(char c) { return c == ' ' || c == '\t'; }

inline std::string collapse_ws(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_ws = true;  // trims leading whitespace
  for (char c : s) {
    if (is_ws(c) || c == '\n' || c == '\r') {
      in_ws = true;
    } else {
      if (in_ws && !out.empty()) out += ' ';
      out += c;
      in_ws = false;
    }
  }
  return out;
}

inline std::vector<std::string> ws_tokens(std::string_view s) {
  std::vector<std::string> toks;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_ws(s[i])) ++i;
    size_t start = i;
    while (i < s.size() && !is_ws(s[i])) ++i;
    if (i > start) toks.emplace_back(s.substr(start, i - start));
  }
  return toks;
}

// True when the token stream of `following` begins with the token stream of
// `material`. Used to decide whether a retrace marker is already followed by
// its spelled-out repetition.
inline bool starts_with_tokens(std::string_view following, std::string_view material) {
  auto m = ws_tokens(material);
  auto f = ws_tokens(following);
  if (m.empty() || f.size() < m.size()) return false;
  for (size_t i = 0; i < m.size(); ++i) {
    if (f[i] != m[i]) return false;
  }
  return true;
}

// Expands repetition retraces. In CHAT the retraced material is written as
// `<X> [/]` (or `X [/]` for a single word) and the repetition normally
// follows in the text; stripping the markers then yields the readable
// repetition. When no repetition follows (marker at utterance end), the
// material is emitted twice. Angle groups are assumed non-nested.
inline std::string expand_retraces(std::string_view raw) {
  std::string out;
  size_t i = 0;
  while (i < raw.size()) {
    size_t p = raw.find("[/]", i);
    if (p == std::string_view::npos) {
      out.append(raw.substr(i));
      break;
    }
    std::string_view left = raw.substr(i, p - i);
    size_t end = left.size();
    while (end > 0 && is_ws(left[end - 1])) --end;
    std::string material;
    std::string_view prefix;
    if (end > 0 && left[end - 1] == '>') {
      size_t open = left.rfind('<', end - 1);
      if (open == std::string_view::npos) {
        // stray '>' — treat the single preceding token as the material
        size_t tok_start = end - 1;
        while (tok_start > 0 && !is_ws(left[tok_start - 1])) --tok_start;
        material = std::string(left.substr(tok_start, end - tok_start));
        prefix = left.substr(0, tok_start);
      } else {
        material = std::string(left.substr(open + 1, end - 1 - (open + 1)));
        prefix = left.substr(0, open);
      }
    } else if (end > 0) {
      size_t tok_start = end;
      while (tok_start > 0 && !is_ws(left[tok_start - 1])) --tok_start;
      material = std::string(left.substr(tok_start, end - tok_start));
      prefix = left.substr(0, tok_start);
    } else {
      prefix = left;  // marker with nothing before it: drop it
    }
    std::string_view rest = raw.substr(p + 3);
    out.append(prefix);
    if (!material.empty()) {
      out += ' ';
      out += material;
      if (!starts_with_tokens(rest, material)) {
        out += ' ';
        out += material;
      }
    }
    out += ' ';
    i = p + 3;
  }
  return out;
}

inline bool is_letter(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) != 0;
}

}  // namespace detail

// Renders one *PAR utterance into clean text. Rules, applied in this order:
//   1. retracing expansion: `<X> [/]` / `X [/]` become the readable
//      repetition ("what are what are"); a trailing retrace with no
//      spelled-out repetition emits the material twice
//   2. fillers: &uh -> "uh", &um -> "um"
//   3. phonological fragments: &-prefixed letters keep the letters
//      (&k -> "k"); the &- and &+ prefixed variants likewise
//   4. pauses: (.) -> "(short pause)", (..) -> "(medium pause)",
//      (...) -> "(long pause)"
//   5. unintelligible spans stay verbatim as "xxx"
//   6. every remaining control code is removed: [...] groups, <> scoping,
//      &=events, +-prefixed terminators, @word-form markers, 0-omissions,
//      parenthesized reconstructions such as "(be)cause" (timing bullets and
//      lengthening colons too)
//   7. whitespace collapsed to single spaces and trimmed
// Terminal punctuation is kept. The retrace pass runs first so the markers
// it needs are still intact.
inline std::string normalize_utterance(std::string_view raw) {
  std::string text = detail::expand_retraces(raw);

  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  const size_t n = text.size();
  auto at_token_start = [&](size_t pos) {
    return pos == 0 || detail::is_ws(text[pos - 1]) || text[pos - 1] == '<' ||
           text[pos - 1] == '>';
  };
  while (i < n) {
    char c = text[i];
    if (c == '[') {
      size_t close = text.find(']', i);
      i = (close == std::string::npos) ? n : close + 1;
      out += ' ';
    } else if (c == '<' || c == '>') {
      ++i;  // scoping only; inner material stays
    } else if (c == '\x15') {
      // media bullet (time alignment span)
      size_t close = text.find('\x15', i + 1);
      i = (close == std::string::npos) ? n : close + 1;
      out += ' ';
    } else if (c == '(') {
      size_t close = text.find(')', i);
      if (close == std::string::npos) {
        ++i;  // stray paren
        continue;
      }
      std::string_view inner(text.data() + i + 1, close - i - 1);
      if (inner == ".") {
        out += "(short pause)";
      } else if (inner == "..") {
        out += "(medium pause)";
      } else if (inner == "...") {
        out += "(long pause)";
      } else if (inner == "short pause" || inner == "medium pause" ||
                 inner == "long pause") {
        out += '(';
        out.append(inner);
        out += ')';  // already-normalized pause phrase; keeps the pass idempotent
      }
      // anything else in parentheses is unspoken (word completions, timed
      // pauses) and is dropped
      i = close + 1;
    } else if (c == '&') {
      ++i;
      if (i < n && text[i] == '=') {
        while (i < n && !detail::is_ws(text[i])) ++i;  // non-speech event
        out += ' ';
      } else {
        if (i < n && (text[i] == '-' || text[i] == '+')) ++i;
        while (i < n && (detail::is_letter(text[i]) || text[i] == '\'')) {
          out += text[i++];
        }
      }
    } else if (c == '+' && at_token_start(i)) {
      while (i < n && !detail::is_ws(text[i])) ++i;  // +... and friends
      out += ' ';
    } else if (c == '0' && at_token_start(i)) {
      while (i < n && !detail::is_ws(text[i])) ++i;  // omitted-word marker
      out += ' ';
    } else if (c == '@') {
      while (i < n && !detail::is_ws(text[i])) ++i;  // word-form marker suffix
    } else if (c == ':' && i > 0 && detail::is_letter(text[i - 1])) {
      ++i;  // vowel lengthening
    } else if (c == '^') {
      ++i;
    } else {
      out += c;
      ++i;
    }
  }
  return detail::collapse_ws(out);
}

// Parses CHAT text into tagged lines. Continuation lines (leading tab or
// spaces) attach to the preceding tier; nothing is dropped at this stage.
inline RawChatDocument parse_chat(std::string_view raw_file_text, std::string subject_id) {
  RawChatDocument doc;
  doc.source_id = std::move(subject_id);

  // strip a UTF-8 BOM if present
  if (raw_file_text.size() >= 3 && raw_file_text.substr(0, 3) == "\xEF\xBB\xBF") {
    raw_file_text.remove_prefix(3);
  }

  int line_no = 0;
  size_t pos = 0;
  while (pos <= raw_file_text.size()) {
    size_t eol = raw_file_text.find('\n', pos);
    std::string_view line = (eol == std::string_view::npos)
                                ? raw_file_text.substr(pos)
                                : raw_file_text.substr(pos, eol - pos);
    if (eol == std::string_view::npos && line.empty() && pos == raw_file_text.size()) break;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      // blank line
    } else if (line[0] == '\t' || line[0] == ' ') {
      if (doc.lines.empty()) {
        throw ChatParseError("continuation line with no governing tier", line_no);
      }
      std::string cont = detail::collapse_ws(line);
      if (!cont.empty()) {
        if (!doc.lines.back().content.empty()) doc.lines.back().content += ' ';
        doc.lines.back().content += cont;
      }
    } else if (line[0] == '@' || line[0] == '*' || line[0] == '%') {
      size_t colon = line.find(':');
      if (line[0] != '@' && colon == std::string_view::npos) {
        throw ChatParseError("tier line missing ':' separator", line_no);
      }
      if (line.size() == 1) {
        throw ChatParseError("empty tier tag", line_no);
      }
      std::string tag, content;
      if (colon == std::string_view::npos) {
        tag = std::string(line);  // bare header such as @Begin / @End
      } else {
        tag = std::string(line.substr(0, colon + 1));
        if (tag.size() <= 2 && line[0] != '@') {
          throw ChatParseError("empty tier name", line_no);
        }
        content = detail::collapse_ws(line.substr(colon + 1));
      }
      doc.lines.push_back({std::move(tag), std::move(content)});
    } else {
      throw ChatParseError("content line with no governing tier", line_no);
    }

    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return doc;
}

// Participant utterances only: *PAR tier contents in order; investigator
// turns, headers, and %-prefixed dependent tiers are excluded.
inline std::vector<std::string> extract_participant(const RawChatDocument& doc) {
  std::vector<std::string> utterances;
  for (const auto& line : doc.lines) {
    if (line.tag == "*PAR:") utterances.push_back(line.content);
  }
  return utterances;
}

struct ManifestEntry;  // manifest.hpp

// Joins the normalized *PAR utterances with single spaces and attaches the
// manifest metadata. Declared here, defined in manifest.hpp.
inline Transcript build_transcript(const RawChatDocument& doc, const ManifestEntry& entry);

}  // namespace adprompt
