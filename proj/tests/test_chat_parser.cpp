#include <catch2/catch_amalgamated.hpp>

#include <regex>
#include <string>
#include <vector>

#include "adprompt/chat_parser.hpp"
#include "adprompt/manifest.hpp"

using namespace adprompt;

namespace {

// Utterance fixtures: raw *PAR content and the hand-derived normalization.
const std::vector<std::pair<std::string, std::string>> kNormalizationFixtures = {
    {"&uh the boy (.) falls", "uh the boy (short pause) falls"},
    {"", ""},
    {"<the cookie> [/] the cookie xxx (...)", "the cookie the cookie xxx (long pause)"},
    {"<what are> [/] what are they doing ?", "what are what are they doing ?"},
    {"what [/] what is that .", "what what is that ."},
    {"she is <going> [/]", "she is going going"},
    {"&um well the mother (..) dries dishes .", "um well the mother (medium pause) dries dishes ."},
    {"&k &sh he stumbles .", "k sh he stumbles ."},
    {"<I want> [//] I need cookies .", "I want I need cookies ."},
    {"cookie [x 3] jar .", "cookie jar ."},
    {"gonna [: going to] fall .", "gonna fall ."},
    {"the boy +...", "the boy"},
    {"(be)cause he is on the stool .", "cause he is on the stool ."},
    {"she is doin(g) the dishes .", "she is doin the dishes ."},
    {"&=laughs that is all .", "that is all ."},
    {"play with his bobo@o .", "play with his bobo ."},
    {"the boy 0is falling .", "the boy falling ."},
    {"water (2.5) everywhere .", "water everywhere ."},
    {"the boy [?] on the stool [% unclear] .", "the boy on the stool ."},
    {"no: the sink is overflowing .", "no the sink is overflowing ."},
    {"xxx and the girl laughs .", "xxx and the girl laughs ."},
    {"it was \x15""1200_4500\x15 outside .", "it was outside ."},
};

const char* kFullFixture =
    "@Begin\n"
    "@Languages:\teng\n"
    "@Participants:\tPAR Participant, INV Investigator\n"
    "*PAR:\t&uh the boy is (.) taking cookies .\n"
    "%mor:\tdet|the n|boy\n"
    "*INV:\tanything else ?\n"
    "*PAR:\t<the stool> [/] the stool is falling xxx (...) .\n"
    "*PAR:\tthe water is overflowing\n"
    "\tin the sink .\n"
    "@End\n";

}  // namespace

TEST_CASE("parse_chat keeps every tier in order", "[chat_parser]") {
  auto doc = parse_chat(kFullFixture, "S001");
  REQUIRE(doc.source_id == "S001");
  REQUIRE(doc.lines.size() == 9);
  CHECK(doc.lines[0].tag == "@Begin");
  CHECK(doc.lines[3].tag == "*PAR:");
  CHECK(doc.lines[4].tag == "%mor:");
  CHECK(doc.lines[5].tag == "*INV:");
  CHECK(doc.lines[8].tag == "@End");
}

TEST_CASE("parse_chat single-tier file", "[chat_parser]") {
  auto doc = parse_chat("*PAR:\tthe boy is falling .\n", "S002");
  REQUIRE(doc.lines.size() == 1);
  CHECK(doc.lines[0].tag == "*PAR:");
  CHECK(doc.lines[0].content == "the boy is falling .");
}

TEST_CASE("parse_chat merges continuation lines into the preceding tier", "[chat_parser]") {
  auto doc = parse_chat("*PAR:\tthe water is overflowing\n\tin the sink .\n", "S003");
  REQUIRE(doc.lines.size() == 1);
  CHECK(doc.lines[0].content == "the water is overflowing in the sink .");
}

TEST_CASE("parse_chat errors name the offending line", "[chat_parser]") {
  try {
    parse_chat("@Begin\nstray content line\n", "S004");
    FAIL("expected ChatParseError");
  } catch (const ChatParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_chat("\tcontinuation first\n", "S005"), ChatParseError);
  CHECK_THROWS_AS(parse_chat("*PAR no colon\n", "S006"), ChatParseError);
}

TEST_CASE("extract_participant filters to *PAR tiers", "[chat_parser]") {
  RawChatDocument doc;
  doc.lines = {{"*PAR:", "a"}, {"*INV:", "b"}, {"*PAR:", "c"}};
  CHECK(extract_participant(doc) == std::vector<std::string>{"a", "c"});

  RawChatDocument only_mor;
  only_mor.lines = {{"%mor:", "det|the"}, {"%mor:", "n|boy"}};
  CHECK(extract_participant(only_mor).empty());

  RawChatDocument with_gra;
  with_gra.lines = {{"*PAR:", "the boy falls ."}, {"%gra:", "1|2|DET"}};
  CHECK(extract_participant(with_gra) == std::vector<std::string>{"the boy falls ."});
}

TEST_CASE("normalize_utterance fixture corpus", "[chat_parser]") {
  for (const auto& [raw, expected] : kNormalizationFixtures) {
    INFO("raw: " << raw);
    CHECK(normalize_utterance(raw) == expected);
  }
}

TEST_CASE("normalize_utterance is idempotent on the fixture corpus", "[chat_parser]") {
  for (const auto& [raw, _] : kNormalizationFixtures) {
    const std::string once = normalize_utterance(raw);
    INFO("raw: " << raw << " -> " << once);
    CHECK(normalize_utterance(once) == once);
  }
}

TEST_CASE("normalize_utterance preserves each clinical cue exactly once", "[chat_parser]") {
  // The three pause marks are mutually non-overlapping substrings, so plain
  // counts are exact.
  auto count = [](const std::string& text, const std::string& needle) {
    size_t n = 0;
    for (size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size())) {
      ++n;
    }
    return n;
  };
  auto count_token = [](const std::string& text, const std::string& want) {
    std::istringstream stream(text);
    std::string token;
    size_t n = 0;
    while (stream >> token) {
      if (token == want) ++n;
    }
    return n;
  };
  for (const auto& [raw, _] : kNormalizationFixtures) {
    const std::string out = normalize_utterance(raw);
    INFO("raw: " << raw << " -> " << out);
    CHECK(count_token(raw, "&uh") == count_token(out, "uh"));
    CHECK(count_token(raw, "&um") == count_token(out, "um"));
    CHECK(count_token(raw, "xxx") == count_token(out, "xxx"));
    CHECK(count(raw, "(.)") == count(out, "(short pause)"));
    CHECK(count(raw, "(..)") == count(out, "(medium pause)"));
    CHECK(count(raw, "(...)") == count(out, "(long pause)"));
  }
}

TEST_CASE("normalized output matches the clean grammar", "[chat_parser]") {
  // words, xxx, parenthesized pause phrases, plain punctuation — nothing else
  const std::regex token_re(R"(^([A-Za-z0-9']+|[.?!,])$)");
  for (const auto& [raw, _] : kNormalizationFixtures) {
    std::string out = normalize_utterance(raw);
    for (const char* phrase : {"(short pause)", "(medium pause)", "(long pause)"}) {
      for (size_t pos = out.find(phrase); pos != std::string::npos; pos = out.find(phrase)) {
        out.erase(pos, std::string(phrase).size());
      }
    }
    std::istringstream stream(out);
    std::string token;
    while (stream >> token) {
      INFO("raw: " << raw << " token: " << token);
      CHECK(std::regex_match(token, token_re));
    }
  }
}

TEST_CASE("build_transcript joins utterances and carries manifest metadata", "[chat_parser]") {
  auto doc = parse_chat(kFullFixture, "S001");
  ManifestEntry entry{"S001", "train", ClassLabel::AD, 23};
  Transcript t = build_transcript(doc, entry);
  CHECK(t.subject_id == "S001");
  CHECK(t.split == "train");
  CHECK(t.label == ClassLabel::AD);
  CHECK(t.mmse == 23);
  CHECK(t.text ==
        "uh the boy is (short pause) taking cookies . "
        "the stool the stool is falling xxx (long pause) . "
        "the water is overflowing in the sink .");
}

TEST_CASE("manifest lookups fail loudly for unknown subjects", "[chat_parser]") {
  Manifest manifest;
  manifest.add({"S001", "train", ClassLabel::AD, 23});
  CHECK_THROWS_WITH(manifest.require("S999"),
                    Catch::Matchers::ContainsSubstring("S999"));
}
