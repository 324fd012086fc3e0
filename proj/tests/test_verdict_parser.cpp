#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <variant>

#include "adprompt/rng.hpp"
#include "adprompt/verdict_parser.hpp"

using namespace adprompt;

namespace {

ParseFailure expect_failure(const std::string& text, bool require_probability = true) {
  auto result = parse_verdict(text, require_probability);
  REQUIRE(std::holds_alternative<ParseFailure>(result));
  return std::get<ParseFailure>(result);
}

Verdict expect_verdict(const std::string& text, bool require_probability = true) {
  auto result = parse_verdict(text, require_probability);
  INFO(text);
  REQUIRE(std::holds_alternative<Verdict>(result));
  return std::get<Verdict>(result);
}

}  // namespace

TEST_CASE("well-formed output parses", "[verdict_parser]") {
  auto v = expect_verdict(
      R"({"comment":"impaired recall","alzheimers_prediction":"YES","probability_score":0.74})");
  CHECK(v.prediction == ClassLabel::AD);
  CHECK(v.probability == 0.74);
  CHECK(v.comment == "impaired recall");
}

TEST_CASE("prose-wrapped JSON is extracted", "[verdict_parser]") {
  auto v = expect_verdict(
      R"(Sure! {"comment":"","alzheimers_prediction":"NO","probability_score":0.12} hope that helps)");
  CHECK(v.prediction == ClassLabel::HC);
  CHECK(v.probability == 0.12);
  CHECK(v.comment.empty());
}

TEST_CASE("an invalid brace group before the object is skipped", "[verdict_parser]") {
  auto v = expect_verdict(
      R"({oops} {"comment":"x","alzheimers_prediction":"YES","probability_score":0.9})");
  CHECK(v.prediction == ClassLabel::AD);
}

TEST_CASE("braces inside JSON strings do not confuse extraction", "[verdict_parser]") {
  auto v = expect_verdict(
      R"({"comment":"odd } brace {","alzheimers_prediction":"NO","probability_score":0.2})");
  CHECK(v.comment == "odd } brace {");
}

TEST_CASE("hedging tokens are invalid predictions", "[verdict_parser]") {
  auto f = expect_failure(
      R"({"comment":"","alzheimers_prediction":"MAYBE","probability_score":0.5})");
  CHECK(f.reason == ParseFailure::Reason::InvalidPrediction);

  // exact match is case-sensitive
  CHECK(expect_failure(
            R"({"comment":"","alzheimers_prediction":"yes","probability_score":0.5})")
            .reason == ParseFailure::Reason::InvalidPrediction);
  CHECK(expect_failure(
            R"({"comment":"","alzheimers_prediction":"UNCERTAIN","probability_score":0.5})")
            .reason == ParseFailure::Reason::InvalidPrediction);
  CHECK(expect_failure(
            R"({"comment":"","alzheimers_prediction":1,"probability_score":0.5})")
            .reason == ParseFailure::Reason::InvalidPrediction);
}

TEST_CASE("probability bounds are enforced", "[verdict_parser]") {
  CHECK(expect_failure(
            R"({"comment":"","alzheimers_prediction":"YES","probability_score":1.3})")
            .reason == ParseFailure::Reason::OutOfRangeProbability);
  CHECK(expect_failure(
            R"({"comment":"","alzheimers_prediction":"NO","probability_score":-0.1})")
            .reason == ParseFailure::Reason::OutOfRangeProbability);
  // boundary values are fine; 0.5 is accepted for ranking
  CHECK(expect_verdict(
            R"({"comment":"","alzheimers_prediction":"NO","probability_score":0.5})")
            .probability == 0.5);
  CHECK(expect_verdict(R"({"comment":"","alzheimers_prediction":"YES","probability_score":1})")
            .probability == 1.0);
}

TEST_CASE("missing or mistyped fields", "[verdict_parser]") {
  auto f = expect_failure(R"({"comment":"","probability_score":0.5})");
  CHECK(f.reason == ParseFailure::Reason::MissingField);
  CHECK(f.missing_field == "alzheimers_prediction");

  f = expect_failure(R"({"comment":"","alzheimers_prediction":"YES"})");
  CHECK(f.reason == ParseFailure::Reason::MissingField);
  CHECK(f.missing_field == "probability_score");

  // wrong JSON type counts as missing
  f = expect_failure(
      R"({"comment":"","alzheimers_prediction":"YES","probability_score":"0.5"})");
  CHECK(f.missing_field == "probability_score");

  f = expect_failure(R"({"alzheimers_prediction":"YES","probability_score":0.5})");
  CHECK(f.missing_field == "comment");
}

TEST_CASE("relaxed schema for the no-proxy ablation", "[verdict_parser]") {
  auto v = expect_verdict(R"({"comment":"c","alzheimers_prediction":"YES"})",
                          /*require_probability=*/false);
  CHECK_FALSE(v.probability.has_value());

  // a present probability is still range-checked
  CHECK(expect_failure(
            R"({"comment":"c","alzheimers_prediction":"YES","probability_score":2.0})",
            /*require_probability=*/false)
            .reason == ParseFailure::Reason::OutOfRangeProbability);
}

TEST_CASE("comment can be demanded or not", "[verdict_parser]") {
  auto result = parse_verdict(R"({"alzheimers_prediction":"NO","probability_score":0.3})",
                              true, /*require_comment=*/false);
  REQUIRE(std::holds_alternative<Verdict>(result));
  CHECK(std::get<Verdict>(result).comment.empty());
}

TEST_CASE("degenerate outputs", "[verdict_parser]") {
  CHECK(expect_failure("").reason == ParseFailure::Reason::EmptyOutput);
  CHECK(expect_failure("  \n\t ").reason == ParseFailure::Reason::EmptyOutput);
  CHECK(expect_failure("I cannot decide.").reason == ParseFailure::Reason::NoJsonObject);
  CHECK(expect_failure("{\"comment\": \"truncated").reason ==
        ParseFailure::Reason::InvalidJson);
  CHECK(expect_failure("{not json}").reason == ParseFailure::Reason::InvalidJson);
  CHECK(expect_failure("[1,2,3]").reason == ParseFailure::Reason::NoJsonObject);
}

TEST_CASE("raw text is always retained", "[verdict_parser]") {
  const std::string text = "gibberish {broken";
  CHECK(expect_failure(text).raw_text == text);
  const std::string good =
      R"({"comment":"x","alzheimers_prediction":"NO","probability_score":0.4})";
  CHECK(expect_verdict(good).raw_text == good);
}

TEST_CASE("parse_verdict is total over random byte strings", "[verdict_parser][property]") {
  SplitMix64 rng(20240901);
  for (int i = 0; i < 10000; ++i) {
    const size_t len = rng.next() % 64;
    std::string s;
    s.reserve(len);
    for (size_t j = 0; j < len; ++j) {
      s += static_cast<char>(rng.next() % 256);
    }
    auto result = parse_verdict(s, i % 2 == 0);  // must not throw
    if (std::holds_alternative<ParseFailure>(result)) {
      CHECK(std::get<ParseFailure>(result).raw_text == s);
    }
  }
}
