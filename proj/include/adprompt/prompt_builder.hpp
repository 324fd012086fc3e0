#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "adprompt/errors.hpp"
#include "adprompt/exemplar_pool.hpp"
#include "adprompt/prompts.hpp"

namespace adprompt {

enum class Role { system, user, assistant };

inline std::string to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "?";
}

struct Message {
  Role role = Role::user;
  std::string content;
};

struct PromptConfig {
  std::string instruction_text = kEvalInstructionV1;
  bool include_probability_field = true;  // false = no-proxy ablation
  bool include_comment_field = true;
};

// Role-tagged message sequence for one evaluation: instruction, k AD + k HC
// demonstrations as user/assistant pairs, then the bare test transcript.
struct PromptBundle {
  std::vector<Message> messages;
  int k = 0;
  std::string mode;
};

// Returns the instruction for this configuration after checking that it
// names every required output field and contains the forced-decision clause.
inline std::string build_instruction(const PromptConfig& config) {
  const char* required[] = {"comment", "alzheimers_prediction", "probability_score"};
  for (const char* field : required) {
    if (config.instruction_text.find(field) == std::string::npos) {
      throw ConfigError(std::string("instruction text does not name required output field '") +
                        field + "'");
    }
  }
  if (config.instruction_text.find("never output MAYBE") == std::string::npos) {
    throw ConfigError("instruction text lacks the forced-decision clause");
  }
  std::string instruction = config.instruction_text;
  if (!config.include_comment_field) instruction += kOptionalCommentNote;
  return instruction;
}

// One demonstration: the exemplar transcript as a user turn, the target JSON
// as the assistant turn. Field order matches the documented schema (comment,
// alzheimers_prediction, probability_score); the probability token comes from
// the exemplar so proxy pools show two decimals and reasoning pools show the
// generated value.
inline std::pair<Message, Message> render_exemplar(const Exemplar& e,
                                                   const PromptConfig& config) {
  if (e.probability) {
    const double p = *e.probability;
    if ((e.label == ClassLabel::AD && p < 0.5) || (e.label == ClassLabel::HC && p >= 0.5)) {
      throw DataError("exemplar '" + e.id + "': probability " + std::to_string(p) +
                      " inconsistent with label " + to_string(e.label));
    }
  } else if (config.include_probability_field) {
    throw DataError("exemplar '" + e.id +
                    "' has no probability but the prompt configuration requires one");
  }

  std::string body = "{";
  if (config.include_comment_field) {
    const std::string& comment = e.comment ? *e.comment : std::string(kNeutralComment);
    body += "\"comment\": " + nlohmann::json(comment).dump() + ", ";
  }
  body += "\"alzheimers_prediction\": \"";
  body += e.label == ClassLabel::AD ? "YES" : "NO";
  body += "\"";
  if (config.include_probability_field) {
    body += ", \"probability_score\": ";
    body += e.probability_text.empty() ? nlohmann::json(*e.probability).dump()
                                       : e.probability_text;
  }
  body += "}";
  return {Message{Role::user, e.transcript}, Message{Role::assistant, std::move(body)}};
}

// [system(instruction)] + one user/assistant pair per exemplar, in order,
// + user(test transcript): 2 + 4k messages. The exemplar sequence must be the
// balanced AD-first alternation produced by select().
inline PromptBundle assemble_prompt(const std::string& instruction,
                                    const std::vector<Exemplar>& exemplars,
                                    const std::string& test_text,
                                    const PromptConfig& config,
                                    std::string mode = "") {
  if (test_text.empty()) throw DataError("assemble_prompt: empty test transcript");
  if (exemplars.size() % 2 != 0) {
    throw DomainError("exemplar sequence must hold k AD + k HC pairs, got odd length " +
                      std::to_string(exemplars.size()));
  }
  for (size_t i = 0; i < exemplars.size(); ++i) {
    const ClassLabel expected = (i % 2 == 0) ? ClassLabel::AD : ClassLabel::HC;
    if (exemplars[i].label != expected) {
      throw DomainError("exemplar sequence breaks AD-first alternation at position " +
                        std::to_string(i));
    }
  }

  PromptBundle bundle;
  bundle.k = static_cast<int>(exemplars.size() / 2);
  bundle.mode = std::move(mode);
  bundle.messages.reserve(2 + exemplars.size() * 2);
  bundle.messages.push_back({Role::system, instruction});
  for (const auto& e : exemplars) {
    auto [user, assistant] = render_exemplar(e, config);
    bundle.messages.push_back(std::move(user));
    bundle.messages.push_back(std::move(assistant));
  }
  bundle.messages.push_back({Role::user, test_text});
  return bundle;
}

}  // namespace adprompt
