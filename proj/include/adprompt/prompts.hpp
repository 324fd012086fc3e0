#pragma once

namespace adprompt {

// Pinned prompt texts. These are versioned resources: runs are reproducible
// only if the instruction bytes are stable, so edits must bump the version
// constant rather than mutate a shipped text.

inline constexpr int kPromptVersion = 1;

// The forced-decision clause; kept as its own constant so configuration
// validation can require its presence verbatim.
inline constexpr const char* kForcedDecisionClause =
    "Always choose the more likely class; never output MAYBE, UNCERTAIN, "
    "UNKNOWN, or any other hedging token.";

inline constexpr const char* kEvalInstructionV1 =
    "You are a clinical evaluator screening for Alzheimer's disease. You will "
    "be shown transcripts of the Cookie Theft picture description task. Judge "
    "each transcript on its linguistic content: discourse coherence, "
    "informativeness, word-finding difficulty, disfluencies, repetitions, and "
    "pauses.\n"
    "\n"
    "For every transcript, respond with exactly one JSON object and nothing "
    "else, containing exactly these 3 fields:\n"
    "  \"comment\": a concise one-line string with your reasoning,\n"
    "  \"alzheimers_prediction\": \"YES\" if the speaker shows Alzheimer's "
    "disease, \"NO\" if the speaker is a healthy control (exactly \"YES\" or "
    "\"NO\", uppercase),\n"
    "  \"probability_score\": a float in [0,1] giving the likelihood that the "
    "speaker has Alzheimer's disease.\n"
    "\n"
    "Always choose the more likely class; never output MAYBE, UNCERTAIN, "
    "UNKNOWN, or any other hedging token.";

// Appended when the comment field is configured as optional.
inline constexpr const char* kOptionalCommentNote =
    "\nThe \"comment\" field is optional; when present it must be a single "
    "line.";

// Placeholder assistant comment for demonstrations whose pool carries no
// generated comment.
inline constexpr const char* kNeutralComment = "Based on the transcript.";

// Instruction for the one-time reasoning-augmented pool construction. The
// generator sees the Cookie Theft image, the transcript, the MMSE score, and
// the true label; the MMSE may shape the probability only, never the comment.
inline constexpr const char* kGenerationInstructionV1 =
    "You are preparing teaching examples for a clinical evaluator that "
    "detects Alzheimer's disease from Cookie Theft picture description "
    "transcripts. You are given the Cookie Theft picture, one speaker's "
    "transcript, the speaker's MMSE score, and the speaker's true diagnosis.\n"
    "\n"
    "Return valid JSON with exactly three fields:\n"
    "  \"comment\": brief reasoning grounded in the transcript (and what the "
    "picture shows), max 100 tokens,\n"
    "  \"alzheimers_prediction\": exactly the provided true label token,\n"
    "  \"probability_score\": a float in [0,1] consistent with the true label "
    "— strictly above 0.5 for YES, strictly below 0.5 for NO — and guided by "
    "the MMSE severity bands provided.\n"
    "\n"
    "The MMSE score must influence only the probability_score, never the "
    "comment text. Do not mention MMSE or any test score in the comment.";

}  // namespace adprompt
