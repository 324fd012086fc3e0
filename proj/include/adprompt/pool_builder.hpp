#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "adprompt/digest.hpp"
#include "adprompt/errors.hpp"
#include "adprompt/exemplar_pool.hpp"
#include "adprompt/llm_client.hpp"
#include "adprompt/manifest.hpp"
#include "adprompt/mmse_proxy.hpp"
#include "adprompt/prompt_builder.hpp"
#include "adprompt/prompts.hpp"
#include "adprompt/verdict_parser.hpp"

namespace adprompt {

// One reasoning-pool generation job. The generator is the only place the
// Cookie Theft image and the MMSE score are ever used; evaluation stays
// transcript-only.
struct GenerationTask {
  std::string subject_id;
  std::string transcript_text;
  std::optional<int> mmse;
  ClassLabel label = ClassLabel::HC;
  std::string image_path;
};

struct GenerationConstraints {
  size_t max_comment_tokens = 100;  // whitespace-delimited
  int max_attempts = 3;
};

namespace detail {

inline std::string mmse_band_table_text() {
  return "MMSE severity bands: 30 no impairment; 26-29 questionable; 21-25 mild; "
         "11-20 moderate; 0-10 severe.";
}

}  // namespace detail

// Messages for one generation call. The image is attached by
// complete_multimodal; this builds the text side: true label, MMSE with its
// band and the full band table (probability guidance), the side-of-0.5 rule,
// and the transcript. Retries append the violations of the prior attempt.
inline std::vector<Message> build_generation_prompt(
    const GenerationTask& task, int attempt = 1,
    const std::vector<std::string>& prior_violations = {}) {
  if (!task.mmse) {
    throw DataError("subject '" + task.subject_id +
                    "': reasoning pool generation requires an MMSE score");
  }
  const bool ad = task.label == ClassLabel::AD;
  std::string user;
  user += "True label: " + to_string(task.label) + " (alzheimers_prediction must be exactly \"";
  user += ad ? "YES" : "NO";
  user += "\")\n";
  user += "MMSE score: " + std::to_string(*task.mmse) + " (band: " +
          to_string(mmse_band(*task.mmse)) + ")\n";
  user += detail::mmse_band_table_text() + "\n";
  user += std::string("Required probability_score side: strictly ") +
          (ad ? "above" : "below") + " 0.5\n";
  user += "Transcript:\n" + task.transcript_text;
  if (attempt > 1) {
    user += "\n\nAttempt " + std::to_string(attempt) +
            ": the previous output was rejected for:";
    for (const auto& v : prior_violations) user += "\n- " + v;
    user += "\nProduce a corrected JSON object.";
  }
  return {Message{Role::system, kGenerationInstructionV1}, Message{Role::user, user}};
}

struct GenerationValidation {
  std::optional<Exemplar> exemplar;  // set iff violations is empty
  std::vector<std::string> violations;
};

// Checks one parsed generation against the pool constraints: prediction must
// equal the true label (exact token), probability strictly on the label's
// side of 0.5, comment non-empty and within the token budget.
inline GenerationValidation validate_generated(const Verdict& verdict,
                                               const GenerationTask& task,
                                               const GenerationConstraints& constraints = {}) {
  GenerationValidation result;
  if (verdict.prediction != task.label) {
    result.violations.push_back("alzheimers_prediction '" + verdict.prediction_token() +
                                "' does not match the true label '" +
                                (task.label == ClassLabel::AD ? std::string("YES")
                                                              : std::string("NO")) +
                                "'");
  }
  if (!verdict.probability) {
    result.violations.push_back("probability_score missing");
  } else if (task.label == ClassLabel::AD ? *verdict.probability <= 0.5
                                          : *verdict.probability >= 0.5) {
    result.violations.push_back(
        "probability_score " + std::to_string(*verdict.probability) + " not strictly " +
        (task.label == ClassLabel::AD ? "above" : "below") + " 0.5");
  }
  if (verdict.comment.empty()) {
    result.violations.push_back("comment is empty");
  } else if (detail::count_ws_tokens(verdict.comment) > constraints.max_comment_tokens) {
    result.violations.push_back("comment exceeds " +
                                std::to_string(constraints.max_comment_tokens) + " tokens");
  }
  if (!result.violations.empty()) return result;

  Exemplar e;
  e.id = task.subject_id;
  e.transcript = task.transcript_text;
  e.label = task.label;
  e.mmse = task.mmse;
  e.probability = verdict.probability;
  e.probability_text = nlohmann::json(*verdict.probability).dump();
  e.comment = verdict.comment;
  result.exemplar = std::move(e);
  return result;
}

struct UnfilledTask {
  std::string subject_id;
  int attempts = 0;
  std::vector<std::string> last_violations;
};

struct PoolBuildReport {
  std::vector<Exemplar> accepted;
  std::vector<UnfilledTask> unfilled;
};

// Drives the generator over all tasks. Violating generations are retried up
// to the attempt limit with the violations fed back; tasks still unfilled are
// reported, never silently dropped. Output order is deterministic (sorted by
// subject id at freeze time).
inline PoolBuildReport build_reasoning_pool(const std::vector<GenerationTask>& tasks,
                                            LlmClient& client, const SamplingParams& params,
                                            const GenerationConstraints& constraints = {}) {
  PoolBuildReport report;
  for (const auto& task : tasks) {
    std::vector<std::string> violations;
    bool filled = false;
    int attempt = 0;
    for (attempt = 1; attempt <= constraints.max_attempts; ++attempt) {
      auto messages = build_generation_prompt(task, attempt, violations);
      const std::string response =
          client.complete_multimodal(messages, task.image_path, params);
      auto parsed = parse_verdict(response, /*require_probability=*/true);
      if (std::holds_alternative<ParseFailure>(parsed)) {
        const auto& failure = std::get<ParseFailure>(parsed);
        violations = {"output failed schema parsing: " + to_string(failure.reason)};
        continue;
      }
      auto validation = validate_generated(std::get<Verdict>(parsed), task, constraints);
      if (validation.exemplar) {
        report.accepted.push_back(std::move(*validation.exemplar));
        filled = true;
        break;
      }
      violations = std::move(validation.violations);
    }
    if (!filled) {
      report.unfilled.push_back({task.subject_id, constraints.max_attempts, violations});
    }
  }
  return report;
}

// Writes the frozen pool plus its digest manifest (per-record content hash
// and a whole-pool hash) so downstream runs can verify the artifact byte for
// byte. With a manifest, train-split membership is enforced as a hard error.
inline void freeze_pool(const std::vector<Exemplar>& accepted, const std::string& path,
                        const Manifest* manifest = nullptr) {
  std::set<std::string> ids;
  std::vector<std::string> leaked;
  for (const auto& e : accepted) {
    if (!ids.insert(e.id).second) {
      throw DataError("freeze_pool: duplicate subject '" + e.id + "'");
    }
    if (manifest && manifest->require(e.id).split != "train") leaked.push_back(e.id);
  }
  if (!leaked.empty()) throw LeakageError(std::move(leaked));

  ExemplarPool pool;
  pool.kind = PoolKind::reasoning_augmented;
  for (const auto& e : accepted) {
    detail::validate_exemplar(e, pool.kind);
    (e.label == ClassLabel::AD ? pool.ad : pool.hc).push_back(e);
  }
  save_pool(pool, path);

  nlohmann::json digest;
  digest["pool_sha256"] = sha256_hex_file(path);
  nlohmann::json records = nlohmann::json::object();
  std::vector<const Exemplar*> sorted;
  for (const auto& e : accepted) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(),
            [](const Exemplar* a, const Exemplar* b) { return a->id < b->id; });
  for (const auto* e : sorted) records[e->id] = sha256_hex(pool_record_line(*e));
  digest["records"] = std::move(records);
  std::ofstream out(path + ".digest.json", std::ios::binary);
  if (!out) throw DataError("cannot write digest manifest for '" + path + "'");
  out << digest.dump(2) << "\n";
}

}  // namespace adprompt
