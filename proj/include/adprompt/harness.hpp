#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "adprompt/chat_parser.hpp"
#include "adprompt/digest.hpp"
#include "adprompt/errors.hpp"
#include "adprompt/exemplar_pool.hpp"
#include "adprompt/llm_client.hpp"
#include "adprompt/manifest.hpp"
#include "adprompt/metrics.hpp"
#include "adprompt/mmse_proxy.hpp"
#include "adprompt/prompt_builder.hpp"
#include "adprompt/verdict_parser.hpp"

namespace adprompt {

// Official ADReSS split sizes; the counts check engages only when a manifest
// holds the full cohort.
inline constexpr size_t kFullCohortSize = 156;
inline constexpr size_t kOfficialTrainSize = 108;
inline constexpr size_t kOfficialTestSize = 48;
inline constexpr size_t kOfficialPerClassSize = 78;

struct SweepConfig {
  std::string manifest_path;
  std::string chat_dir;          // directory of <subject_id>.cha files
  std::string transcripts_path;  // or: combined JSONL written by `normalize`
  std::string proxy_pool_path;      // mmse_proxy / no_proxy / tfidf modes
  std::string reasoning_pool_path;  // reasoning mode
  std::vector<std::string> modes;
  std::vector<int> k_values;                 // default 0..20
  std::vector<uint64_t> seeds = {1, 2, 3};
  BackendConfig backend;
  SamplingParams sampling;
  CacheMode cache_mode = CacheMode::off;
  std::string cache_dir;
  std::string output_dir;
  PromptConfig prompt;  // instruction text override for sensitivity studies
};

inline constexpr int kMaxExamplesPerClass = 20;  // harness policy

inline const std::vector<std::string>& known_modes() {
  static const std::vector<std::string> modes = {"mmse_proxy", "no_proxy", "reasoning",
                                                 "tfidf"};
  return modes;
}

// Parses the JSON sweep-config document. Unknown modes, out-of-policy k, and
// missing pool paths are configuration errors before any data is touched.
inline SweepConfig load_sweep_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("sweep config must be a JSON object");
  SweepConfig cfg;
  cfg.manifest_path = doc.value("manifest", "");
  if (cfg.manifest_path.empty()) throw ConfigError("config field 'manifest' is required");
  cfg.chat_dir = doc.value("chat_dir", "");
  cfg.transcripts_path = doc.value("transcripts", "");
  if (cfg.chat_dir.empty() == cfg.transcripts_path.empty()) {
    throw ConfigError("exactly one of 'chat_dir' and 'transcripts' must be set");
  }
  if (doc.contains("pools")) {
    cfg.proxy_pool_path = doc["pools"].value("proxy", "");
    cfg.reasoning_pool_path = doc["pools"].value("reasoning", "");
  }
  if (!doc.contains("modes") || !doc["modes"].is_array() || doc["modes"].empty()) {
    throw ConfigError("config field 'modes' must be a non-empty array");
  }
  for (const auto& m : doc["modes"]) {
    const std::string mode = m.get<std::string>();
    const auto& known = known_modes();
    if (std::find(known.begin(), known.end(), mode) == known.end()) {
      throw ConfigError("unknown mode '" + mode + "'");
    }
    if (mode == "reasoning" && cfg.reasoning_pool_path.empty()) {
      throw ConfigError("mode 'reasoning' requires pools.reasoning");
    }
    if (mode != "reasoning" && cfg.proxy_pool_path.empty()) {
      throw ConfigError("mode '" + mode + "' requires pools.proxy");
    }
    cfg.modes.push_back(mode);
  }
  if (doc.contains("k_values")) {
    for (const auto& k : doc["k_values"]) cfg.k_values.push_back(k.get<int>());
  } else {
    const int k_min = doc.value("k_min", 0);
    const int k_max = doc.value("k_max", 20);
    if (k_min > k_max) throw ConfigError("k_min exceeds k_max");
    for (int k = k_min; k <= k_max; ++k) cfg.k_values.push_back(k);
  }
  for (int k : cfg.k_values) {
    if (k < 0 || k > kMaxExamplesPerClass) {
      throw ConfigError("k=" + std::to_string(k) + " outside harness policy 0.." +
                        std::to_string(kMaxExamplesPerClass));
    }
  }
  if (doc.contains("seeds")) {
    cfg.seeds.clear();
    for (const auto& s : doc["seeds"]) cfg.seeds.push_back(s.get<uint64_t>());
    if (cfg.seeds.empty()) throw ConfigError("'seeds' must be non-empty");
  }
  if (doc.contains("backend")) {
    const auto& b = doc["backend"];
    cfg.backend.endpoint_url = b.value("endpoint_url", "");
    cfg.backend.completions_path = b.value("completions_path", cfg.backend.completions_path);
    cfg.backend.model_id = b.value("model_id", "");
    cfg.backend.api_key_env_var = b.value("api_key_env_var", "");
    cfg.backend.timeout_s = b.value("timeout_s", cfg.backend.timeout_s);
    cfg.backend.max_retries = b.value("max_retries", cfg.backend.max_retries);
    cfg.backend.retry_backoff_ms = b.value("retry_backoff_ms", cfg.backend.retry_backoff_ms);
    cfg.backend.max_in_flight = b.value("max_in_flight", cfg.backend.max_in_flight);
    cfg.backend.supports_images = b.value("supports_images", cfg.backend.supports_images);
    cfg.backend.supports_top_k = b.value("supports_top_k", cfg.backend.supports_top_k);
  }
  if (doc.contains("sampling")) {
    const auto& s = doc["sampling"];
    cfg.sampling.temperature = s.value("temperature", cfg.sampling.temperature);
    cfg.sampling.top_k = s.value("top_k", cfg.sampling.top_k);
    cfg.sampling.top_p = s.value("top_p", cfg.sampling.top_p);
    cfg.sampling.max_output_tokens =
        s.value("max_output_tokens", cfg.sampling.max_output_tokens);
  }
  const std::string mode_str = doc.value("cache_mode", "off");
  if (mode_str == "off") {
    cfg.cache_mode = CacheMode::off;
  } else if (mode_str == "record") {
    cfg.cache_mode = CacheMode::record;
  } else if (mode_str == "replay") {
    cfg.cache_mode = CacheMode::replay;
  } else {
    throw ConfigError("cache_mode must be off|record|replay");
  }
  cfg.cache_dir = doc.value("cache_dir", "");
  if (cfg.cache_mode != CacheMode::off && cfg.cache_dir.empty()) {
    throw ConfigError("cache_mode '" + mode_str + "' requires cache_dir");
  }
  cfg.output_dir = doc.value("output_dir", "");
  if (doc.contains("instruction_text")) {
    cfg.prompt.instruction_text = doc["instruction_text"].get<std::string>();
  }
  return cfg;
}

inline SweepConfig load_sweep_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
  return load_sweep_config(doc);
}

// ---------------------------------------------------------------------------
// Data loading

inline std::map<std::string, Transcript> load_chat_transcripts(const std::string& chat_dir,
                                                               const Manifest& manifest) {
  std::map<std::string, Transcript> out;
  for (const auto& id : manifest.subjects()) {
    const auto path = std::filesystem::path(chat_dir) / (id + ".cha");
    if (!std::filesystem::exists(path)) {
      throw DataError("missing CHAT file for subject '" + id + "': " + path.string());
    }
    auto doc = parse_chat(read_file_bytes(path.string()), id);
    out.emplace(id, build_transcript(doc, manifest.require(id)));
  }
  return out;
}

inline std::string transcript_record_line(const Transcript& t) {
  std::string line = "{\"subject_id\":" + nlohmann::json(t.subject_id).dump();
  line += ",\"text\":" + nlohmann::json(t.text).dump();
  line += ",\"split\":\"" + t.split + "\"";
  if (t.label) line += ",\"label\":\"" + to_string(*t.label) + "\"";
  if (t.mmse) line += ",\"mmse\":" + std::to_string(*t.mmse);
  line += "}";
  return line;
}

inline std::map<std::string, Transcript> load_transcripts_jsonl(const std::string& path,
                                                                const Manifest& manifest) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open transcripts file '" + path + "'");
  std::map<std::string, Transcript> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("subject_id") ||
        !rec.contains("text")) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": transcript record needs subject_id and text");
    }
    Transcript t;
    t.subject_id = rec["subject_id"].get<std::string>();
    t.text = rec["text"].get<std::string>();
    const auto& entry = manifest.require(t.subject_id);
    t.split = entry.split;
    t.label = entry.label;
    t.mmse = entry.mmse;
    if (!out.emplace(t.subject_id, std::move(t)).second) {
      throw DataError(path + ": duplicate transcript for subject '" +
                      rec["subject_id"].get<std::string>() + "'");
    }
  }
  return out;
}

// Writes one normalized .txt per subject plus the combined JSONL; returns the
// transcripts keyed by subject.
inline std::map<std::string, Transcript> run_normalize(const std::string& chat_dir,
                                                       const Manifest& manifest,
                                                       const std::string& out_dir) {
  auto transcripts = load_chat_transcripts(chat_dir, manifest);
  std::filesystem::create_directories(out_dir);
  std::ofstream combined(std::filesystem::path(out_dir) / "transcripts.jsonl",
                         std::ios::binary);
  if (!combined) throw DataError("cannot write to output directory '" + out_dir + "'");
  for (const auto& id : manifest.subjects()) {
    const auto& t = transcripts.at(id);
    std::ofstream single(std::filesystem::path(out_dir) / (id + ".txt"), std::ios::binary);
    single << t.text << "\n";
    combined << transcript_record_line(t) << "\n";
  }
  return transcripts;
}

// Builds the MMSE-proxy pool from the train split. Subjects without an MMSE
// score cannot receive a proxy probability: hard error unless skipping is
// requested explicitly.
inline ExemplarPool make_proxy_pool(const Manifest& manifest,
                                    const std::map<std::string, Transcript>& transcripts,
                                    bool skip_missing_mmse = false) {
  ExemplarPool pool;
  pool.kind = PoolKind::mmse_proxy;
  for (const auto& id : manifest.subjects("train")) {
    const auto& entry = manifest.require(id);
    if (!entry.label) throw DataError("train subject '" + id + "' has no label");
    if (!entry.mmse) {
      if (skip_missing_mmse) {
        std::fprintf(stderr, "warning: skipping train subject '%s' (no MMSE score)\n",
                     id.c_str());
        continue;
      }
      throw DataError("train subject '" + id +
                      "' has no MMSE score (pass --skip-missing-mmse to drop such subjects)");
    }
    auto it = transcripts.find(id);
    if (it == transcripts.end()) throw DataError("no transcript for train subject '" + id + "'");
    Exemplar e;
    e.id = id;
    e.transcript = it->second.text;
    e.label = *entry.label;
    e.mmse = entry.mmse;
    e.probability = proxy_probability(*entry.label, *entry.mmse);
    e.probability_text = format_proxy_probability(*e.probability, e.label);
    (e.label == ClassLabel::AD ? pool.ad : pool.hc).push_back(std::move(e));
  }
  return pool;
}

// ---------------------------------------------------------------------------
// Split hygiene

// Confirms the official 108/48 train/test and 78/78 class counts whenever the
// manifest holds the full cohort, and that no pool exemplar comes from the
// test split. Fixture-sized manifests get the disjointness check only, with a
// notice saying so.
inline std::string verify_split(const Manifest& manifest,
                                const std::vector<const ExemplarPool*>& pools) {
  std::string notice;
  if (manifest.size() == kFullCohortSize) {
    size_t train = 0, test = 0, ad = 0, hc = 0;
    for (const auto& id : manifest.subjects()) {
      const auto& e = manifest.require(id);
      (e.split == "train" ? train : test) += 1;
      if (e.label) (*e.label == ClassLabel::AD ? ad : hc) += 1;
    }
    if (train != kOfficialTrainSize || test != kOfficialTestSize) {
      throw DataError("full-cohort manifest has " + std::to_string(train) + "/" +
                      std::to_string(test) + " train/test subjects; expected 108/48");
    }
    if (ad != kOfficialPerClassSize || hc != kOfficialPerClassSize) {
      throw DataError("full-cohort manifest has " + std::to_string(ad) + "/" +
                      std::to_string(hc) + " AD/HC subjects; expected 78/78");
    }
    notice = "official split confirmed: 108 train / 48 test, 78 AD / 78 HC";
  } else {
    notice = "fixture manifest (" + std::to_string(manifest.size()) +
             " subjects): official counts check skipped, disjointness enforced";
  }

  std::vector<std::string> leaked;
  for (const auto* pool : pools) {
    for (const auto* list : {&pool->ad, &pool->hc}) {
      for (const auto& e : *list) {
        if (!manifest.contains(e.id)) {
          throw DataError("pool exemplar '" + e.id + "' not present in manifest");
        }
        if (manifest.require(e.id).split != "train") leaked.push_back(e.id);
      }
    }
  }
  if (!leaked.empty()) {
    std::sort(leaked.begin(), leaked.end());
    throw LeakageError(std::move(leaked));
  }
  return notice;
}

// ---------------------------------------------------------------------------
// Sweep

struct SubjectOutcome {
  std::string subject_id;
  std::string cache_key;
  bool parsed = false;
  std::string prediction;  // "YES"/"NO" when parsed
  std::optional<double> probability;
  std::string failure_reason;  // ParseFailure reason name when not parsed
  bool correct = false;
};

struct RunResult {
  RunMetrics metrics;
  std::vector<SubjectOutcome> subjects;
};

struct EvalReport {
  std::vector<RunResult> runs;
  std::vector<GroupAggregate> aggregates;
  nlohmann::json config_snapshot;
  std::map<std::string, std::string> pool_digests;  // path -> sha256
  std::string split_notice;
};

namespace detail {

struct ModeSpec {
  const ExemplarPool* pool = nullptr;
  SelectionStrategy strategy = SelectionStrategy::nested_random;
  bool render_probability = true;
  bool require_probability = true;
};

inline ModeSpec resolve_mode(const std::string& mode, const ExemplarPool* proxy,
                             const ExemplarPool* reasoning) {
  ModeSpec spec;
  if (mode == "mmse_proxy") {
    spec.pool = proxy;
  } else if (mode == "no_proxy") {
    spec.pool = proxy;
    spec.render_probability = false;
    spec.require_probability = false;
  } else if (mode == "reasoning") {
    spec.pool = reasoning;
  } else if (mode == "tfidf") {
    spec.pool = proxy;
    spec.strategy = SelectionStrategy::tfidf;
  } else {
    throw ConfigError("unknown mode '" + mode + "'");
  }
  return spec;
}

// Rough context-size guard: chat models cap the prompt, the harness only
// warns (the ceiling is backend-specific).
inline void warn_if_large_prompt(const PromptBundle& bundle, const std::string& mode) {
  size_t chars = 0;
  for (const auto& m : bundle.messages) chars += m.content.size();
  const size_t approx_tokens = chars / 4;
  if (approx_tokens > 28000) {
    std::fprintf(stderr,
                 "warning: %s k=%d prompt is ~%zu tokens; may exceed the backend's "
                 "context window\n",
                 mode.c_str(), bundle.k, approx_tokens);
  }
}

}  // namespace detail

// Runs the full (mode, seed, k) sweep over the test split: select
// demonstrations, assemble the prompt per test subject, complete, parse,
// score. Completions within one run execute concurrently (bounded by the
// client); results are re-sorted by subject before scoring. Raw completions
// live in the cache; the report carries the cache key per subject. A hard
// subject-level error aborts the sweep after dumping a partial report for
// diagnosis.
inline EvalReport run_sweep(const SweepConfig& config,
                            std::shared_ptr<HttpTransport> transport = nullptr) {
  const Manifest manifest = load_manifest(config.manifest_path);
  const auto transcripts =
      config.chat_dir.empty() ? load_transcripts_jsonl(config.transcripts_path, manifest)
                              : load_chat_transcripts(config.chat_dir, manifest);

  std::optional<ExemplarPool> proxy_pool;
  std::optional<ExemplarPool> reasoning_pool;
  EvalReport report;
  const bool needs_proxy =
      std::any_of(config.modes.begin(), config.modes.end(),
                  [](const std::string& m) { return m != "reasoning"; });
  const bool needs_reasoning =
      std::any_of(config.modes.begin(), config.modes.end(),
                  [](const std::string& m) { return m == "reasoning"; });
  std::vector<const ExemplarPool*> pools;
  if (needs_proxy) {
    proxy_pool = load_pool(config.proxy_pool_path, &manifest);
    report.pool_digests[config.proxy_pool_path] = sha256_hex_file(config.proxy_pool_path);
    pools.push_back(&*proxy_pool);
  }
  if (needs_reasoning) {
    reasoning_pool = load_pool(config.reasoning_pool_path, &manifest);
    report.pool_digests[config.reasoning_pool_path] =
        sha256_hex_file(config.reasoning_pool_path);
    pools.push_back(&*reasoning_pool);
  }
  report.split_notice = verify_split(manifest, pools);

  std::vector<const Transcript*> test_subjects;
  for (const auto& id : manifest.subjects("test")) {
    const auto& entry = manifest.require(id);
    if (!entry.label) throw DataError("test subject '" + id + "' has no label to score against");
    test_subjects.push_back(&transcripts.at(id));
  }
  if (test_subjects.empty()) throw DataError("manifest has no test subjects");
  std::sort(test_subjects.begin(), test_subjects.end(),
            [](const Transcript* a, const Transcript* b) {
              return a->subject_id < b->subject_id;
            });

  auto cache = config.cache_mode == CacheMode::off
                   ? nullptr
                   : std::make_shared<CompletionCache>(config.cache_dir);
  LlmClient client(config.backend, config.cache_mode, cache, std::move(transport));

  report.config_snapshot = {
      {"manifest", config.manifest_path},
      {"modes", config.modes},
      {"k_values", config.k_values},
      {"seeds", config.seeds},
      {"model_id", config.backend.model_id},
      {"sampling",
       {{"temperature", config.sampling.temperature},
        {"top_k", config.sampling.top_k},
        {"top_p", config.sampling.top_p},
        {"max_output_tokens", config.sampling.max_output_tokens}}},
      {"prompt_version", kPromptVersion},
  };

  auto dump_partial = [&report, &config](const std::string& why) {
    if (config.output_dir.empty()) return;
    std::filesystem::create_directories(config.output_dir);
    nlohmann::json doc;
    doc["aborted"] = why;
    doc["completed_runs"] = report.runs.size();
    std::ofstream out(std::filesystem::path(config.output_dir) / "partial_report.json");
    out << doc.dump(2) << "\n";
  };

  try {
    for (const auto& mode : config.modes) {
      const auto spec =
          detail::resolve_mode(mode, proxy_pool ? &*proxy_pool : nullptr,
                               reasoning_pool ? &*reasoning_pool : nullptr);
      PromptConfig prompt_config = config.prompt;
      prompt_config.include_probability_field = spec.render_probability;
      const std::string instruction = build_instruction(prompt_config);

      for (const auto seed : config.seeds) {
        for (const int k : config.k_values) {
          // nested_random selection is global for the run; tfidf re-ranks per
          // subject below. k=0 skips selection entirely.
          std::vector<Exemplar> global_selection;
          if (k > 0 && spec.strategy == SelectionStrategy::nested_random) {
            global_selection =
                select(*spec.pool, {spec.strategy, k, seed});
          }

          std::vector<SubjectOutcome> outcomes(test_subjects.size());
          std::vector<LabeledOutcome> labeled(test_subjects.size());
          std::atomic<size_t> next{0};
          std::exception_ptr first_error;
          std::mutex error_mutex;

          auto worker = [&] {
            for (;;) {
              const size_t i = next.fetch_add(1);
              if (i >= test_subjects.size()) return;
              const Transcript& subject = *test_subjects[i];
              try {
                std::vector<Exemplar> selection;
                const std::vector<Exemplar>* chosen = &global_selection;
                if (k > 0 && spec.strategy == SelectionStrategy::tfidf) {
                  selection = select(*spec.pool, {spec.strategy, k, seed}, subject.text);
                  chosen = &selection;
                }
                PromptBundle bundle =
                    assemble_prompt(instruction, *chosen, subject.text, prompt_config, mode);
                detail::warn_if_large_prompt(bundle, mode);
                const std::string key = cache_key(config.backend.model_id, config.sampling,
                                                  bundle.messages);
                const std::string response =
                    client.complete(bundle.messages, config.sampling);
                auto parsed = parse_verdict(response, spec.require_probability);

                SubjectOutcome& outcome = outcomes[i];
                outcome.subject_id = subject.subject_id;
                outcome.cache_key = key;
                if (std::holds_alternative<Verdict>(parsed)) {
                  const auto& verdict = std::get<Verdict>(parsed);
                  outcome.parsed = true;
                  outcome.prediction = verdict.prediction_token();
                  outcome.probability = verdict.probability;
                  outcome.correct = verdict.prediction == *subject.label;
                } else {
                  outcome.failure_reason = to_string(std::get<ParseFailure>(parsed).reason);
                }
                labeled[i] = {subject.subject_id, *subject.label, std::move(parsed)};
              } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(test_subjects.size());
                return;
              }
            }
          };

          const size_t n_workers = std::min<size_t>(
              std::max(1, config.backend.max_in_flight), test_subjects.size());
          std::vector<std::thread> threads;
          for (size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
          for (auto& t : threads) t.join();
          if (first_error) std::rethrow_exception(first_error);

          RunResult result;
          result.metrics = compute_run_metrics(labeled, mode, k, seed);
          result.subjects = std::move(outcomes);
          report.runs.push_back(std::move(result));
        }
      }
    }
  } catch (const std::exception& e) {
    dump_partial(e.what());
    throw;
  }

  std::vector<RunMetrics> metrics;
  metrics.reserve(report.runs.size());
  for (const auto& r : report.runs) metrics.push_back(r.metrics);
  report.aggregates = aggregate(metrics);
  return report;
}

// ---------------------------------------------------------------------------
// Report emission

namespace detail {

inline std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string fmt6_opt(const std::optional<double>& v) {
  return v ? fmt6(*v) : std::string();
}

}  // namespace detail

// Writes runs.csv (one row per mode/k/seed), aggregate.csv (mean +/- std per
// mode/k), curve.csv (plot-ready means vs k), and report.json (per-subject
// outcomes, config snapshot, pool digests). All writers are deterministic:
// fixed float formatting, rows sorted, no timestamps — a replayed sweep
// reproduces these files byte for byte.
inline void emit_reports(const EvalReport& report, const std::string& output_dir) {
  std::filesystem::create_directories(output_dir);
  const auto dir = std::filesystem::path(output_dir);

  std::vector<const RunResult*> runs;
  for (const auto& r : report.runs) runs.push_back(&r);
  std::sort(runs.begin(), runs.end(), [](const RunResult* a, const RunResult* b) {
    return std::tie(a->metrics.mode, a->metrics.k, a->metrics.seed) <
           std::tie(b->metrics.mode, b->metrics.k, b->metrics.seed);
  });

  {
    std::ofstream out(dir / "runs.csv", std::ios::binary);
    if (!out) throw DataError("cannot write runs.csv in '" + output_dir + "'");
    out << "mode,k,seed,accuracy,auc,n_failures,n_total\n";
    for (const auto* r : runs) {
      const auto& m = r->metrics;
      out << m.mode << ',' << m.k << ',' << m.seed << ','
          << detail::fmt6_opt(m.accuracy) << ',' << detail::fmt6_opt(m.auc) << ','
          << m.n_failures << ',' << m.n_total << "\n";
    }
  }

  std::vector<const GroupAggregate*> groups;
  for (const auto& g : report.aggregates) groups.push_back(&g);
  std::sort(groups.begin(), groups.end(), [](const GroupAggregate* a, const GroupAggregate* b) {
    return std::tie(a->mode, a->k) < std::tie(b->mode, b->k);
  });

  {
    std::ofstream out(dir / "aggregate.csv", std::ios::binary);
    out << "mode,k,n_runs,accuracy_mean,accuracy_std,auc_mean,auc_std,total_failures\n";
    for (const auto* g : groups) {
      out << g->mode << ',' << g->k << ',' << g->n_runs << ','
          << (g->accuracy ? detail::fmt6(g->accuracy->mean) : std::string()) << ','
          << (g->accuracy ? detail::fmt6(g->accuracy->std) : std::string()) << ','
          << (g->auc ? detail::fmt6(g->auc->mean) : std::string()) << ','
          << (g->auc ? detail::fmt6(g->auc->std) : std::string()) << ','
          << g->total_failures << "\n";
    }
  }

  {
    std::ofstream out(dir / "curve.csv", std::ios::binary);
    out << "mode,k,accuracy_mean,auc_mean\n";
    for (const auto* g : groups) {
      out << g->mode << ',' << g->k << ','
          << (g->accuracy ? detail::fmt6(g->accuracy->mean) : std::string()) << ','
          << (g->auc ? detail::fmt6(g->auc->mean) : std::string()) << "\n";
    }
  }

  {
    nlohmann::json doc;
    doc["config"] = report.config_snapshot;
    doc["split_notice"] = report.split_notice;
    doc["pool_digests"] = report.pool_digests;
    nlohmann::json jruns = nlohmann::json::array();
    for (const auto* r : runs) {
      nlohmann::json jr;
      jr["mode"] = r->metrics.mode;
      jr["k"] = r->metrics.k;
      jr["seed"] = r->metrics.seed;
      if (r->metrics.accuracy) jr["accuracy"] = detail::fmt6(*r->metrics.accuracy);
      if (r->metrics.auc) jr["auc"] = detail::fmt6(*r->metrics.auc);
      jr["n_failures"] = r->metrics.n_failures;
      jr["n_total"] = r->metrics.n_total;
      nlohmann::json subjects = nlohmann::json::array();
      for (const auto& s : r->subjects) {
        nlohmann::json js;
        js["subject_id"] = s.subject_id;
        js["cache_key"] = s.cache_key;
        js["parsed"] = s.parsed;
        if (s.parsed) {
          js["prediction"] = s.prediction;
          if (s.probability) js["probability"] = detail::fmt6(*s.probability);
          js["correct"] = s.correct;
        } else {
          js["failure_reason"] = s.failure_reason;
        }
        subjects.push_back(std::move(js));
      }
      jr["subjects"] = std::move(subjects);
      jruns.push_back(std::move(jr));
    }
    doc["runs"] = std::move(jruns);
    std::ofstream out(dir / "report.json", std::ios::binary);
    out << doc.dump(2) << "\n";
  }
}

}  // namespace adprompt
