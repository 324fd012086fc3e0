// adprompt command-line interface.
//
// Subcommands:
//   normalize            CHAT files -> normalized transcripts
//   proxy-table          audit dump of the 62-row MMSE proxy table
//   make-proxy-pool      build the MMSE-proxy exemplar pool from the train split
//   build-reasoning-pool one-time multimodal construction of the reasoning pool
//   dump-prompt          print the exact message sequence for one evaluation
//   evaluate             run the (mode, k, seed) sweep and emit reports
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 leakage violation,
// 5 backend failure, 1 anything else.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adprompt/adprompt.hpp"

namespace {

using namespace adprompt;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitLeakage = 4;
constexpr int kExitBackend = 5;

struct BackendFlags {
  std::string url;
  std::string model;
  std::string api_key_env;
  std::string cache_dir;
  bool replay = false;
  bool record = false;
  int timeout_s = 0;
  int max_retries = -1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--backend", url, "Backend base URL, e.g. http://localhost:8000");
    cmd->add_option("--model", model, "Model id sent to the backend");
    cmd->add_option("--api-key-env", api_key_env, "Env var holding the API key");
    cmd->add_option("--cache-dir", cache_dir, "Completion cache directory");
    cmd->add_flag("--replay", replay, "Strict offline replay from the cache");
    cmd->add_flag("--record", record, "Record live completions into the cache");
    cmd->add_option("--timeout", timeout_s, "Request timeout in seconds");
    cmd->add_option("--max-retries", max_retries, "Transport retry budget");
  }

  void apply(BackendConfig& backend, CacheMode& mode, std::string& cache_path) const {
    if (!url.empty()) backend.endpoint_url = url;
    if (!model.empty()) backend.model_id = model;
    if (!api_key_env.empty()) backend.api_key_env_var = api_key_env;
    if (timeout_s > 0) backend.timeout_s = timeout_s;
    if (max_retries >= 0) backend.max_retries = max_retries;
    if (replay && record) throw ConfigError("--replay and --record are mutually exclusive");
    if (replay) mode = CacheMode::replay;
    if (record) mode = CacheMode::record;
    if (!cache_dir.empty()) cache_path = cache_dir;
    if (mode != CacheMode::off && cache_path.empty()) {
      throw ConfigError("--replay/--record require --cache-dir");
    }
  }
};

std::map<std::string, Transcript> load_transcripts_arg(const std::string& chat_dir,
                                                       const std::string& transcripts,
                                                       const Manifest& manifest) {
  if (chat_dir.empty() == transcripts.empty()) {
    throw ConfigError("exactly one of --chat-dir and --transcripts is required");
  }
  return chat_dir.empty() ? load_transcripts_jsonl(transcripts, manifest)
                          : load_chat_transcripts(chat_dir, manifest);
}

int cmd_normalize(const std::string& chat_dir, const std::string& manifest_path,
                  const std::string& out_dir) {
  const Manifest manifest = load_manifest(manifest_path);
  auto transcripts = run_normalize(chat_dir, manifest, out_dir);
  std::printf("normalized %zu transcripts into %s\n", transcripts.size(), out_dir.c_str());
  return 0;
}

int cmd_proxy_table() {
  std::printf("%-5s %-4s %-14s %-8s %s\n", "label", "mmse", "probability", "prompt", "band");
  for (const auto label : {ClassLabel::AD, ClassLabel::HC}) {
    for (int m = 30; m >= 0; --m) {
      const double p = proxy_probability(label, m);
      std::printf("%-5s %-4d %.12f %-8s %s\n", to_string(label).c_str(), m, p,
                  format_proxy_probability(p, label).c_str(),
                  to_string(mmse_band(m)).c_str());
    }
  }
  return 0;
}

int cmd_make_proxy_pool(const std::string& manifest_path, const std::string& chat_dir,
                        const std::string& transcripts_path, const std::string& out_path,
                        bool skip_missing_mmse) {
  const Manifest manifest = load_manifest(manifest_path);
  auto transcripts = load_transcripts_arg(chat_dir, transcripts_path, manifest);
  ExemplarPool pool = make_proxy_pool(manifest, transcripts, skip_missing_mmse);
  save_pool(pool, out_path);
  std::printf("wrote %s: %zu AD + %zu HC exemplars (sha256 %s)\n", out_path.c_str(),
              pool.ad.size(), pool.hc.size(), sha256_hex_file(out_path).c_str());
  return 0;
}

int cmd_build_reasoning_pool(const std::string& manifest_path, const std::string& chat_dir,
                             const std::string& transcripts_path,
                             const std::string& image_path, const std::string& out_path,
                             const BackendFlags& flags, int max_attempts) {
  const Manifest manifest = load_manifest(manifest_path);
  auto transcripts = load_transcripts_arg(chat_dir, transcripts_path, manifest);

  BackendConfig backend;
  backend.supports_images = true;
  CacheMode mode = CacheMode::off;
  std::string cache_dir;
  flags.apply(backend, mode, cache_dir);
  if (mode != CacheMode::replay && backend.endpoint_url.empty()) {
    throw ConfigError("--backend is required unless replaying from a cache");
  }
  auto cache = mode == CacheMode::off ? nullptr : std::make_shared<CompletionCache>(cache_dir);
  LlmClient client(backend, mode, cache);

  std::vector<GenerationTask> tasks;
  for (const auto& id : manifest.subjects("train")) {
    const auto& entry = manifest.require(id);
    if (!entry.label) throw DataError("train subject '" + id + "' has no label");
    GenerationTask task;
    task.subject_id = id;
    task.transcript_text = transcripts.at(id).text;
    task.mmse = entry.mmse;
    task.label = *entry.label;
    task.image_path = image_path;
    tasks.push_back(std::move(task));
  }

  GenerationConstraints constraints;
  if (max_attempts > 0) constraints.max_attempts = max_attempts;
  auto report = build_reasoning_pool(tasks, client, SamplingParams{}, constraints);
  freeze_pool(report.accepted, out_path, &manifest);
  std::printf("froze %zu exemplars into %s (+%s.digest.json)\n", report.accepted.size(),
              out_path.c_str(), out_path.c_str());
  if (!report.unfilled.empty()) {
    std::fprintf(stderr, "%zu task(s) left unfilled after %d attempts:\n",
                 report.unfilled.size(), constraints.max_attempts);
    for (const auto& u : report.unfilled) {
      std::fprintf(stderr, "  %s:", u.subject_id.c_str());
      for (const auto& v : u.last_violations) std::fprintf(stderr, " %s;", v.c_str());
      std::fprintf(stderr, "\n");
    }
    return kExitData;
  }
  return 0;
}

int cmd_dump_prompt(const std::string& manifest_path, const std::string& chat_dir,
                    const std::string& transcripts_path, const std::string& pool_path,
                    const std::string& subject, const std::string& mode, int k,
                    uint64_t seed) {
  const Manifest manifest = load_manifest(manifest_path);
  auto transcripts = load_transcripts_arg(chat_dir, transcripts_path, manifest);
  if (k < 0 || k > kMaxExamplesPerClass) {
    throw ConfigError("k outside harness policy 0..20");
  }
  ExemplarPool pool = load_pool(pool_path, &manifest);
  auto it = transcripts.find(subject);
  if (it == transcripts.end()) throw DataError("no transcript for subject '" + subject + "'");

  PromptConfig prompt_config;
  SelectionStrategy strategy = SelectionStrategy::nested_random;
  if (mode == "no_proxy") {
    prompt_config.include_probability_field = false;
  } else if (mode == "tfidf") {
    strategy = SelectionStrategy::tfidf;
  } else if (mode != "mmse_proxy" && mode != "reasoning") {
    throw ConfigError("unknown mode '" + mode + "'");
  }
  std::vector<Exemplar> selection;
  if (k > 0) selection = select(pool, {strategy, k, seed}, it->second.text);
  PromptBundle bundle = assemble_prompt(build_instruction(prompt_config), selection,
                                        it->second.text, prompt_config, mode);
  nlohmann::json out = nlohmann::json::array();
  for (const auto& m : bundle.messages) {
    out.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  std::printf("%s\n", out.dump(2).c_str());
  return 0;
}

int cmd_evaluate(const std::string& config_path, const BackendFlags& flags,
                 const std::string& output_dir_override) {
  SweepConfig config = load_sweep_config_file(config_path);
  flags.apply(config.backend, config.cache_mode, config.cache_dir);
  if (!output_dir_override.empty()) config.output_dir = output_dir_override;
  if (config.output_dir.empty()) throw ConfigError("output_dir is required");
  if (config.cache_mode != CacheMode::replay && config.backend.endpoint_url.empty()) {
    throw ConfigError("backend.endpoint_url is required unless replaying from a cache");
  }

  EvalReport report = run_sweep(config);
  emit_reports(report, config.output_dir);
  std::printf("%s\n", report.split_notice.c_str());
  std::printf("%-12s %-3s %-7s %-17s %s\n", "mode", "k", "runs", "accuracy", "auc");
  for (const auto& g : report.aggregates) {
    std::string acc = g.accuracy ? detail::fmt6(g.accuracy->mean) + " +/- " +
                                       detail::fmt6(g.accuracy->std)
                                 : std::string("n/a");
    std::string auc = g.auc ? detail::fmt6(g.auc->mean) + " +/- " + detail::fmt6(g.auc->std)
                            : std::string("n/a");
    std::printf("%-12s %-3d %-7zu %-17s %s\n", g.mode.c_str(), g.k, g.n_runs, acc.c_str(),
                auc.c_str());
  }
  std::printf("reports written to %s\n", config.output_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot prompting protocol for Alzheimer's detection from Cookie Theft "
               "transcripts"};
  app.require_subcommand(1);

  // normalize
  auto* normalize = app.add_subcommand("normalize", "CHAT files -> normalized transcripts");
  std::string chat_dir, manifest_path, out_dir;
  normalize->add_option("--chat-dir", chat_dir, "Directory of <subject_id>.cha files")
      ->required();
  normalize->add_option("--manifest", manifest_path, "Manifest JSONL")->required();
  normalize->add_option("--out-dir", out_dir, "Output directory")->required();

  // proxy-table
  auto* proxy_table = app.add_subcommand("proxy-table", "Print the 62-row proxy table");

  // make-proxy-pool
  auto* make_pool = app.add_subcommand("make-proxy-pool", "Build the MMSE-proxy pool");
  std::string mp_manifest, mp_chat_dir, mp_transcripts, mp_out;
  bool mp_skip_missing = false;
  make_pool->add_option("--manifest", mp_manifest)->required();
  make_pool->add_option("--chat-dir", mp_chat_dir, "Directory of .cha files");
  make_pool->add_option("--transcripts", mp_transcripts, "Combined transcripts JSONL");
  make_pool->add_option("--out", mp_out, "Pool file to write")->required();
  make_pool->add_flag("--skip-missing-mmse", mp_skip_missing,
                      "Drop train subjects without an MMSE score instead of failing");

  // build-reasoning-pool
  auto* build_pool =
      app.add_subcommand("build-reasoning-pool", "Generate and freeze the reasoning pool");
  std::string bp_manifest, bp_chat_dir, bp_transcripts, bp_image, bp_out;
  int bp_max_attempts = 0;
  BackendFlags bp_flags;
  build_pool->add_option("--manifest", bp_manifest)->required();
  build_pool->add_option("--chat-dir", bp_chat_dir);
  build_pool->add_option("--transcripts", bp_transcripts);
  build_pool->add_option("--image", bp_image, "Cookie Theft image path")->required();
  build_pool->add_option("--out", bp_out, "Pool file to write")->required();
  build_pool->add_option("--max-attempts", bp_max_attempts, "Generation attempts per subject");
  bp_flags.attach(build_pool);

  // dump-prompt
  auto* dump = app.add_subcommand("dump-prompt", "Print the message sequence for one prompt");
  std::string dp_manifest, dp_chat_dir, dp_transcripts, dp_pool, dp_subject,
      dp_mode = "mmse_proxy";
  int dp_k = 0;
  uint64_t dp_seed = 1;
  dump->add_option("--manifest", dp_manifest)->required();
  dump->add_option("--chat-dir", dp_chat_dir);
  dump->add_option("--transcripts", dp_transcripts);
  dump->add_option("--pool", dp_pool)->required();
  dump->add_option("--subject", dp_subject)->required();
  dump->add_option("--mode", dp_mode, "mmse_proxy | no_proxy | reasoning | tfidf");
  dump->add_option("--k", dp_k, "Examples per class");
  dump->add_option("--seed", dp_seed, "Shuffle seed");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Run the k-sweep and emit reports");
  std::string ev_config, ev_output_dir;
  BackendFlags ev_flags;
  evaluate->add_option("--config", ev_config, "Sweep config JSON")->required();
  evaluate->add_option("--output-dir", ev_output_dir, "Override config output_dir");
  ev_flags.attach(evaluate);

  CLI11_PARSE(app, argc, argv);

  try {
    if (normalize->parsed()) return cmd_normalize(chat_dir, manifest_path, out_dir);
    if (proxy_table->parsed()) return cmd_proxy_table();
    if (make_pool->parsed()) {
      return cmd_make_proxy_pool(mp_manifest, mp_chat_dir, mp_transcripts, mp_out,
                                 mp_skip_missing);
    }
    if (build_pool->parsed()) {
      return cmd_build_reasoning_pool(bp_manifest, bp_chat_dir, bp_transcripts, bp_image,
                                      bp_out, bp_flags, bp_max_attempts);
    }
    if (dump->parsed()) {
      return cmd_dump_prompt(dp_manifest, dp_chat_dir, dp_transcripts, dp_pool, dp_subject,
                             dp_mode, dp_k, dp_seed);
    }
    if (evaluate->parsed()) return cmd_evaluate(ev_config, ev_flags, ev_output_dir);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const LeakageError& e) {
    std::fprintf(stderr, "leakage violation: %s\n", e.what());
    return kExitLeakage;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const BackendError& e) {
    std::fprintf(stderr, "backend error: %s\n", e.what());
    return kExitBackend;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
