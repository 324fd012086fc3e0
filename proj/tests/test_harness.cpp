#include <catch2/catch_amalgamated.hpp>

#include <memory>
#include <string>

#include "adprompt/harness.hpp"
#include "test_support.hpp"

using namespace adprompt;
using test_support::CannedTransport;
using test_support::SweepFixture;
using test_support::TempDir;
using test_support::slurp;
using test_support::write_file;

namespace {

nlohmann::json minimal_config_json(const SweepFixture& fixture) {
  return {
      {"manifest", fixture.dir.file("manifest.jsonl")},
      {"transcripts", fixture.dir.file("norm/transcripts.jsonl")},
      {"pools", {{"proxy", fixture.dir.file("proxy.jsonl")}}},
      {"modes", {"mmse_proxy"}},
      {"k_values", {0, 1}},
      {"cache_mode", "replay"},
      {"cache_dir", fixture.dir.file("cache")},
  };
}

Manifest synthetic_full_manifest(int n_train_ad = 54, int n_train_hc = 54,
                                 int n_test_ad = 24, int n_test_hc = 24) {
  Manifest m;
  int counter = 0;
  auto add = [&](int n, const std::string& split, ClassLabel label) {
    for (int i = 0; i < n; ++i) {
      char id[16];
      std::snprintf(id, sizeof(id), "S%03d", counter++);
      m.add({id, split, label, 25});
    }
  };
  add(n_train_ad, "train", ClassLabel::AD);
  add(n_train_hc, "train", ClassLabel::HC);
  add(n_test_ad, "test", ClassLabel::AD);
  add(n_test_hc, "test", ClassLabel::HC);
  return m;
}

}  // namespace

TEST_CASE("config parsing applies defaults and policy checks", "[harness]") {
  SweepFixture fixture;
  auto doc = minimal_config_json(fixture);

  SECTION("defaults") {
    auto cfg = load_sweep_config(doc);
    CHECK(cfg.seeds == std::vector<uint64_t>{1, 2, 3});
    CHECK(cfg.k_values == std::vector<int>{0, 1});
    CHECK(cfg.sampling.temperature == 0.01);
    CHECK(cfg.sampling.top_k == 50);
    CHECK(cfg.sampling.top_p == 1.0);
    CHECK(cfg.cache_mode == CacheMode::replay);
  }
  SECTION("k range expansion") {
    doc.erase("k_values");
    auto cfg = load_sweep_config(doc);
    REQUIRE(cfg.k_values.size() == 21);  // default 0..20
    CHECK(cfg.k_values.front() == 0);
    CHECK(cfg.k_values.back() == 20);
  }
  SECTION("k beyond harness policy") {
    doc["k_values"] = {0, 25};
    CHECK_THROWS_AS(load_sweep_config(doc), ConfigError);
  }
  SECTION("unknown mode") {
    doc["modes"] = {"telepathy"};
    CHECK_THROWS_AS(load_sweep_config(doc), ConfigError);
  }
  SECTION("reasoning mode needs the reasoning pool") {
    doc["modes"] = {"reasoning"};
    CHECK_THROWS_AS(load_sweep_config(doc), ConfigError);
  }
  SECTION("exactly one transcript source") {
    doc["chat_dir"] = fixture.dir.file("cha");
    CHECK_THROWS_AS(load_sweep_config(doc), ConfigError);
    doc.erase("chat_dir");
    doc.erase("transcripts");
    CHECK_THROWS_AS(load_sweep_config(doc), ConfigError);
  }
  SECTION("cache mode needs a directory") {
    doc.erase("cache_dir");
    CHECK_THROWS_AS(load_sweep_config(doc), ConfigError);
  }
}

TEST_CASE("verify_split confirms the official counts on a full manifest", "[harness]") {
  auto manifest = synthetic_full_manifest();
  REQUIRE(manifest.size() == 156);
  const std::string notice = verify_split(manifest, {});
  CHECK(notice.find("108 train / 48 test") != std::string::npos);
}

TEST_CASE("verify_split rejects a full-size manifest with wrong counts", "[harness]") {
  auto manifest = synthetic_full_manifest(55, 53, 24, 24);  // still 156 subjects
  CHECK_THROWS_WITH(verify_split(manifest, {}),
                    Catch::Matchers::ContainsSubstring("78/78"));
  auto bad_split = synthetic_full_manifest(55, 54, 23, 24);  // classes balanced, split off
  CHECK_THROWS_WITH(verify_split(bad_split, {}),
                    Catch::Matchers::ContainsSubstring("108"));
}

TEST_CASE("verify_split on fixtures checks disjointness only", "[harness]") {
  Manifest manifest;
  manifest.add({"tr1", "train", ClassLabel::AD, 20});
  manifest.add({"te1", "test", ClassLabel::HC, 29});

  ExemplarPool clean = test_support::make_synthetic_pool(0, 0);
  Exemplar ok;
  ok.id = "tr1";
  ok.transcript = "t";
  ok.label = ClassLabel::AD;
  ok.probability = 0.7;
  clean.ad.push_back(ok);
  const std::string notice = verify_split(manifest, {&clean});
  CHECK(notice.find("skipped") != std::string::npos);

  ExemplarPool dirty = clean;
  Exemplar leak;
  leak.id = "te1";
  leak.transcript = "t";
  leak.label = ClassLabel::HC;
  leak.probability = 0.2;
  dirty.hc.push_back(leak);
  try {
    verify_split(manifest, {&dirty});
    FAIL("expected LeakageError");
  } catch (const LeakageError& e) {
    REQUIRE(e.subjects().size() == 1);
    CHECK(e.subjects()[0] == "te1");
  }
}

TEST_CASE("normalize emits per-subject files and a loadable combined JSONL", "[harness]") {
  SweepFixture fixture;
  const Manifest manifest = load_manifest(fixture.dir.file("manifest.jsonl"));
  CHECK(std::filesystem::exists(fixture.dir.file("norm/T01.txt")));
  auto transcripts = load_transcripts_jsonl(fixture.dir.file("norm/transcripts.jsonl"),
                                            manifest);
  REQUIRE(transcripts.size() == 16);
  CHECK(transcripts.at("T01").text.find("t01") != std::string::npos);
  CHECK(transcripts.at("T01").split == "test");
  // normalization ran: the raw CHAT codes are gone, the cues verbalized
  CHECK(transcripts.at("T01").text.find("&uh") == std::string::npos);
  CHECK(transcripts.at("T01").text.find("(short pause)") != std::string::npos);
  CHECK(transcripts.at("T01").text.find("the jar the jar") != std::string::npos);
}

TEST_CASE("replayed sweep is deterministic end to end", "[harness][sweep]") {
  SweepFixture fixture;
  auto config = fixture.config();
  config.modes = {"mmse_proxy", "no_proxy"};
  config.k_values = {0, 2};
  config.seeds = {1, 2};

  // record once against the canned model
  {
    auto record_config = config;
    record_config.cache_mode = CacheMode::record;
    auto transport =
        std::make_shared<CannedTransport>(SweepFixture::responder(SweepFixture::standard_answers()));
    run_sweep(record_config, transport);
  }

  auto replay = config;
  replay.cache_mode = CacheMode::replay;
  replay.output_dir = fixture.dir.file("out1");
  EvalReport first = run_sweep(replay);
  emit_reports(first, replay.output_dir);
  replay.output_dir = fixture.dir.file("out2");
  EvalReport second = run_sweep(replay);
  emit_reports(second, replay.output_dir);

  for (const char* file : {"runs.csv", "aggregate.csv", "curve.csv", "report.json"}) {
    INFO(file);
    CHECK(slurp(fixture.dir.file("out1/" + std::string(file))) ==
          slurp(fixture.dir.file("out2/" + std::string(file))));
  }

  // bookkeeping: failures + parsed == subjects, for every run
  for (const auto& run : first.runs) {
    size_t parsed = 0;
    for (const auto& s : run.subjects) parsed += s.parsed ? 1 : 0;
    CHECK(parsed + run.metrics.n_failures == run.metrics.n_total);
    CHECK(run.metrics.n_total == 6);
  }

  // zero-shot rows are identical across seeds
  std::optional<double> k0_accuracy;
  for (const auto& run : first.runs) {
    if (run.metrics.k != 0 || run.metrics.mode != "mmse_proxy") continue;
    REQUIRE(run.metrics.accuracy.has_value());
    if (!k0_accuracy) {
      k0_accuracy = *run.metrics.accuracy;
    } else {
      CHECK(*run.metrics.accuracy == *k0_accuracy);
    }
  }
  REQUIRE(k0_accuracy.has_value());
  CHECK(*k0_accuracy == Catch::Approx(5.0 / 6.0).margin(1e-12));

  // the canned model answers 5/6 correctly with AUC 7.5/9
  for (const auto& run : first.runs) {
    if (run.metrics.mode != "mmse_proxy") continue;
    CHECK(run.metrics.accuracy == Catch::Approx(5.0 / 6.0).margin(1e-12));
    REQUIRE(run.metrics.auc.has_value());
    CHECK(*run.metrics.auc == Catch::Approx(7.5 / 9.0).margin(1e-12));
  }

  // no-proxy demonstrations made the model omit probabilities: AUC unavailable
  for (const auto& run : first.runs) {
    if (run.metrics.mode != "no_proxy" || run.metrics.k == 0) continue;
    CHECK_FALSE(run.metrics.auc.has_value());
    CHECK(run.metrics.accuracy.has_value());
  }
  const std::string runs_csv = slurp(fixture.dir.file("out1/runs.csv"));
  CHECK(runs_csv.find("no_proxy,2,1,0.833333,,0,6") != std::string::npos);
}

TEST_CASE("failure accounting never imputes a class", "[harness][sweep]") {
  SweepFixture fixture;
  auto config = fixture.config();
  config.modes = {"mmse_proxy"};
  config.k_values = {1};
  config.seeds = {1};

  auto answers = SweepFixture::standard_answers();
  answers["t02"].hedged = true;       // MAYBE -> InvalidPrediction
  answers["t03"].valid_json = false;  // malformed output
  answers["t05"] = {"YES", 0.7};      // one genuine mistake among the parsed

  {
    auto record_config = config;
    record_config.cache_mode = CacheMode::record;
    auto transport = std::make_shared<CannedTransport>(SweepFixture::responder(answers));
    run_sweep(record_config, transport);
  }
  auto replay = config;
  replay.cache_mode = CacheMode::replay;
  EvalReport report = run_sweep(replay);

  REQUIRE(report.runs.size() == 1);
  const auto& metrics = report.runs[0].metrics;
  CHECK(metrics.n_total == 6);
  CHECK(metrics.n_failures == 2);
  REQUIRE(metrics.accuracy.has_value());
  // 3 of the 4 parsed outcomes are correct; imputing failures as HC would
  // give 4/6 and dropping them into the denominator 3/6 — both wrong
  CHECK(*metrics.accuracy == Catch::Approx(0.75).margin(1e-12));

  const auto& t02 = *std::find_if(report.runs[0].subjects.begin(),
                                  report.runs[0].subjects.end(),
                                  [](const SubjectOutcome& s) { return s.subject_id == "T02"; });
  CHECK_FALSE(t02.parsed);
  CHECK(t02.failure_reason == "InvalidPrediction");
  CHECK(t02.prediction.empty());
}

TEST_CASE("replay without a recorded key aborts with a partial dump", "[harness][sweep]") {
  SweepFixture fixture;
  auto config = fixture.config();
  config.cache_mode = CacheMode::replay;
  config.k_values = {3};  // never recorded
  config.output_dir = fixture.dir.file("out_abort");
  CHECK_THROWS_AS(run_sweep(config), CacheMissError);
  CHECK(std::filesystem::exists(fixture.dir.file("out_abort/partial_report.json")));
}

TEST_CASE("pool digests and split notice are part of the report", "[harness][sweep]") {
  SweepFixture fixture;
  auto config = fixture.config();
  config.k_values = {0};
  config.seeds = {1};
  {
    auto record_config = config;
    record_config.cache_mode = CacheMode::record;
    auto transport =
        std::make_shared<CannedTransport>(SweepFixture::responder(SweepFixture::standard_answers()));
    run_sweep(record_config, transport);
  }
  config.cache_mode = CacheMode::replay;
  EvalReport report = run_sweep(config);
  REQUIRE(report.pool_digests.size() == 1);
  CHECK(report.pool_digests.begin()->second ==
        sha256_hex_file(fixture.dir.file("proxy.jsonl")));
  CHECK(report.split_notice.find("fixture manifest") != std::string::npos);
}
