#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "stylespace/pipeline.hpp"
#include "support.hpp"

using namespace stylespace;
using namespace stylespace::pipeline;
namespace fs = std::filesystem;

namespace {

/// Small enough to run in a few seconds, large enough for every stage.
json quick_config() {
  return json::parse(R"({
    "seed": 3,
    "train": {"epochs": 10},
    "svm": {"epochs": 200},
    "sweep": {"alphas": "0:2:1", "content_codes": 50},
    "eval": {"shots": 100}
  })");
}

fs::path write_config(const fs::path& dir, const json& j, const std::string& name = "config.json") {
  const auto p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

PipelineConfig quick(const fs::path& out_dir) {
  auto cfg = config_from_json(quick_config(), ".");
  cfg.out_dir = out_dir.string();
  return cfg;
}

/// Runs the CLI, returns its exit status.
int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + STYLESPACE_CLI + "\" -q " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool has_path(const std::vector<Diagnostic>& d, const std::string& path) {
  return std::any_of(d.begin(), d.end(), [&](const Diagnostic& x) { return x.path == path; });
}

}  // namespace

// validation

TEST(Config, DemoConfigIsValid) {
  const auto diags = validate_config(STYLESPACE_DEMO_CONFIG);
  EXPECT_TRUE(diags.empty()) << format_diagnostics(diags);
  const auto cfg = load_config(STYLESPACE_DEMO_CONFIG);
  EXPECT_EQ(cfg.seed, 1u);
  EXPECT_EQ(cfg.ablation_seeds.size(), 3u);
}

TEST(Config, NegativeBatchSizeNamedOnce) {
  auto j = quick_config();
  j["train"]["batch_size"] = -4;
  const auto d = validate_config_json(j, ".");
  ASSERT_EQ(d.size(), 1u) << format_diagnostics(d);
  EXPECT_EQ(d.front().path, "train.batch_size");
}

TEST(Config, InvertedAlphaRange) {
  auto j = quick_config();
  j["sweep"]["alphas"] = "2:0:0.5";
  const auto d = validate_config_json(j, ".");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.front().path, "sweep.alphas");
  EXPECT_NE(d.front().message.find("inverted"), std::string::npos);
}

TEST(Config, EveryProblemReported) {
  auto j = quick_config();
  j["bogus"] = 1;
  j["svm"]["lambda"] = 0;
  j["sweep"]["content_codes"] = 10;
  j["sweep"]["target_speaker"] = 4;
  j["eval"]["ablation_seeds"] = {1, 2};
  j["eval"]["shots"] = 1000;
  j["train"]["dropout"] = "high";
  const auto d = validate_config_json(j, ".");
  for (const char* p : {"bogus", "svm.lambda", "sweep.content_codes", "sweep.target_speaker", "eval.ablation_seeds",
                        "eval.shots", "train.dropout"}) {
    EXPECT_TRUE(has_path(d, p)) << p << "\n" << format_diagnostics(d);
  }
  EXPECT_EQ(d.size(), 7u) << format_diagnostics(d);
}

TEST(Config, CorpusPathResolvedAgainstTheConfigDirectory) {
  const auto dir = testkit::temp_dir("cfg");
  auto j = quick_config();
  j["corpus_path"] = "data/corpus.jsonl";
  const auto cfg_path = write_config(dir, j);
  auto d = validate_config(cfg_path.string());
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.front().path, "corpus_path");

  toy::CorpusSpec spec;
  spec.per_cell = 30;
  fs::create_directories(dir / "data");
  std::ofstream(dir / "data" / "corpus.jsonl") << toy::write_corpus(spec, toy::generate_corpus(spec), Provenance{});
  d = validate_config(cfg_path.string());
  EXPECT_TRUE(d.empty()) << format_diagnostics(d);
  EXPECT_EQ(fs::path(*load_config(cfg_path.string()).corpus_path), (dir / "data" / "corpus.jsonl").lexically_normal());

  j["corpus"] = {{"speakers", 3}};
  d = validate_config_json(j, dir);
  EXPECT_TRUE(has_path(d, "corpus_path"));
  fs::remove_all(dir);
}

TEST(Config, SyntaxErrorIsADiagnosticAndMissingFileIsIo) {
  const auto dir = testkit::temp_dir("cfg-syntax");
  std::ofstream(dir / "bad.json") << "{\"seed\": 1,";
  const auto d = validate_config((dir / "bad.json").string());
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.front().path, "");
  EXPECT_ERROR_CODE(load_config((dir / "bad.json").string()), ErrorCode::InvalidConfig);
  EXPECT_ERROR_CODE(validate_config((dir / "nope.json").string()), ErrorCode::Io);
  fs::remove_all(dir);
}

TEST(Config, HashIgnoresOutDirButNotSeed) {
  auto a = quick("/tmp/a");
  auto b = quick("/tmp/b");
  EXPECT_EQ(a.hash(), b.hash());
  b.seed = 4;
  EXPECT_NE(a.hash(), b.hash());
}

// runs

TEST(Pipeline, RunsAreReproducibleAndReused) {
  const auto root = testkit::temp_dir("pipe");
  const auto first = run_pipeline(quick(root / "a"));
  ASSERT_EQ(first.exit_code, 0) << first.message;
  EXPECT_FALSE(first.reused);
  const auto second = run_pipeline(quick(root / "b"));
  ASSERT_EQ(second.exit_code, 0) << second.message;

  const auto sums_a = artifact_checksums(first.run_dir);
  const auto sums_b = artifact_checksums(second.run_dir);
  EXPECT_EQ(sums_a, sums_b);
  EXPECT_EQ(fs::path(first.run_dir).filename(), fs::path(second.run_dir).filename());
  for (const char* rel : {"corpus.jsonl", "checkpoint/model.json", "train_log.csv", "latents/style.jsonl",
                          "latents/speaker.jsonl", "directions/emotion-1.json", "directions/speaker-0.json",
                          "sweeps/emotion-1.csv", "sweeps/emotion-1-negated.svg", "reports/oneshot.csv",
                          "reports/summary.json"}) {
    EXPECT_TRUE(sums_a.count(rel)) << rel;
  }
  EXPECT_TRUE(fs::exists(fs::path(first.run_dir) / kCompleteMarker));
  const auto manifest = read_json_file((fs::path(first.run_dir) / "manifest.json").string());
  EXPECT_EQ(manifest.at("artifacts").size(), sums_a.size());

  // Provenance line on every CSV.
  const auto csv = slurp(fs::path(first.run_dir) / "sweeps" / "emotion-1.csv");
  EXPECT_EQ(csv.rfind("# stylespace 0.1.0 seed=3 config_hash=", 0), 0u);

  const auto again = run_pipeline(quick(root / "a"));
  EXPECT_EQ(again.exit_code, 0);
  EXPECT_TRUE(again.reused);
  fs::remove_all(root);
}

TEST(Pipeline, PartialRunIsDiscarded) {
  const auto root = testkit::temp_dir("pipe-partial");
  const auto cfg = quick(root);
  const fs::path run = root / ("run-" + cfg.hash());
  fs::create_directories(run);
  std::ofstream(run / "stale.txt") << "left over";
  const auto r = run_pipeline(cfg);
  ASSERT_EQ(r.exit_code, 0) << r.message;
  EXPECT_FALSE(fs::exists(run / "stale.txt"));
  fs::remove_all(root);
}

TEST(Pipeline, FailedStageLeavesAMarkerAndItsExitCode) {
  const auto root = testkit::temp_dir("pipe-fail");
  auto cfg = quick(root);
  cfg.sweep.target_speaker = 9;  // bypasses validation on purpose
  const auto r = run_pipeline(cfg);
  EXPECT_EQ(r.exit_code, exit_code(Stage::TrainSvm));
  EXPECT_EQ(r.exit_code, 13);
  const auto marker = slurp(fs::path(r.run_dir) / kFailedMarker);
  EXPECT_EQ(marker.rfind("[train-svm]", 0), 0u) << marker;
  EXPECT_FALSE(fs::exists(fs::path(r.run_dir) / kCompleteMarker));
  EXPECT_TRUE(fs::exists(fs::path(r.run_dir) / "checkpoint" / "model.json"));
  fs::remove_all(root);
}

// command line

TEST(Cli, MissingCorpusPathExitsWithConfigError) {
  const auto dir = testkit::temp_dir("cli-cfg");
  auto j = quick_config();
  j["corpus_path"] = "missing.jsonl";
  const auto cfg = write_config(dir, j);
  EXPECT_EQ(cli("--config \"" + cfg.string() + "\" --out \"" + (dir / "runs").string() + "\" pipeline", dir / "log"),
            2);
  EXPECT_NE(slurp(dir / "log").find("corpus_path"), std::string::npos) << slurp(dir / "log");
  EXPECT_EQ(cli("--config \"" + cfg.string() + "\" validate", dir / "log"), 2);
  EXPECT_FALSE(fs::exists(dir / "runs"));
  fs::remove_all(dir);
}

TEST(Cli, StagesChainThroughFiles) {
  const auto d = testkit::temp_dir("cli");
  auto q = [](const fs::path& p) { return "\"" + p.string() + "\""; };
  const auto log = d / "log";
  ASSERT_EQ(cli("--seed 5 --out " + q(d / "corpus.jsonl") + " gen-data --per-cell 30", log), 0) << slurp(log);
  ASSERT_EQ(cli("--seed 5 --out " + q(d / "ckpt") + " train --corpus " + q(d / "corpus.jsonl") + " --epochs 5", log), 0)
      << slurp(log);
  EXPECT_TRUE(fs::exists(d / "ckpt" / "model.json"));
  EXPECT_TRUE(fs::exists(d / "ckpt" / "train_log.csv"));
  ASSERT_EQ(cli("extract --ckpt " + q(d / "ckpt") + " --corpus " + q(d / "corpus.jsonl") + " --out-style " +
                    q(d / "style.jsonl") + " --out-speaker " + q(d / "speaker.jsonl"),
                log),
            0)
      << slurp(log);

  // Split the style store into emotion-1 and neutral files for the SVM.
  const auto style = load_vector_store((d / "style.jsonl").string());
  save_vector_store((d / "pos.jsonl").string(),
                    style.filter([](const LatentMeta& m, int) { return m.emotion_id == 1; }), std::nullopt);
  save_vector_store((d / "neg.jsonl").string(),
                    style.filter([](const LatentMeta& m, int) { return m.emotion_id == 0; }), std::nullopt);
  save_vector_store((d / "base.jsonl").string(),
                    style.filter([](const LatentMeta& m, int) { return m.emotion_id == 0 && m.speaker_id == 0; }),
                    std::nullopt);

  ASSERT_EQ(cli("--out " + q(d / "e1.json") + " train-svm --pos " + q(d / "pos.jsonl") + " --neg " +
                    q(d / "neg.jsonl") + " --attribute happy --epochs 300",
                log),
            0)
      << slurp(log);
  ASSERT_EQ(cli("--out " + q(d / "e1-one.json") + " train-svm --one-shot --pos " + q(d / "pos.jsonl") + " --neg " +
                    q(d / "neg.jsonl") + " --attribute happy",
                log),
            0)
      << slurp(log);
  const auto dir = load_direction((d / "e1.json").string());
  EXPECT_EQ(dir.attribute, "happy");
  EXPECT_EQ(load_direction((d / "e1-one.json").string()).provenance.n_positive, 1);

  ASSERT_EQ(cli("--out " + q(d / "edited.jsonl") + " edit --base " + q(d / "base.jsonl") + " --direction " +
                    q(d / "e1.json") + " --alpha 1.5",
                log),
            0)
      << slurp(log);
  const auto base = neutral_style(load_vector_store((d / "base.jsonl").string()).vectors);
  const auto edited = load_vector_store((d / "edited.jsonl").string());
  ASSERT_EQ(edited.size(), 1u);
  EXPECT_NEAR(signed_distance(dir, edited.vectors.front()) - signed_distance(dir, base), 1.5, 1e-10);

  ASSERT_EQ(cli("--out " + q(d / "sweep") + " sweep --base " + q(d / "base.jsonl") + " --direction " +
                    q(d / "e1.json") + " --alphas 0:2:0.5",
                log),
            0)
      << slurp(log);
  const auto sweep_csv = slurp(d / "sweep" / "sweep.csv");
  EXPECT_NE(sweep_csv.find("alpha,signed_distance,vector_file\n"), std::string::npos);
  EXPECT_TRUE(fs::exists(d / "sweep" / "vectors" / "alpha-004.jsonl"));

  // Conditioning on itself is degenerate: a plain error, exit 1.
  EXPECT_EQ(cli("--out " + q(d / "x.jsonl") + " edit --base " + q(d / "base.jsonl") + " --direction " +
                    q(d / "e1.json") + " --alpha 1 --condition " + q(d / "e1.json"),
                log),
            1);
  EXPECT_NE(slurp(log).find("DegenerateDirection"), std::string::npos) << slurp(log);

  EXPECT_EQ(cli("eval probe --ckpt " + q(d / "ckpt") + " --corpus " + q(d / "corpus.jsonl"), log), 0) << slurp(log);
  EXPECT_NE(slurp(log).find("probe_accuracy"), std::string::npos);
  EXPECT_NE(cli("no-such-command", log), 0);
  fs::remove_all(d);
}
