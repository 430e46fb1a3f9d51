#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "stylespace/editor.hpp"
#include "stylespace/eval/evaluate.hpp"
#include "stylespace/eval/reports.hpp"
#include "stylespace/provenance.hpp"
#include "stylespace/svm.hpp"
#include "stylespace/toy/corpus.hpp"
#include "stylespace/toy/train.hpp"
#include "stylespace/vector_store.hpp"

namespace stylespace::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

// Pipeline config, JSON:
// {
//   "seed": 1,                       drives corpus, training, SVMs and evaluation
//   "out_dir": "runs",               runs land in <out_dir>/run-<config hash>/
//   "corpus": {CorpusSpec fields except seed}   or   "corpus_path": "file.jsonl"
//   "train": {TrainConfig fields except seed and corpus},
//   "svm": {"lambda", "epochs", "val_fraction"},
//   "sweep": {"alphas": "0:2:0.5", "content_codes": 50, "target_speaker": 0},
//   "eval": {"shots": 100, "ablation_seeds": [1, 2, 3]}
// }
// Every section and field is optional; missing fields take the library defaults.

struct SweepSpec {
  std::string alphas = "0:2:0.5";
  int content_codes = 50;
  int target_speaker = 0;
};

struct PipelineConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "runs";
  std::optional<std::string> corpus_path;  // resolved against the config file's directory
  toy::TrainConfig train;                  // train.corpus is used when corpus_path is unset
  SvmConfig svm;
  SweepSpec sweep;
  int shots = 100;
  std::vector<std::uint64_t> ablation_seeds;

  std::vector<double> alphas() const { return parse_alpha_spec(sweep.alphas); }

  /// Everything that influences artifacts, in a fixed layout. out_dir is left
  /// out so the same experiment hashes identically wherever it is written.
  json normalized() const {
    json train_j = train;
    train_j.erase("corpus");
    train_j.erase("seed");
    json j = {{"seed", seed},
              {"train", train_j},
              {"svm", {{"lambda", svm.lambda}, {"epochs", svm.epochs}, {"val_fraction", svm.val_fraction}}},
              {"sweep",
               {{"alphas", sweep.alphas}, {"content_codes", sweep.content_codes}, {"target_speaker", sweep.target_speaker}}},
              {"eval", {{"shots", shots}, {"ablation_seeds", ablation_seeds}}}};
    if (corpus_path) {
      j["corpus_path"] = fs::path(*corpus_path).filename().string();
      j["corpus_checksum"] = hex64(fnv1a64(read_file(*corpus_path)));
    } else {
      json c = train.corpus;
      c.erase("seed");
      j["corpus"] = c;
    }
    return j;
  }

  std::string hash() const { return config_hash(normalized()); }
};

struct Diagnostic {
  std::string path;  // dotted field path, "" for the document itself
  std::string message;
};

inline std::string format_diagnostics(const std::vector<Diagnostic>& diags) {
  std::string out;
  for (const auto& d : diags) out += (d.path.empty() ? std::string("<root>") : d.path) + ": " + d.message + "\n";
  return out;
}

namespace detail {

class Checker {
 public:
  explicit Checker(std::vector<Diagnostic>& out) : out_(out) {}

  void add(std::string path, std::string message) { out_.push_back({std::move(path), std::move(message)}); }

  /// False (with a diagnostic) when `j` is not an object; flags unknown keys.
  bool object(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) {
      add(path, "must be an object");
      return false;
    }
    for (const auto& [key, value] : j.items()) {
      if (!allowed.count(key)) add(join(path, key), "unknown field");
    }
    return true;
  }

  std::optional<long long> integer(const json& obj, const std::string& path, const std::string& key, long long lo,
                                   std::optional<long long> hi = std::nullopt) {
    if (!obj.contains(key)) return std::nullopt;
    const auto& v = obj.at(key);
    const std::string p = join(path, key);
    if (!v.is_number_integer()) {
      add(p, "must be an integer");
      return std::nullopt;
    }
    const long long x = v.is_number_unsigned() ? static_cast<long long>(v.get<std::uint64_t>()) : v.get<long long>();
    if (x < lo) {
      add(p, "must be >= " + std::to_string(lo) + ", got " + std::to_string(x));
      return std::nullopt;
    }
    if (hi && x > *hi) {
      add(p, "must be <= " + std::to_string(*hi) + ", got " + std::to_string(x));
      return std::nullopt;
    }
    return x;
  }

  /// Real in [lo, hi] (or (lo, hi) / [lo, hi) per the open flags).
  void real(const json& obj, const std::string& path, const std::string& key, double lo, double hi,
            bool lo_open = false, bool hi_open = false) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    const std::string p = join(path, key);
    if (!v.is_number()) {
      add(p, "must be a number");
      return;
    }
    const double x = v.get<double>();
    const bool ok = (lo_open ? x > lo : x >= lo) && (hi_open ? x < hi : x <= hi);
    if (!ok) {
      add(p, std::string("must be in ") + (lo_open ? "(" : "[") + format_double(lo) + ", " + format_double(hi) +
                 (hi_open ? ")" : "]") + ", got " + format_double(x));
    }
  }

  void boolean(const json& obj, const std::string& path, const std::string& key) {
    if (obj.contains(key) && !obj.at(key).is_boolean()) add(join(path, key), "must be true or false");
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  std::vector<Diagnostic>& out_;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline std::string resolve(const std::string& path, const fs::path& base_dir) {
  const fs::path p(path);
  return p.is_absolute() ? p.string() : (base_dir / p).lexically_normal().string();
}

}  // namespace detail

/// Every schema violation in a parsed config document. `base_dir` anchors
/// relative corpus paths.
inline std::vector<Diagnostic> validate_config_json(const json& j, const fs::path& base_dir) {
  std::vector<Diagnostic> diags;
  detail::Checker ck(diags);
  if (!ck.object(j, "", {"seed", "out_dir", "corpus", "corpus_path", "train", "svm", "sweep", "eval"})) return diags;

  ck.integer(j, "", "seed", 0);
  if (j.contains("out_dir") && (!j.at("out_dir").is_string() || j.at("out_dir").get<std::string>().empty())) {
    ck.add("out_dir", "must be a non-empty string");
  }

  // Corpus size, used by cross-field checks below when known.
  toy::CorpusSpec corpus;
  bool corpus_known = true;
  if (j.contains("corpus") && j.contains("corpus_path")) ck.add("corpus_path", "give either corpus or corpus_path, not both");
  if (j.contains("corpus_path")) {
    const auto& p = j.at("corpus_path");
    corpus_known = false;
    if (!p.is_string() || p.get<std::string>().empty()) {
      ck.add("corpus_path", "must be a non-empty string");
    } else {
      const std::string path = detail::resolve(p.get<std::string>(), base_dir);
      if (!fs::is_regular_file(path)) {
        ck.add("corpus_path", "file not found: " + path);
      } else {
        try {
          corpus = toy::load_corpus(path).spec;
          corpus_known = true;
        } catch (const Error& e) {
          ck.add("corpus_path", std::string("unreadable corpus: ") + e.what());
        }
      }
    }
  }
  if (j.contains("corpus")) {
    const auto& c = j.at("corpus");
    if (ck.object(c, "corpus",
                  {"speakers", "emotions", "per_cell", "content_dim", "feature_dim", "noise", "speaker_spread",
                   "speaker_offset", "min_intensity"})) {
      if (auto v = ck.integer(c, "corpus", "speakers", 2)) corpus.speakers = static_cast<int>(*v);
      if (auto v = ck.integer(c, "corpus", "emotions", 1)) corpus.emotions = static_cast<int>(*v);
      if (auto v = ck.integer(c, "corpus", "per_cell", 1)) corpus.per_cell = static_cast<int>(*v);
      ck.integer(c, "corpus", "content_dim", 1);
      ck.integer(c, "corpus", "feature_dim", 1);
      ck.real(c, "corpus", "noise", 0.0, detail::kInf, false, true);
      ck.real(c, "corpus", "speaker_spread", 0.0, detail::kInf, false, true);
      ck.real(c, "corpus", "speaker_offset", 0.0, detail::kInf, false, true);
      ck.real(c, "corpus", "min_intensity", 0.0, 1.0);
    }
  }

  if (j.contains("train")) {
    const auto& t = j.at("train");
    if (ck.object(t, "train",
                  {"latent_dim", "hidden", "batch_size", "classifier_weight", "grl_lambda", "epochs", "warmup_steps",
                   "base_lr", "dropout", "use_adversary", "use_cycle"})) {
      ck.integer(t, "train", "latent_dim", 1);
      ck.integer(t, "train", "hidden", 1);
      ck.integer(t, "train", "batch_size", 2);
      ck.real(t, "train", "classifier_weight", 0.0, detail::kInf, false, true);
      ck.real(t, "train", "grl_lambda", 0.0, detail::kInf, false, true);
      ck.integer(t, "train", "epochs", 0);
      ck.integer(t, "train", "warmup_steps", 1);
      ck.real(t, "train", "base_lr", 0.0, detail::kInf, true, true);
      ck.real(t, "train", "dropout", 0.0, 1.0, false, true);
      ck.boolean(t, "train", "use_adversary");
      ck.boolean(t, "train", "use_cycle");
    }
  }

  if (j.contains("svm")) {
    const auto& s = j.at("svm");
    if (ck.object(s, "svm", {"lambda", "epochs", "val_fraction"})) {
      ck.real(s, "svm", "lambda", 0.0, detail::kInf, true, true);
      ck.integer(s, "svm", "epochs", 1);
      ck.real(s, "svm", "val_fraction", 0.0, 1.0, false, true);
    }
  }

  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    if (ck.object(s, "sweep", {"alphas", "content_codes", "target_speaker"})) {
      if (s.contains("alphas")) {
        if (!s.at("alphas").is_string()) {
          ck.add("sweep.alphas", "must be a string like \"0:2:0.5\" or \"0,1,2\"");
        } else {
          try {
            const auto alphas = parse_alpha_spec(s.at("alphas").get<std::string>());
            if (!std::is_sorted(alphas.begin(), alphas.end())) ck.add("sweep.alphas", "alphas must be ascending");
          } catch (const Error& e) {
            ck.add("sweep.alphas", e.what());
          }
        }
      }
      ck.integer(s, "sweep", "content_codes", 50);
      if (corpus_known) {
        ck.integer(s, "sweep", "target_speaker", 0, corpus.speakers - 1);
      } else {
        ck.integer(s, "sweep", "target_speaker", 0);
      }
    }
  }

  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    if (ck.object(e, "eval", {"shots", "ablation_seeds"})) {
      if (corpus_known) {
        ck.integer(e, "eval", "shots", 1, static_cast<long long>(corpus.speakers) * corpus.per_cell);
      } else {
        ck.integer(e, "eval", "shots", 1);
      }
      if (e.contains("ablation_seeds")) {
        const auto& seeds = e.at("ablation_seeds");
        if (!seeds.is_array()) {
          ck.add("eval.ablation_seeds", "must be an array of seeds");
        } else {
          for (std::size_t i = 0; i < seeds.size(); ++i) {
            if (!seeds[i].is_number_unsigned() && !(seeds[i].is_number_integer() && seeds[i].get<long long>() >= 0)) {
              ck.add("eval.ablation_seeds[" + std::to_string(i) + "]", "must be a non-negative integer");
            }
          }
          if (!seeds.empty() && seeds.size() < 3) ck.add("eval.ablation_seeds", "needs at least 3 seeds (or none)");
        }
      }
    }
  }
  return diags;
}

/// Throws Io when the file cannot be read; a JSON syntax error is reported
/// as a diagnostic.
inline std::vector<Diagnostic> validate_config(const std::string& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    return {{"", std::string("not valid JSON: ") + e.what()}};
  }
  return validate_config_json(j, fs::path(path).parent_path());
}

/// Builds the config from a document that passed validation.
inline PipelineConfig config_from_json(const json& j, const fs::path& base_dir) {
  PipelineConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  if (j.contains("corpus_path")) cfg.corpus_path = detail::resolve(j.at("corpus_path").get<std::string>(), base_dir);
  if (j.contains("train")) cfg.train = j.at("train").get<toy::TrainConfig>();
  if (j.contains("corpus")) cfg.train.corpus = j.at("corpus").get<toy::CorpusSpec>();
  if (j.contains("svm")) {
    const auto& s = j.at("svm");
    cfg.svm.lambda = s.value("lambda", cfg.svm.lambda);
    cfg.svm.epochs = s.value("epochs", cfg.svm.epochs);
    cfg.svm.val_fraction = s.value("val_fraction", cfg.svm.val_fraction);
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    cfg.sweep.alphas = s.value("alphas", cfg.sweep.alphas);
    cfg.sweep.content_codes = s.value("content_codes", cfg.sweep.content_codes);
    cfg.sweep.target_speaker = s.value("target_speaker", cfg.sweep.target_speaker);
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    cfg.shots = e.value("shots", cfg.shots);
    cfg.ablation_seeds = e.value("ablation_seeds", cfg.ablation_seeds);
  }
  cfg.train.seed = cfg.seed;
  cfg.train.corpus.seed = cfg.seed;
  cfg.svm.seed = cfg.seed;
  return cfg;
}

/// Validates then parses. Throws InvalidConfig listing every diagnostic.
inline PipelineConfig load_config(const std::string& path) {
  const auto diags = validate_config(path);
  if (!diags.empty()) throw Error(ErrorCode::InvalidConfig, path + "\n" + format_diagnostics(diags));
  return config_from_json(read_json_file(path), fs::path(path).parent_path());
}

// Stages and their exit codes. Configuration problems exit with 2.

inline constexpr int kConfigExitCode = 2;

enum class Stage { GenData, Train, Extract, TrainSvm, Sweep, Eval };

inline int exit_code(Stage s) { return 10 + static_cast<int>(s); }

inline std::string to_string(Stage s) {
  switch (s) {
    case Stage::GenData: return "gen-data";
    case Stage::Train: return "train";
    case Stage::Extract: return "extract";
    case Stage::TrainSvm: return "train-svm";
    case Stage::Sweep: return "sweep";
    case Stage::Eval: return "eval";
  }
  return "unknown";
}

struct RunOptions {
  std::ostream* log = nullptr;  // progress lines; null = silent
};

struct RunResult {
  int exit_code = 0;
  std::string run_dir;
  std::string message;
  bool reused = false;
};

inline constexpr const char* kCompleteMarker = ".complete";
inline constexpr const char* kFailedMarker = ".failed";

/// Relative path -> FNV-1a checksum of every artifact under a run directory,
/// markers and the manifest itself excluded.
inline std::map<std::string, std::string> artifact_checksums(const fs::path& run_dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), run_dir).generic_string();
    if (rel == kCompleteMarker || rel == kFailedMarker || rel == "manifest.json") continue;
    out[rel] = hex64(fnv1a64(read_file(entry.path().string())));
  }
  return out;
}

/// gen-data -> train -> extract -> train-svm -> sweep -> eval into
/// <out_dir>/run-<hash>/. A completed run with the same hash is reused; a
/// leftover partial run is discarded and redone.
inline RunResult run_pipeline(const PipelineConfig& cfg, const RunOptions& opt = {}) {
  RunResult result;
  const std::string hash = cfg.hash();
  const fs::path run = fs::path(cfg.out_dir) / ("run-" + hash);
  result.run_dir = run.string();
  auto log = [&](const std::string& line) {
    if (opt.log) *opt.log << line << '\n';
  };

  if (fs::exists(run / kCompleteMarker)) {
    result.reused = true;
    result.message = "reusing completed run " + run.string();
    log(result.message);
    return result;
  }
  if (fs::exists(run)) fs::remove_all(run);
  fs::create_directories(run);

  const Provenance prov{cfg.seed, hash};
  auto out = [&](const std::string& rel) {
    const fs::path p = run / rel;
    fs::create_directories(p.parent_path());
    return p.string();
  };

  // Stage state.
  toy::CorpusSpec spec;
  std::vector<toy::SyntheticSample> corpus;
  toy::TrainConfig train_cfg;
  toy::ToyModelParams params;
  toy::LatentSets latents;
  std::vector<EditDirection> emotion_dirs;
  EditDirection speaker_dir;
  eval::EvalOptions eval_opt;
  eval_opt.svm = cfg.svm;
  eval_opt.alphas = cfg.alphas();
  eval_opt.content_codes = cfg.sweep.content_codes;
  eval_opt.shots = cfg.shots;
  eval_opt.target_speaker = cfg.sweep.target_speaker;
  eval_opt.seed = cfg.seed;
  json summary;

  auto run_stage = [&](Stage stage, const std::function<void()>& body) {
    log("[" + to_string(stage) + "] start");
    try {
      body();
      return true;
    } catch (const std::exception& e) {
      result.exit_code = exit_code(stage);
      result.message = "[" + to_string(stage) + "] " + e.what();
      write_file((run / kFailedMarker).string(), result.message + "\n");
      log(result.message);
      return false;
    }
  };

  const bool ok =
      run_stage(Stage::GenData,
                [&] {
                  if (cfg.corpus_path) {
                    auto file = toy::load_corpus(*cfg.corpus_path);
                    spec = file.spec;
                    corpus = std::move(file.samples);
                  } else {
                    spec = cfg.train.corpus;
                    corpus = toy::generate_corpus(spec);
                  }
                  write_file(out("corpus.jsonl"), toy::write_corpus(spec, corpus, prov));
                }) &&
      run_stage(Stage::Train,
                [&] {
                  train_cfg = cfg.train;
                  train_cfg.corpus = spec;
                  train_cfg.seed = cfg.seed;
                  auto trained = toy::train(train_cfg, corpus);
                  params = std::move(trained.params);
                  toy::save_checkpoint((run / "checkpoint").string(), {train_cfg, params}, prov);
                  write_file(out("train_log.csv"), prov.csv_comment() + "\n" + trained.log.to_csv());
                }) &&
      run_stage(Stage::Extract,
                [&] {
                  latents = toy::extract_latents(params, corpus);
                  save_vector_store(out("latents/style.jsonl"), latents.style, prov);
                  save_vector_store(out("latents/speaker.jsonl"), latents.speaker, prov);
                }) &&
      run_stage(Stage::TrainSvm,
                [&] {
                  for (int e = 1; e <= spec.emotions; ++e) {
                    EditDirection d = eval::train_emotion_direction(latents.style, e, cfg.svm, cfg.shots);
                    d.provenance.config_hash = hash;
                    save_direction(out("directions/emotion-" + std::to_string(e) + ".json"), d);
                    emotion_dirs.push_back(std::move(d));
                  }
                  speaker_dir = eval::train_speaker_direction(latents.style, cfg.sweep.target_speaker, cfg.svm);
                  speaker_dir.provenance.config_hash = hash;
                  save_direction(out("directions/speaker-" + std::to_string(cfg.sweep.target_speaker) + ".json"),
                                 speaker_dir);
                }) &&
      run_stage(Stage::Sweep,
                [&] {
                  const auto factors = toy::make_factor_model(spec);
                  const auto target = eval::target_latents(latents, cfg.sweep.target_speaker);
                  const auto contents = eval::draw_content_codes(cfg.sweep.content_codes, spec.content_dim, cfg.seed);
                  const std::vector<EditDirection> cond{speaker_dir};
                  json sweeps = json::array();
                  for (const auto& d : emotion_dirs) {
                    const int e = static_cast<int>(&d - emotion_dirs.data()) + 1;
                    const eval::FactorOracle oracle(factors, e, cfg.sweep.target_speaker);
                    for (bool negate : {false, true}) {
                      const EditDirection dir = negate ? d.negated() : d;
                      const auto rep = eval::sweep_oracle(params, oracle, target.neutral_style, target.speaker, dir,
                                                          eval_opt.alphas, contents);
                      const auto cond_err = eval::speaker_preservation(params, oracle, target.neutral_style,
                                                                       target.speaker, dir, eval_opt.alphas, contents, cond);
                      const std::string stem = "sweeps/emotion-" + std::to_string(e) + (negate ? "-negated" : "");
                      write_file(out(stem + ".csv"), eval::sweep_csv(rep, prov, cond_err));
                      write_file(out(stem + ".svg"), eval::sweep_svg(rep, dir.attribute, prov));
                      sweeps.push_back({{"emotion_id", e}, {"negated", negate}, {"spearman_rho", rep.spearman_rho}});
                    }
                  }
                  summary["sweeps"] = sweeps;
                }) &&
      run_stage(Stage::Eval, [&] {
        summary["provenance"] = prov.to_json();
        summary["probe_accuracy"] = eval::probe_speaker_from_style(latents.style, cfg.seed);
        summary["speaker_chance"] = 1.0 / static_cast<double>(spec.speakers);
        json directions = json::array();
        std::vector<std::pair<int, double>> cosines;
        const auto neutral = latents.style.filter([](const LatentMeta& m, int) { return m.emotion_id == 0; });
        SvmConfig svm = cfg.svm;
        for (const auto& d : emotion_dirs) {
          const int e = static_cast<int>(&d - emotion_dirs.data()) + 1;
          const auto pos = latents.style.filter([&](const LatentMeta& m, int) { return m.emotion_id == e; });
          const double c = eval::oneshot_agreement(pos, neutral, d.attribute, svm, cfg.shots).cosine;
          cosines.emplace_back(e, c);
          directions.push_back({{"emotion_id", e},
                                {"attribute", d.attribute},
                                {"val_accuracy", d.provenance.val_accuracy.value_or(0.0)},
                                {"oneshot_cosine", c}});
        }
        summary["emotion_directions"] = directions;
        summary["speaker_direction_val_accuracy"] = speaker_dir.provenance.val_accuracy.value_or(0.0);
        const double baseline = eval::random_direction_baseline(latents.style.dim(), cfg.seed);
        summary["random_direction_baseline"] = baseline;
        write_file(out("reports/oneshot.csv"), eval::oneshot_csv(cosines, baseline, prov));
        if (!cfg.ablation_seeds.empty()) {
          log("[eval] ablation over " + std::to_string(cfg.ablation_seeds.size()) + " seeds");
          const auto ablation = eval::run_ablation(train_cfg, cfg.ablation_seeds, eval_opt);
          write_file(out("reports/ablation.csv"), eval::ablation_csv(ablation, prov));
          summary["ablation"] = eval::ablation_summary(ablation);
        }
        write_json_file(out("reports/summary.json"), summary);
      });

  if (!ok) return result;

  json manifest = {{"provenance", prov.to_json()}, {"config", cfg.normalized()}, {"artifacts", json::object()}};
  for (const auto& [rel, sum] : artifact_checksums(run)) manifest["artifacts"][rel] = sum;
  write_json_file((run / "manifest.json").string(), manifest);
  write_file((run / kCompleteMarker).string(), hash + "\n");
  result.message = "run complete: " + run.string();
  log(result.message);
  return result;
}

}  // namespace stylespace::pipeline
