// stylespace command-line entry point.

#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stylespace/editor.hpp"
#include "stylespace/eval/evaluate.hpp"
#include "stylespace/eval/reports.hpp"
#include "stylespace/pipeline.hpp"
#include "stylespace/svm.hpp"
#include "stylespace/toy/corpus.hpp"
#include "stylespace/toy/train.hpp"
#include "stylespace/vector_store.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stylespace;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  bool quiet = false;
};

Globals g;

void info(const std::string& line) {
  if (!g.quiet) std::cerr << line << '\n';
}

std::string require_out(const char* what) {
  if (g.out.empty()) throw Error(ErrorCode::InvalidConfig, std::string("--out ") + what + " is required");
  return g.out;
}

/// Pipeline config from --config (or defaults) with --seed applied on top.
pipeline::PipelineConfig effective_config() {
  pipeline::PipelineConfig cfg;
  if (!g.config.empty()) cfg = pipeline::load_config(g.config);
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.train.seed = *g.seed;
    if (!cfg.corpus_path) cfg.train.corpus.seed = *g.seed;
    cfg.svm.seed = *g.seed;
  }
  return cfg;
}

std::uint64_t seed_or(std::uint64_t fallback) { return g.seed.value_or(fallback); }

Provenance provenance_for(std::uint64_t seed, const json& params) { return Provenance{seed, config_hash(params)}; }

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

struct LoadedModel {
  toy::Checkpoint ckpt;
  toy::CorpusSpec spec;
  std::vector<toy::SyntheticSample> corpus;
};

LoadedModel load_model(const std::string& ckpt_dir, const std::string& corpus_path) {
  LoadedModel m;
  m.ckpt = toy::load_checkpoint(ckpt_dir);
  if (corpus_path.empty()) {
    m.spec = m.ckpt.config.corpus;
    m.corpus = toy::generate_corpus(m.spec);
  } else {
    auto file = toy::load_corpus(corpus_path);
    m.spec = file.spec;
    m.corpus = std::move(file.samples);
  }
  return m;
}

std::vector<int> emotion_list(const toy::CorpusSpec& spec, int only) {
  if (only > 0) {
    if (only > spec.emotions) throw Error(ErrorCode::InvalidConfig, "emotion id out of range");
    return {only};
  }
  std::vector<int> out;
  for (int e = 1; e <= spec.emotions; ++e) out.push_back(e);
  return out;
}

std::vector<EditDirection> load_conditions(const std::vector<std::string>& paths) {
  std::vector<EditDirection> out;
  for (const auto& p : paths) out.push_back(load_direction(p));
  return out;
}

/// A single-record store is used as is; several records collapse to their centroid.
std::pair<LatentVector, LatentMeta> load_base(const std::string& path) {
  const auto set = load_vector_store(path);
  if (set.empty()) throw Error(ErrorCode::EmptySet, path + " holds no vectors");
  if (set.size() == 1) return {set.vectors.front(), set.meta.front()};
  LatentMeta m;
  m.id = "centroid";
  return {neutral_style(set.vectors), m};
}

int cmd_gen_data(int speakers, int emotions, int per_cell) {
  auto cfg = effective_config();
  toy::CorpusSpec spec = cfg.train.corpus;
  if (speakers > 0) spec.speakers = speakers;
  if (emotions > 0) spec.emotions = emotions;
  if (per_cell > 0) spec.per_cell = per_cell;
  spec.seed = seed_or(cfg.seed);
  const std::string out = require_out("FILE");
  const auto samples = toy::generate_corpus(spec);
  ensure_parent(out);
  write_file(out, toy::write_corpus(spec, samples, provenance_for(spec.seed, json(spec))));
  info("wrote " + std::to_string(samples.size()) + " samples to " + out);
  return 0;
}

int cmd_train(const std::string& corpus_path, int epochs) {
  auto cfg = effective_config();
  toy::TrainConfig tc = cfg.train;
  if (epochs >= 0) tc.epochs = epochs;
  std::vector<toy::SyntheticSample> corpus;
  if (!corpus_path.empty()) {
    auto file = toy::load_corpus(corpus_path);
    tc.corpus = file.spec;
    corpus = std::move(file.samples);
  } else {
    corpus = toy::generate_corpus(tc.corpus);
  }
  const std::string dir = require_out("DIR");
  info("training " + std::to_string(tc.epochs) + " epochs on " + std::to_string(corpus.size()) + " samples");
  const auto result = toy::train(tc, corpus);
  const Provenance prov = provenance_for(tc.seed, json(tc));
  toy::save_checkpoint(dir, {tc, result.params}, prov);
  write_file((fs::path(dir) / "train_log.csv").string(), prov.csv_comment() + "\n" + result.log.to_csv());
  if (!result.log.epochs.empty()) {
    info("final recon " + format_double(result.log.epochs.back().mean.recon));
  }
  info("checkpoint written to " + dir);
  return 0;
}

int cmd_extract(const std::string& ckpt, const std::string& corpus, const std::string& out_style,
                const std::string& out_speaker) {
  const auto m = load_model(ckpt, corpus);
  const auto latents = toy::extract_latents(m.ckpt.params, m.corpus);
  const Provenance prov = provenance_for(seed_or(m.ckpt.config.seed), json(m.ckpt.config));
  ensure_parent(out_style);
  ensure_parent(out_speaker);
  save_vector_store(out_style, latents.style, prov);
  save_vector_store(out_speaker, latents.speaker, prov);
  info("extracted " + std::to_string(latents.style.size()) + " style and speaker vectors");
  return 0;
}

int cmd_train_svm(const std::string& pos_path, const std::string& neg_path, const std::string& attribute,
                  bool one_shot, const SvmConfig& base) {
  SvmConfig svm = base;
  svm.seed = seed_or(0);
  const auto pos = load_vector_store(pos_path);
  const auto neg = load_vector_store(neg_path);
  EditDirection d;
  if (one_shot) {
    std::size_t pi = 0, ni = 0;
    if (pos.size() != 1 || neg.size() != 1) {
      const auto pair = find_matched_pair(pos, neg);
      if (!pair) throw Error(ErrorCode::NoMatchedPair, "no positive/negative pair shares speaker and script");
      pi = pair->positive;
      ni = pair->negative;
    }
    if (pos.empty() || neg.empty()) throw Error(ErrorCode::SingleClass, "one-shot needs one vector per side");
    d = train_one_shot(pos.vectors[pi], pos.meta[pi], neg.vectors[ni], neg.meta[ni], attribute, svm);
  } else {
    d = train_direction(pos, neg, attribute, svm);
  }
  d.provenance.config_hash = config_hash(
      {{"lambda", svm.lambda}, {"epochs", svm.epochs}, {"val_fraction", svm.val_fraction}, {"one_shot", one_shot}});
  const std::string out = require_out("FILE");
  ensure_parent(out);
  save_direction(out, d);
  info("direction '" + attribute + "' written to " + out +
       (d.provenance.val_accuracy ? " (val accuracy " + format_double(*d.provenance.val_accuracy) + ")" : ""));
  return 0;
}

int cmd_edit(const std::string& base_path, const std::string& dir_path, double alpha,
             const std::vector<std::string>& conditions, bool literal) {
  auto [base, meta] = load_base(base_path);
  EditRequest req{base, load_direction(dir_path), alpha, load_conditions(conditions), !literal};
  const LatentVector edited = edit(req);
  LabeledLatentSet out_set;
  meta.id = meta.id + "+edit";
  out_set.push_back(edited, 0, meta);
  const std::string out = require_out("FILE");
  ensure_parent(out);
  save_vector_store(out, out_set,
                    provenance_for(seed_or(0), {{"alpha", alpha}, {"direction", req.direction.attribute},
                                                {"conditions", conditions.size()}, {"literal", literal}}));
  info("signed distance " + format_double(signed_distance(req.direction, base)) + " -> " +
       format_double(signed_distance(req.direction, edited)));
  return 0;
}

int cmd_sweep(const std::string& base_path, const std::string& dir_path, const std::string& alpha_spec,
              const std::vector<std::string>& conditions) {
  auto [base, meta] = load_base(base_path);
  const EditDirection dir = load_direction(dir_path);
  const auto alphas = parse_alpha_spec(alpha_spec);
  const auto conds = load_conditions(conditions);
  const fs::path out_dir = require_out("DIR");
  fs::create_directories(out_dir / "vectors");
  const Provenance prov = provenance_for(seed_or(0), {{"alphas", alpha_spec}, {"direction", dir.attribute},
                                                      {"conditions", conditions.size()}});
  std::string csv = prov.csv_comment() + "\nalpha,signed_distance,vector_file\n";
  std::size_t k = 0;
  for (const auto& [alpha, edited] : sweep(base, dir, alphas, conds)) {
    char name[32];
    std::snprintf(name, sizeof(name), "vectors/alpha-%03zu.jsonl", k++);
    LabeledLatentSet one;
    LatentMeta m = meta;
    m.id = meta.id + "@" + format_double(alpha);
    one.push_back(edited, 0, m);
    save_vector_store((out_dir / name).string(), one, prov);
    csv += format_double(alpha) + "," + format_double(signed_distance(dir, edited)) + "," + name + "\n";
  }
  write_file((out_dir / "sweep.csv").string(), csv);
  info("wrote " + std::to_string(alphas.size()) + " edited vectors to " + out_dir.string());
  return 0;
}

eval::EvalOptions eval_options(const LoadedModel& m, const std::string& alphas, int content_codes, int speaker,
                               int shots) {
  eval::EvalOptions opt;
  opt.seed = seed_or(m.ckpt.config.seed);
  opt.svm.seed = opt.seed;
  opt.alphas = parse_alpha_spec(alphas);
  opt.content_codes = content_codes;
  opt.target_speaker = speaker;
  opt.shots = shots;
  return opt;
}

int cmd_eval_probe(const std::string& ckpt, const std::string& corpus) {
  const auto m = load_model(ckpt, corpus);
  const auto latents = toy::extract_latents(m.ckpt.params, m.corpus);
  const std::uint64_t seed = seed_or(m.ckpt.config.seed);
  const double acc = eval::probe_speaker_from_style(latents.style, seed);
  std::cout << "probe_accuracy " << format_double(acc) << " (chance " << format_double(1.0 / m.spec.speakers) << ")\n";
  if (!g.out.empty()) {
    ensure_parent(g.out);
    write_json_file(g.out, {{"provenance", provenance_for(seed, json(m.ckpt.config)).to_json()},
                            {"probe_accuracy", acc},
                            {"speaker_chance", 1.0 / m.spec.speakers}});
  }
  return 0;
}

int cmd_eval_sweep(const std::string& ckpt, const std::string& corpus, int emotion, const std::string& alphas,
                   int content_codes, int speaker) {
  const auto m = load_model(ckpt, corpus);
  const auto opt = eval_options(m, alphas, content_codes, speaker, 100);
  const auto latents = toy::extract_latents(m.ckpt.params, m.corpus);
  const auto factors = toy::make_factor_model(m.spec);
  const auto target = eval::target_latents(latents, speaker);
  const auto contents = eval::draw_content_codes(content_codes, m.spec.content_dim, opt.seed);
  const Provenance prov = provenance_for(opt.seed, json(m.ckpt.config));
  for (int e : emotion_list(m.spec, emotion)) {
    const auto dir = eval::train_emotion_direction(latents.style, e, opt.svm, opt.shots);
    const eval::FactorOracle oracle(factors, e, speaker);
    const auto rep = eval::sweep_oracle(m.ckpt.params, oracle, target.neutral_style, target.speaker, dir, opt.alphas,
                                        contents);
    std::cout << dir.attribute << " rho " << format_double(rep.spearman_rho) << '\n';
    if (!g.out.empty()) {
      fs::create_directories(g.out);
      const std::string stem = (fs::path(g.out) / ("emotion-" + std::to_string(e))).string();
      write_file(stem + ".csv", eval::sweep_csv(rep, prov));
      write_file(stem + ".svg", eval::sweep_svg(rep, dir.attribute, prov));
    }
  }
  return 0;
}

int cmd_eval_oneshot(const std::string& ckpt, const std::string& corpus, int emotion, int shots) {
  const auto m = load_model(ckpt, corpus);
  const auto opt = eval_options(m, "0", 50, 0, shots);
  const auto latents = toy::extract_latents(m.ckpt.params, m.corpus);
  const auto neutral = latents.style.filter([](const LatentMeta& x, int) { return x.emotion_id == 0; });
  std::vector<std::pair<int, double>> cosines;
  for (int e : emotion_list(m.spec, emotion)) {
    const auto pos = latents.style.filter([&](const LatentMeta& x, int) { return x.emotion_id == e; });
    const auto r = eval::oneshot_agreement(pos, neutral, eval::emotion_attribute(e), opt.svm, shots);
    cosines.emplace_back(e, r.cosine);
    std::cout << eval::emotion_attribute(e) << " cosine " << format_double(r.cosine) << '\n';
  }
  const double baseline = eval::random_direction_baseline(latents.style.dim(), opt.seed);
  std::cout << "random_direction_baseline " << format_double(baseline) << '\n';
  if (!g.out.empty()) {
    ensure_parent(g.out);
    write_file(g.out, eval::oneshot_csv(cosines, baseline, provenance_for(opt.seed, json(m.ckpt.config))));
  }
  return 0;
}

int cmd_eval_ablation(const std::string& ckpt, const std::string& seeds_spec) {
  const auto ck = toy::load_checkpoint(ckpt);
  std::vector<std::uint64_t> seeds;
  for (double s : parse_alpha_spec(seeds_spec)) {
    if (s < 0 || s != std::floor(s)) throw Error(ErrorCode::InvalidConfig, "seeds must be non-negative integers");
    seeds.push_back(static_cast<std::uint64_t>(s));
  }
  eval::EvalOptions opt;
  info("ablation: 3 variants x " + std::to_string(seeds.size()) + " seeds");
  const auto rep = eval::run_ablation(ck.config, seeds, opt);
  for (const auto& v : rep.variants) {
    std::cout << eval::to_string(v.variant) << " probe " << format_double(v.probe().mean) << " svm "
              << format_double(v.svm().mean) << " rho " << format_double(v.rho().mean)
              << (v.all_ok() ? "" : " (some runs failed)") << '\n';
  }
  std::cout << "cycle_ordering_holds " << rep.cycle_ordering_holds() << '\n'
            << "adversary_ordering_holds " << rep.adversary_ordering_holds() << '\n';
  if (!g.out.empty()) {
    ensure_parent(g.out);
    write_file(g.out, eval::ablation_csv(rep, provenance_for(seeds.front(), json(ck.config))));
  }
  return 0;
}

int cmd_pipeline() {
  if (g.config.empty()) throw Error(ErrorCode::InvalidConfig, "pipeline needs --config FILE");
  auto cfg = effective_config();
  if (!g.out.empty()) cfg.out_dir = g.out;
  std::ostream* log = g.quiet ? nullptr : &std::cerr;
  const auto result = pipeline::run_pipeline(cfg, {log});
  std::cout << result.run_dir << '\n';
  if (result.exit_code != 0) std::cerr << "error: " << result.message << '\n';
  return result.exit_code;
}

int cmd_validate() {
  if (g.config.empty()) throw Error(ErrorCode::InvalidConfig, "validate needs --config FILE");
  const auto diags = pipeline::validate_config(g.config);
  std::cout << pipeline::format_diagnostics(diags);
  if (diags.empty()) info(g.config + ": ok");
  return diags.empty() ? 0 : pipeline::kConfigExitCode;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stylespace: hyperplane editing of style latents on a synthetic speech corpus"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", g.seed, "Seed recorded in every artifact; overrides the config seed");
  app.add_option("--config", g.config, "Pipeline config (JSON)");
  app.add_option("--out", g.out, "Output file or directory");
  app.add_flag("-q,--quiet", g.quiet, "Suppress progress messages");

  std::function<int()> action;

  int speakers = 0, emotions = 0, per_cell = 0;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic corpus");
  gen->add_option("--speakers", speakers);
  gen->add_option("--emotions", emotions);
  gen->add_option("--per-cell", per_cell);
  gen->callback([&] { action = [&] { return cmd_gen_data(speakers, emotions, per_cell); }; });

  std::string corpus_path;
  int epochs = -1;
  auto* train = app.add_subcommand("train", "Train the toy model");
  train->add_option("--corpus", corpus_path, "Corpus file (default: generate from config)");
  train->add_option("--epochs", epochs, "Override the configured epoch count");
  train->callback([&] { action = [&] { return cmd_train(corpus_path, epochs); }; });

  std::string ckpt, out_style, out_speaker;
  auto* extract = app.add_subcommand("extract", "Extract style and speaker vectors");
  extract->add_option("--ckpt", ckpt)->required();
  extract->add_option("--corpus", corpus_path);
  extract->add_option("--out-style", out_style)->required();
  extract->add_option("--out-speaker", out_speaker)->required();
  extract->callback([&] { action = [&] { return cmd_extract(ckpt, corpus_path, out_style, out_speaker); }; });

  std::string pos, neg, attribute;
  bool one_shot = false;
  SvmConfig svm;
  auto* tsvm = app.add_subcommand("train-svm", "Train an edit direction");
  tsvm->add_option("--pos", pos)->required();
  tsvm->add_option("--neg", neg)->required();
  tsvm->add_option("--attribute", attribute)->required();
  tsvm->add_flag("--one-shot", one_shot, "Train on one matched pair (same speaker and script)");
  tsvm->add_option("--lambda", svm.lambda)->capture_default_str();
  tsvm->add_option("--epochs", svm.epochs)->capture_default_str();
  tsvm->add_option("--val-fraction", svm.val_fraction)->capture_default_str();
  tsvm->callback([&] { action = [&] { return cmd_train_svm(pos, neg, attribute, one_shot, svm); }; });

  std::string base, direction, alphas = "0:2:0.5";
  double alpha = 0.0;
  bool literal = false;
  std::vector<std::string> conditions;
  auto* ed = app.add_subcommand("edit", "Move a vector along an edit direction");
  ed->add_option("--base", base)->required();
  ed->add_option("--direction", direction)->required();
  ed->add_option("--alpha", alpha)->required();
  ed->add_option("--condition", conditions, "Direction to hold fixed (repeatable)");
  ed->add_flag("--literal", literal, "Skip re-normalizing the conditioned direction");
  ed->callback([&] { action = [&] { return cmd_edit(base, direction, alpha, conditions, literal); }; });

  auto* sw = app.add_subcommand("sweep", "Edit over a range of alphas");
  sw->add_option("--base", base)->required();
  sw->add_option("--direction", direction)->required();
  sw->add_option("--alphas", alphas, "start:stop:step or a,b,c")->capture_default_str();
  sw->add_option("--condition", conditions);
  sw->callback([&] { action = [&] { return cmd_sweep(base, direction, alphas, conditions); }; });

  int emotion = 0, content_codes = 50, speaker = 0, shots = 100;
  std::string seeds = "1,2,3";
  auto* ev = app.add_subcommand("eval", "Evaluate a trained checkpoint");
  ev->require_subcommand(1);
  auto* ev_sweep = ev->add_subcommand("sweep", "Oracle intensity sweep per emotion");
  ev_sweep->add_option("--ckpt", ckpt)->required();
  ev_sweep->add_option("--corpus", corpus_path);
  ev_sweep->add_option("--emotion", emotion, "Emotion id (default: all)");
  ev_sweep->add_option("--alphas", alphas)->capture_default_str();
  ev_sweep->add_option("--content-codes", content_codes)->capture_default_str();
  ev_sweep->add_option("--speaker", speaker)->capture_default_str();
  ev_sweep->callback(
      [&] { action = [&] { return cmd_eval_sweep(ckpt, corpus_path, emotion, alphas, content_codes, speaker); }; });
  auto* ev_probe = ev->add_subcommand("probe", "Speaker probe on style vectors");
  ev_probe->add_option("--ckpt", ckpt)->required();
  ev_probe->add_option("--corpus", corpus_path);
  ev_probe->callback([&] { action = [&] { return cmd_eval_probe(ckpt, corpus_path); }; });
  auto* ev_one = ev->add_subcommand("oneshot", "One-shot vs many-shot direction agreement");
  ev_one->add_option("--ckpt", ckpt)->required();
  ev_one->add_option("--corpus", corpus_path);
  ev_one->add_option("--emotion", emotion);
  ev_one->add_option("--shots", shots)->capture_default_str();
  ev_one->callback([&] { action = [&] { return cmd_eval_oneshot(ckpt, corpus_path, emotion, shots); }; });
  auto* ev_abl = ev->add_subcommand("ablation", "Full vs no-adversarial vs no-cycle");
  ev_abl->add_option("--ckpt", ckpt, "Checkpoint whose train config is the base")->required();
  ev_abl->add_option("--seeds", seeds, "Comma list of at least 3 seeds")->capture_default_str();
  ev_abl->callback([&] { action = [&] { return cmd_eval_ablation(ckpt, seeds); }; });

  app.add_subcommand("pipeline", "Run every stage from a config")->callback([&] { action = cmd_pipeline; });
  app.add_subcommand("validate", "Check a pipeline config")->callback([&] { action = cmd_validate; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    return action ? action() : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::InvalidConfig ? pipeline::kConfigExitCode : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
