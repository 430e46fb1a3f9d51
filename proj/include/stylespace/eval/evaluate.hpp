#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "stylespace/editor.hpp"
#include "stylespace/eval/oracle.hpp"
#include "stylespace/eval/probe.hpp"
#include "stylespace/svm.hpp"
#include "stylespace/toy/train.hpp"

namespace stylespace::eval {

struct EvalOptions {
  SvmConfig svm;
  std::vector<double> alphas{0.0, 0.5, 1.0, 1.5, 2.0};
  int content_codes = 50;
  int shots = 100;  // samples per class for emotion directions
  int target_speaker = 0;
  std::uint64_t seed = 1;
};

struct EmotionMetrics {
  int emotion_id = 0;
  EditDirection direction;
  double val_accuracy = 0.0;
  SweepReport sweep;
  SweepReport negated_sweep;
  double oneshot_cosine = 0.0;
};

struct ModelMetrics {
  double probe_accuracy = 0.0;
  std::vector<EmotionMetrics> emotions;
  EditDirection speaker_direction;

  double mean_val_accuracy() const {
    double s = 0.0;
    for (const auto& e : emotions) s += e.val_accuracy;
    return emotions.empty() ? 0.0 : s / static_cast<double>(emotions.size());
  }
  double mean_rho() const {
    double s = 0.0;
    for (const auto& e : emotions) s += e.sweep.spearman_rho;
    return emotions.empty() ? 0.0 : s / static_cast<double>(emotions.size());
  }
};

inline std::string emotion_attribute(int emotion_id) {
  return "emotion-" + std::to_string(emotion_id) + "-vs-neutral";
}

inline LabeledLatentSet sample_subset(const LabeledLatentSet& set, int count, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(set.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  LabeledLatentSet out;
  const auto n = std::min(set.size(), static_cast<std::size_t>(std::max(count, 0)));
  for (std::size_t k = 0; k < n; ++k) out.push_back(set.vectors[idx[k]], set.labels[idx[k]], set.meta[idx[k]]);
  return out;
}

/// Emotion-vs-neutral direction from `shots` random samples per class,
/// validated on the configured held-out fraction.
inline EditDirection train_emotion_direction(const LabeledLatentSet& style, int emotion_id, const SvmConfig& svm,
                                             int shots) {
  std::mt19937_64 rng(svm.seed + static_cast<std::uint64_t>(emotion_id));
  const auto pos = sample_subset(style.filter([&](const LatentMeta& m, int) { return m.emotion_id == emotion_id; }),
                                 shots, rng);
  const auto neg = sample_subset(style.filter([](const LatentMeta& m, int) { return m.emotion_id == 0; }), shots, rng);
  return train_direction(pos, neg, emotion_attribute(emotion_id), svm);
}

/// Target speaker vs every other speaker on style vectors, balanced by
/// sampling as many negatives as the speaker has samples.
inline EditDirection train_speaker_direction(const LabeledLatentSet& style, int speaker_id, const SvmConfig& svm) {
  std::mt19937_64 rng(svm.seed ^ 0x5eedULL);
  const auto pos = style.filter([&](const LatentMeta& m, int) { return m.speaker_id == speaker_id; });
  const auto others = style.filter([&](const LatentMeta& m, int) { return m.speaker_id != speaker_id; });
  const auto neg = sample_subset(others, static_cast<int>(pos.size()), rng);
  return train_direction(pos, neg, "speaker-" + std::to_string(speaker_id), svm);
}

struct TargetLatents {
  LatentVector neutral_style;
  LatentVector speaker;
};

/// Centroids of the target speaker's neutral style vectors and of all of the
/// speaker's speaker vectors.
inline TargetLatents target_latents(const toy::LatentSets& latents, int speaker_id) {
  const auto neutral = latents.style.filter(
      [&](const LatentMeta& m, int) { return m.speaker_id == speaker_id && m.emotion_id == 0; });
  const auto spk = latents.speaker.filter([&](const LatentMeta& m, int) { return m.speaker_id == speaker_id; });
  if (neutral.empty() || spk.empty()) throw Error(ErrorCode::EmptySet, "target speaker has no samples");
  return {neutral_style(neutral.vectors), centroid(spk.vectors)};
}

inline ModelMetrics evaluate_model(const toy::ToyModelParams& params, const toy::CorpusSpec& corpus_spec,
                                   const std::vector<toy::SyntheticSample>& corpus, const EvalOptions& opt) {
  ModelMetrics out;
  const auto latents = toy::extract_latents(params, corpus);
  out.probe_accuracy = probe_speaker_from_style(latents.style, opt.seed);
  const auto factors = toy::make_factor_model(corpus_spec);
  const auto target = target_latents(latents, opt.target_speaker);
  const Eigen::MatrixXd contents = draw_content_codes(opt.content_codes, corpus_spec.content_dim, opt.seed);
  SvmConfig svm = opt.svm;
  svm.seed = opt.seed;
  out.speaker_direction = train_speaker_direction(latents.style, opt.target_speaker, svm);

  const auto neutral = latents.style.filter([](const LatentMeta& m, int) { return m.emotion_id == 0; });
  for (int e = 1; e <= corpus_spec.emotions; ++e) {
    EmotionMetrics em;
    em.emotion_id = e;
    em.direction = train_emotion_direction(latents.style, e, svm, opt.shots);
    em.val_accuracy = em.direction.provenance.val_accuracy.value_or(0.0);
    const FactorOracle oracle(factors, e, opt.target_speaker);
    em.sweep = sweep_oracle(params, oracle, target.neutral_style, target.speaker, em.direction, opt.alphas, contents);
    em.negated_sweep =
        sweep_oracle(params, oracle, target.neutral_style, target.speaker, em.direction.negated(), opt.alphas, contents);
    const auto pos = latents.style.filter([&](const LatentMeta& m, int) { return m.emotion_id == e; });
    em.oneshot_cosine = oneshot_agreement(pos, neutral, em.direction.attribute, svm, opt.shots).cosine;
    out.emotions.push_back(std::move(em));
  }
  return out;
}

// Ablation: the full model against one without the adversarial speaker
// classifier and one without the cycle-consistency losses.

enum class Variant { Full, NoAdversary, NoCycle };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoAdversary: return "no-adversarial";
    case Variant::NoCycle: return "no-cycle";
  }
  return "unknown";
}

inline toy::TrainConfig variant_config(toy::TrainConfig base, Variant v, std::uint64_t seed) {
  base.seed = seed;
  base.corpus.seed = seed;
  if (v == Variant::NoAdversary) base.use_adversary = false;
  if (v == Variant::NoCycle) base.use_cycle = false;
  return base;
}

struct SeedRun {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double probe_accuracy = 0.0;
  double svm_accuracy = 0.0;
  double sweep_rho = 0.0;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

inline MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd r;
  if (v.empty()) return r;
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return r;
}

struct VariantReport {
  Variant variant = Variant::Full;
  std::vector<SeedRun> runs;

  bool all_ok() const {
    return std::all_of(runs.begin(), runs.end(), [](const SeedRun& r) { return r.ok; });
  }
  template <typename F>
  MeanSd stat(F field) const {
    std::vector<double> v;
    for (const auto& r : runs)
      if (r.ok) v.push_back(field(r));
    return mean_sd(v);
  }
  MeanSd probe() const { return stat([](const SeedRun& r) { return r.probe_accuracy; }); }
  MeanSd svm() const { return stat([](const SeedRun& r) { return r.svm_accuracy; }); }
  MeanSd rho() const { return stat([](const SeedRun& r) { return r.sweep_rho; }); }
};

struct AblationReport {
  std::vector<VariantReport> variants;  // full, no-adversarial, no-cycle

  const VariantReport& get(Variant v) const {
    for (const auto& r : variants)
      if (r.variant == v) return r;
    throw Error(ErrorCode::InvalidConfig, "variant missing from report");
  }
  /// Full model's mean emotion-direction accuracy is at least the no-cycle model's.
  bool cycle_ordering_holds() const {
    return get(Variant::Full).all_ok() && get(Variant::NoCycle).all_ok() &&
           get(Variant::Full).svm().mean >= get(Variant::NoCycle).svm().mean;
  }
  /// Full model's mean speaker-probe accuracy is at most the no-adversarial model's.
  bool adversary_ordering_holds() const {
    return get(Variant::Full).all_ok() && get(Variant::NoAdversary).all_ok() &&
           get(Variant::Full).probe().mean <= get(Variant::NoAdversary).probe().mean;
  }

  std::string to_csv() const {
    std::string out = "variant,seed,ok,probe_accuracy,svm_accuracy,sweep_rho\n";
    for (const auto& v : variants) {
      for (const auto& r : v.runs) {
        out += to_string(v.variant) + "," + std::to_string(r.seed) + "," + (r.ok ? "1" : "0") + "," +
               format_double(r.probe_accuracy) + "," + format_double(r.svm_accuracy) + "," +
               format_double(r.sweep_rho) + "\n";
      }
    }
    return out;
  }
};

/// Trains and scores every variant for every seed. A variant whose training
/// fails is recorded as a failed run rather than aborting the ablation.
inline AblationReport run_ablation(const toy::TrainConfig& base, const std::vector<std::uint64_t>& seeds,
                                   const EvalOptions& eval_opt, int min_seeds = 3) {
  if (static_cast<int>(seeds.size()) < min_seeds) {
    throw Error(ErrorCode::InvalidConfig, "ablation needs at least " + std::to_string(min_seeds) + " seeds");
  }
  AblationReport report;
  for (Variant v : {Variant::Full, Variant::NoAdversary, Variant::NoCycle}) {
    VariantReport vr;
    vr.variant = v;
    for (std::uint64_t seed : seeds) {
      SeedRun run;
      run.seed = seed;
      try {
        const toy::TrainConfig cfg = variant_config(base, v, seed);
        const auto corpus = toy::generate_corpus(cfg.corpus);
        const auto trained = toy::train(cfg, corpus);
        EvalOptions opt = eval_opt;
        opt.seed = seed;
        const ModelMetrics m = evaluate_model(trained.params, cfg.corpus, corpus, opt);
        run.probe_accuracy = m.probe_accuracy;
        run.svm_accuracy = m.mean_val_accuracy();
        run.sweep_rho = m.mean_rho();
        run.ok = true;
      } catch (const Error& e) {
        run.error = e.what();
      }
      vr.runs.push_back(std::move(run));
    }
    report.variants.push_back(std::move(vr));
  }
  return report;
}

}  // namespace stylespace::eval
