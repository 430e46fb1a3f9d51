#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "stylespace/eval/reports.hpp"
#include "support.hpp"

using namespace stylespace;
using namespace stylespace::eval;

// spearman

TEST(Spearman, PerfectAndReversed) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> up{0.1, 0.5, 0.9, 4.0, 100.0};
  const std::vector<double> down{5, 4, 3, 2, 1};
  EXPECT_NEAR(spearman_rho(x, up), 1.0, 1e-15);
  EXPECT_NEAR(spearman_rho(x, down), -1.0, 1e-15);
}

TEST(Spearman, TiesShareTheMeanRank) {
  // Ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4): 4.5 / sqrt(4.5 * 5).
  const std::vector<double> x{1, 2, 2, 3};
  const std::vector<double> y{1, 2, 3, 4};
  EXPECT_NEAR(spearman_rho(x, y), 4.5 / std::sqrt(22.5), 1e-15);
}

TEST(Spearman, ConstantOrShortInputIsZero) {
  const std::vector<double> c{2, 2, 2};
  const std::vector<double> y{1, 2, 3};
  EXPECT_EQ(spearman_rho(c, y), 0.0);
  EXPECT_EQ(spearman_rho(std::vector<double>{1.0}, std::vector<double>{2.0}), 0.0);
  EXPECT_ERROR_CODE(spearman_rho(c, std::vector<double>{1.0}), ErrorCode::DimMismatch);
}

TEST(Spearman, InvariantUnderMonotoneTransforms) {
  std::mt19937_64 rng(501);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = testkit::random_dim(rng, 2, 40);
    const auto x = testkit::random_values(rng, n);
    const auto y = testkit::random_values(rng, n);
    std::vector<double> fx, gy;
    for (double v : x) fx.push_back(std::exp(v));
    for (double v : y) gy.push_back(v * v * v - 7.0);
    const double rho = spearman_rho(x, y);
    EXPECT_NEAR(spearman_rho(fx, gy), rho, 1e-12);
    EXPECT_NEAR(spearman_rho(y, x), rho, 1e-12);
    EXPECT_LE(std::abs(rho), 1.0 + 1e-12);
  }
}

// probe

namespace {

LabeledLatentSet speaker_set(std::mt19937_64& rng, int speakers, int per_speaker, bool informative) {
  LabeledLatentSet set;
  for (int s = 0; s < speakers; ++s) {
    for (int i = 0; i < per_speaker; ++i) {
      auto v = testkit::random_values(rng, 8, informative ? 0.01 : 1.0);
      if (informative) v[static_cast<std::size_t>(s)] += 1.0;
      LatentMeta m;
      m.speaker_id = s;
      set.push_back(LatentVector(v), 0, m);
    }
  }
  return set;
}

}  // namespace

TEST(Probe, OneHotSpeakerCodesAreReadable) {
  std::mt19937_64 rng(503);
  EXPECT_GE(probe_speaker_from_style(speaker_set(rng, 4, 50, true), 1), 0.99);
}

TEST(Probe, NoiseIsAtChance) {
  std::mt19937_64 rng(505);
  const double acc = probe_speaker_from_style(speaker_set(rng, 4, 100, false), 1);
  EXPECT_NEAR(acc, 0.25, 0.1);
}

TEST(Probe, InsufficientData) {
  std::mt19937_64 rng(507);
  EXPECT_ERROR_CODE(probe_speaker_from_style(speaker_set(rng, 1, 50, true), 1), ErrorCode::InsufficientData);
  EXPECT_ERROR_CODE(probe_speaker_from_style(speaker_set(rng, 3, 4, true), 1), ErrorCode::InsufficientData);
}

// factor oracle

TEST(FactorOracle, CleanSamplesOfTheTargetSpeakerHaveNoSpeakerError) {
  toy::CorpusSpec spec;
  spec.noise = 0.0;
  spec.per_cell = 5;
  const auto factors = toy::make_factor_model(spec);
  const FactorOracle oracle(factors, 2, 1);
  for (const auto& s : toy::generate_corpus(spec)) {
    const auto sc = oracle.score(s.features);
    if (s.speaker_id == 1) EXPECT_LT(sc.speaker_axis_error, 1e-10);
    else EXPECT_GT(sc.speaker_axis_error, 1e-3);
  }
}

TEST(FactorOracle, EmotionScoreMeasuresIntensity) {
  toy::CorpusSpec spec;
  const auto factors = toy::make_factor_model(spec);
  const FactorOracle oracle(factors, 1, 0);
  std::mt19937_64 rng(509);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = toy::draw_matrix(rng, spec.content_dim, 1, 1.0);
    const double intensity = testkit::random_real(rng, 0.0, 1.0);
    const auto neutral = factors.clean_features(t, 0, 0, intensity);
    const auto emotional = factors.clean_features(t, 0, 1, intensity);
    const double shift = oracle.score(emotional).emotion_axis_score - oracle.score(neutral).emotion_axis_score;
    EXPECT_NEAR(shift, intensity, 1e-10);
  }
  EXPECT_ERROR_CODE(FactorOracle(factors, 0, 0), ErrorCode::InvalidConfig);
}

// one-shot agreement

namespace {

LabeledLatentSet repeated(const LatentVector& v, int n, int speaker, int content) {
  LabeledLatentSet out;
  for (int i = 0; i < n; ++i) out.push_back(v, 0, LatentMeta{"r", speaker, 0, 0.0, content});
  return out;
}

}  // namespace

TEST(OneShotAgreement, IdenticalDataAgreesPerfectly) {
  const auto pos = repeated(LatentVector{1.0, 0.5, -0.2}, 100, 0, 3);
  const auto neg = repeated(LatentVector{-0.3, 0.1, 0.4}, 100, 0, 3);
  SvmConfig svm;
  svm.val_fraction = 0.0;
  const auto r = oneshot_agreement(pos, neg, "x", svm, 100);
  EXPECT_NEAR(r.cosine, 1.0, 1e-9);
}

TEST(OneShotAgreement, SymmetricAndBounded) {
  std::mt19937_64 rng(511);
  for (int trial = 0; trial < 100; ++trial) {
    const auto dim = testkit::random_dim(rng, 2, 32);
    const EditDirection a{testkit::random_unit(rng, dim), 0.0, "a", {}};
    const EditDirection b{testkit::random_unit(rng, dim), 0.0, "b", {}};
    EXPECT_EQ(direction_agreement(a, b), direction_agreement(b, a));
    EXPECT_LE(std::abs(direction_agreement(a, b)), 1.0 + 1e-12);
  }
}

TEST(OneShotAgreement, Errors) {
  const auto pos = repeated(LatentVector{1.0, 0.0}, 10, 0, 1);
  const auto neg = repeated(LatentVector{0.0, 1.0}, 10, 0, 2);
  EXPECT_ERROR_CODE(oneshot_agreement(pos, neg, "x", SvmConfig{}, 10), ErrorCode::NoMatchedPair);
  EXPECT_ERROR_CODE(oneshot_agreement(pos, neg, "x", SvmConfig{}, 11), ErrorCode::InsufficientData);
  const auto other_speaker = repeated(LatentVector{0.0, 1.0}, 10, 1, 1);
  EXPECT_ERROR_CODE(oneshot_agreement(pos, other_speaker, "x", SvmConfig{}, 10), ErrorCode::NoMatchedPair);
}

TEST(RandomBaseline, CenteredWithOneOverRootDSpread) {
  const std::size_t dim = 32;
  double sum = 0.0, sum2 = 0.0;
  const int n = 400;
  for (int seed = 0; seed < n; ++seed) {
    const double c = random_direction_baseline(dim, static_cast<std::uint64_t>(seed));
    sum += c;
    sum2 += c * c;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sum2 / n - mean * mean);
  EXPECT_NEAR(mean, 0.0, 0.2);
  EXPECT_NEAR(sd, 1.0 / std::sqrt(static_cast<double>(dim)), 0.2 / std::sqrt(static_cast<double>(dim)));
  EXPECT_EQ(random_direction_baseline(dim, 5), random_direction_baseline(dim, 5));
}

// ablation

TEST(Ablation, UntrainedVariantsAreIndistinguishable) {
  toy::TrainConfig base;
  base.epochs = 0;
  EvalOptions opt;
  const auto rep = run_ablation(base, {1}, opt, 1);
  ASSERT_EQ(rep.variants.size(), 3u);
  const auto& full = rep.get(Variant::Full).runs.front();
  ASSERT_TRUE(full.ok) << full.error;
  for (auto v : {Variant::NoAdversary, Variant::NoCycle}) {
    const auto& r = rep.get(v).runs.front();
    ASSERT_TRUE(r.ok) << r.error;
    EXPECT_EQ(r.probe_accuracy, full.probe_accuracy);
    EXPECT_EQ(r.svm_accuracy, full.svm_accuracy);
    EXPECT_EQ(r.sweep_rho, full.sweep_rho);
  }
  EXPECT_TRUE(rep.cycle_ordering_holds());
  EXPECT_TRUE(rep.adversary_ordering_holds());
  const auto csv = ablation_csv(rep, Provenance{1, "h"});
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Ablation, TooFewSeedsRejected) {
  EXPECT_ERROR_CODE(run_ablation(toy::TrainConfig{}, {1, 2}, EvalOptions{}), ErrorCode::InvalidConfig);
}

TEST(Ablation, FailedRunBreaksTheOrdering) {
  AblationReport rep;
  for (Variant v : {Variant::Full, Variant::NoAdversary, Variant::NoCycle}) {
    VariantReport vr;
    vr.variant = v;
    vr.runs.push_back(SeedRun{1, true, "", 0.3, 0.9, 1.0});
    rep.variants.push_back(vr);
  }
  EXPECT_TRUE(rep.cycle_ordering_holds());
  rep.variants[2].runs.front().ok = false;
  EXPECT_FALSE(rep.cycle_ordering_holds());
  EXPECT_TRUE(rep.adversary_ordering_holds());
  rep.variants[1].runs.front().probe_accuracy = 0.2;
  EXPECT_FALSE(rep.adversary_ordering_holds());
}

// reports

TEST(Reports, SweepCsvLayout) {
  SweepReport rep;
  rep.alphas = {0.0, 1.0};
  rep.signed_distances = {0.25, 1.25};
  rep.scores = {{0.1, 0.2}, {0.3, 0.4}};
  rep.spearman_rho = 1.0;
  const auto csv = sweep_csv(rep, Provenance{3, "ff"}, {0.5, 0.6});
  EXPECT_EQ(csv,
            "# stylespace 0.1.0 seed=3 config_hash=ff\n"
            "# spearman_rho=1\n"
            "alpha,signed_distance,emotion_axis_score,speaker_axis_error,conditioned_speaker_axis_error\n"
            "0,0.25,0.1,0.2,0.5\n"
            "1,1.25,0.3,0.4,0.6\n");
  const auto svg = sweep_svg(rep, "e<1>", Provenance{3, "ff"});
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_NE(svg.find("e&lt;1&gt;"), std::string::npos);
  EXPECT_NE(svg.find("seed=3"), std::string::npos);
}
