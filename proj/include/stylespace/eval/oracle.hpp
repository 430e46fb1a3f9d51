#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stylespace/editor.hpp"
#include "stylespace/svm.hpp"
#include "stylespace/toy/corpus.hpp"
#include "stylespace/toy/model.hpp"
#include "stylespace/toy/train.hpp"

namespace stylespace::eval {

/// Scores decoded features against the generator's known factors.
///   emotion_axis_score  B_e·x / ‖B_e‖², i.e. the intensity a clean sample
///                       would need to put that much energy on B_e
///   speaker_axis_error  ‖x - P x‖ with P the projector onto span(A_spk[k], B),
///                       everything speaker k can produce at any intensity
struct OracleScore {
  double emotion_axis_score = 0.0;
  double speaker_axis_error = 0.0;
};

class FactorOracle {
 public:
  FactorOracle(toy::FactorModel factors, int emotion_id, int speaker_id)
      : factors_(std::move(factors)), emotion_id_(emotion_id), speaker_id_(speaker_id) {
    emotion_axis_ = factors_.emotion_factor(emotion_id);
    const auto& a = factors_.speaker_maps.at(static_cast<std::size_t>(speaker_id));
    Eigen::MatrixXd span(a.rows(), a.cols() + factors_.emotion_factors.cols());
    span << a, factors_.emotion_factors;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(span);
    basis_ = qr.householderQ() * Eigen::MatrixXd::Identity(span.rows(), span.cols());
  }

  OracleScore score(const Eigen::VectorXd& x) const {
    OracleScore s;
    s.emotion_axis_score = emotion_axis_.dot(x) / emotion_axis_.squaredNorm();
    s.speaker_axis_error = (x - basis_ * (basis_.transpose() * x)).norm();
    return s;
  }

  int emotion_id() const { return emotion_id_; }
  int speaker_id() const { return speaker_id_; }

 private:
  toy::FactorModel factors_;
  int emotion_id_;
  int speaker_id_;
  Eigen::VectorXd emotion_axis_;
  Eigen::MatrixXd basis_;
};

/// Spearman rank correlation; ties share their mean rank. Zero when either
/// side is constant.
inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::DimMismatch, "spearman: length mismatch");
  if (x.size() < 2) return 0.0;
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = mean_rank;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

/// Content codes drawn like the corpus draws scripts.
inline Eigen::MatrixXd draw_content_codes(int count, int content_dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return toy::draw_matrix(rng, count, content_dim, 1.0);
}

struct SweepReport {
  std::vector<double> alphas;
  std::vector<OracleScore> scores;  // mean over content codes, one per alpha
  std::vector<double> signed_distances;
  double spearman_rho = 0.0;
};

/// Mean oracle score of f(t, w, s) over the content codes for one style w.
inline OracleScore decode_and_score(const toy::ToyModelParams& params, const FactorOracle& oracle,
                                    const Eigen::MatrixXd& contents, const LatentVector& style,
                                    const LatentVector& speaker) {
  const auto m = contents.rows();
  const Eigen::MatrixXd w = toy::to_eigen(style).transpose().replicate(m, 1);
  const Eigen::MatrixXd s = toy::to_eigen(speaker).transpose().replicate(m, 1);
  const Eigen::MatrixXd x = toy::forward(params, contents, w, s);
  OracleScore mean;
  for (Eigen::Index i = 0; i < m; ++i) {
    const OracleScore sc = oracle.score(x.row(i).transpose());
    mean.emotion_axis_score += sc.emotion_axis_score;
    mean.speaker_axis_error += sc.speaker_axis_error;
  }
  mean.emotion_axis_score /= static_cast<double>(m);
  mean.speaker_axis_error /= static_cast<double>(m);
  return mean;
}

inline void require_ascending(std::span<const double> alphas) {
  if (alphas.empty()) throw Error(ErrorCode::EmptySet, "sweep needs at least one alpha");
  if (!std::is_sorted(alphas.begin(), alphas.end())) throw Error(ErrorCode::InvalidConfig, "alphas must be ascending");
}

/// Edits base along the direction for every alpha, decodes with the target
/// speaker vector over all content codes (50 or more), and correlates alpha
/// with the mean emotion score.
inline SweepReport sweep_oracle(const toy::ToyModelParams& params, const FactorOracle& oracle,
                                const LatentVector& base_style, const LatentVector& speaker_vec,
                                const EditDirection& direction, std::span<const double> alphas,
                                const Eigen::MatrixXd& contents, std::span<const EditDirection> conditioned_on = {}) {
  require_ascending(alphas);
  if (contents.rows() < 1) throw Error(ErrorCode::EmptySet, "sweep needs content codes");
  SweepReport rep;
  std::vector<double> emotion;
  for (const auto& [alpha, edited] : sweep(base_style, direction, alphas, conditioned_on)) {
    rep.alphas.push_back(alpha);
    rep.signed_distances.push_back(signed_distance(direction, edited));
    rep.scores.push_back(decode_and_score(params, oracle, contents, edited, speaker_vec));
    emotion.push_back(rep.scores.back().emotion_axis_score);
  }
  rep.spearman_rho = spearman_rho(rep.alphas, emotion);
  return rep;
}

/// Mean speaker_axis_error per alpha.
inline std::vector<double> speaker_preservation(const toy::ToyModelParams& params, const FactorOracle& oracle,
                                                const LatentVector& base_style, const LatentVector& speaker_vec,
                                                const EditDirection& direction, std::span<const double> alphas,
                                                const Eigen::MatrixXd& contents,
                                                std::span<const EditDirection> conditioned_on = {}) {
  require_ascending(alphas);
  std::vector<double> out;
  for (const auto& [alpha, edited] : sweep(base_style, direction, alphas, conditioned_on)) {
    out.push_back(decode_and_score(params, oracle, contents, edited, speaker_vec).speaker_axis_error);
  }
  return out;
}

/// True when no entry exceeds the alpha = 0 error by more than `budget`.
inline bool within_preservation_budget(std::span<const double> alphas, std::span<const double> errors,
                                       double budget) {
  const auto zero = std::find(alphas.begin(), alphas.end(), 0.0);
  const double baseline = zero != alphas.end() ? errors[static_cast<std::size_t>(zero - alphas.begin())] : errors.front();
  return std::all_of(errors.begin(), errors.end(), [&](double e) { return e <= baseline + budget; });
}

/// Cosine between two edit normals; symmetric in its arguments.
inline double direction_agreement(const EditDirection& a, const EditDirection& b) {
  return cosine_similarity(a.normal, b.normal);
}

struct OneShotResult {
  EditDirection one_shot;
  EditDirection many_shot;
  double cosine = 0.0;
};

/// Compares a direction trained on one matched (same speaker, same script)
/// pair against one trained on `shots` random samples per class.
inline OneShotResult oneshot_agreement(const LabeledLatentSet& positives, const LabeledLatentSet& negatives,
                                       const std::string& attribute, const SvmConfig& svm, int shots = 100) {
  if (static_cast<int>(positives.size()) < shots || static_cast<int>(negatives.size()) < shots) {
    throw Error(ErrorCode::InsufficientData, "one-shot agreement needs " + std::to_string(shots) + " samples per class");
  }
  std::mt19937_64 rng(svm.seed);
  auto pick = [&](const LabeledLatentSet& set) {
    std::vector<std::size_t> idx(set.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    LabeledLatentSet out;
    for (int k = 0; k < shots; ++k) {
      const std::size_t i = idx[static_cast<std::size_t>(k)];
      out.push_back(set.vectors[i], set.labels[i], set.meta[i]);
    }
    return out;
  };
  const LabeledLatentSet pos = pick(positives);
  const LabeledLatentSet neg = pick(negatives);

  // Prefer a pair drawn from the sampled sets, otherwise any pair in the pool.
  auto pair = find_matched_pair(pos, neg);
  const LabeledLatentSet* pos_pool = &pos;
  const LabeledLatentSet* neg_pool = &neg;
  if (!pair) {
    pair = find_matched_pair(positives, negatives);
    pos_pool = &positives;
    neg_pool = &negatives;
  }
  if (!pair) throw Error(ErrorCode::NoMatchedPair, "no positive/negative pair shares speaker and script");

  OneShotResult r;
  const Hyperplane many = train_svm(make_binary_set(pos, neg), svm);
  DirectionProvenance prov;
  prov.n_positive = shots;
  prov.n_negative = shots;
  prov.seed = svm.seed;
  r.many_shot = extract_direction(many, attribute, prov);
  r.one_shot = train_one_shot(pos_pool->vectors[pair->positive], pos_pool->meta[pair->positive],
                              neg_pool->vectors[pair->negative], neg_pool->meta[pair->negative], attribute, svm);
  r.cosine = direction_agreement(r.one_shot, r.many_shot);
  return r;
}

/// Cosine between two independent uniformly random unit directions, the null
/// reference for agreement scores.
inline double random_direction_baseline(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<double> a(dim), b(dim);
  for (auto& v : a) v = unit(rng);
  for (auto& v : b) v = unit(rng);
  return cosine_similarity(LatentVector(a), LatentVector(b));
}

}  // namespace stylespace::eval
