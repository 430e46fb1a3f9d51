#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "stylespace/provenance.hpp"
#include "stylespace/vector_core.hpp"

namespace stylespace {

struct SvmConfig {
  double lambda = 1e-2;  // L2 weight on ‖w‖²/2
  int epochs = 2000;
  std::uint64_t seed = 0;
  double val_fraction = 0.2;

  void check() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::InvalidConfig, "svm lambda must be > 0");
    if (epochs < 1) throw Error(ErrorCode::InvalidConfig, "svm epochs must be >= 1");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "svm val_fraction must be in [0, 1)");
    }
  }
};

/// Linear decision function weights·x + bias. A score of exactly zero is
/// classified as positive.
struct Hyperplane {
  LatentVector weights;
  double bias = 0.0;

  double score(const LatentVector& x) const { return dot(weights, x) + bias; }
  int classify(const LatentVector& x) const { return score(x) >= 0.0 ? 1 : -1; }

  friend bool operator==(const Hyperplane&, const Hyperplane&) = default;
};

struct DirectionProvenance {
  int n_positive = 0;
  int n_negative = 0;
  std::uint64_t seed = 0;
  std::optional<double> val_accuracy;
  std::string config_hash = "none";
};

/// Unit normal of a trained hyperplane plus the normalized offset.
struct EditDirection {
  LatentVector normal;
  double offset = 0.0;
  std::string attribute;
  DirectionProvenance provenance;

  EditDirection negated() const {
    EditDirection out = *this;
    out.normal = -normal;
    out.offset = -offset;
    out.attribute = "not-" + attribute;
    return out;
  }
};

namespace detail {

inline void require_binary_labels(const LabeledLatentSet& data) {
  for (int y : data.labels) {
    if (y != 1 && y != -1) throw Error(ErrorCode::SingleClass, "SVM data needs labels in {+1, -1}");
  }
}

inline double hinge_objective(const LabeledLatentSet& data, const std::vector<double>& w, double b,
                              double lambda) {
  const std::size_t dim = w.size();
  double reg = 0.0;
  for (double v : w) reg += v * v;
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.vectors[i].values();
    double s = b;
    for (std::size_t k = 0; k < dim; ++k) s += w[k] * x[k];
    loss += std::max(0.0, 1.0 - data.labels[i] * s);
  }
  return 0.5 * lambda * reg + loss / static_cast<double>(data.size());
}

}  // namespace detail

/// Minimizes (λ/2)‖w‖² + mean(max(0, 1 - y(w·x + b))) by full-batch
/// subgradient descent with step 1/(λt). The bias is unregularized. Since
/// subgradient steps are not monotone, the iterate with the lowest objective
/// seen is returned.
inline Hyperplane train_svm(const LabeledLatentSet& data, const SvmConfig& config) {
  config.check();
  data.check();
  if (data.empty()) throw Error(ErrorCode::SingleClass, "SVM training set is empty");
  detail::require_binary_labels(data);
  const bool has_pos = std::any_of(data.labels.begin(), data.labels.end(), [](int y) { return y == 1; });
  const bool has_neg = std::any_of(data.labels.begin(), data.labels.end(), [](int y) { return y == -1; });
  if (!has_pos || !has_neg) throw Error(ErrorCode::SingleClass, "SVM training needs both classes");

  const std::size_t dim = data.dim();
  const double n = static_cast<double>(data.size());
  std::vector<double> w(dim, 0.0);
  std::vector<double> gw(dim);
  double b = 0.0;

  std::vector<double> best_w = w;
  double best_b = b;
  double best_obj = detail::hinge_objective(data, w, b, config.lambda);

  for (int t = 1; t <= config.epochs; ++t) {
    const double eta = 1.0 / (config.lambda * static_cast<double>(t));
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto x = data.vectors[i].values();
      const double y = data.labels[i];
      double s = b;
      for (std::size_t k = 0; k < dim; ++k) s += w[k] * x[k];
      if (y * s < 1.0) {
        for (std::size_t k = 0; k < dim; ++k) gw[k] -= y * x[k];
        gb -= y;
      }
    }
    for (std::size_t k = 0; k < dim; ++k) {
      w[k] -= eta * (config.lambda * w[k] + gw[k] / n);
    }
    b -= eta * gb / n;

    const double obj = detail::hinge_objective(data, w, b, config.lambda);
    if (obj < best_obj) {
      best_obj = obj;
      best_w = w;
      best_b = b;
    }
  }
  if (!std::isfinite(best_b)) throw Error(ErrorCode::NonFinite, "SVM diverged");
  return Hyperplane{LatentVector(std::move(best_w)), best_b};
}

/// Fraction of held-out samples whose predicted side matches their label.
inline double validate(const Hyperplane& h, const LabeledLatentSet& held_out) {
  if (held_out.empty()) throw Error(ErrorCode::EmptySet, "validation set is empty");
  held_out.check();
  detail::require_binary_labels(held_out);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < held_out.size(); ++i) {
    if (h.classify(held_out.vectors[i]) == held_out.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(held_out.size());
}

inline EditDirection extract_direction(const Hyperplane& h, std::string attribute,
                                       DirectionProvenance provenance) {
  const double w_norm = norm(h.weights);
  if (!(w_norm > kZeroNormEps)) throw Error(ErrorCode::ZeroVector, "hyperplane has zero weights");
  return EditDirection{normalize(h.weights), h.bias / w_norm, std::move(attribute), std::move(provenance)};
}

struct SplitSets {
  LabeledLatentSet train;
  LabeledLatentSet validation;
};

/// Class-stratified shuffle split. Each class keeps at least one training
/// sample; a class of one contributes nothing to validation.
inline SplitSets stratified_split(const LabeledLatentSet& data, double val_fraction, std::uint64_t seed) {
  data.check();
  std::mt19937_64 rng(seed);
  SplitSets out;
  for (int cls : {1, -1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.labels[i] == cls) idx.push_back(i);
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(idx.size())));
    if (!idx.empty()) n_val = std::min(n_val, idx.size() - 1);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const std::size_t i = idx[k];
      auto& dst = k < n_val ? out.validation : out.train;
      dst.push_back(data.vectors[i], data.labels[i], data.meta[i]);
    }
  }
  return out;
}

inline LabeledLatentSet make_binary_set(const LabeledLatentSet& positives, const LabeledLatentSet& negatives) {
  LabeledLatentSet out = positives.relabeled(1);
  out.append(negatives.relabeled(-1));
  return out;
}

/// Split, train, validate and normalize in one go.
inline EditDirection train_direction(const LabeledLatentSet& positives, const LabeledLatentSet& negatives,
                                     const std::string& attribute, const SvmConfig& config) {
  if (positives.empty() || negatives.empty()) {
    throw Error(ErrorCode::SingleClass, "need at least one positive and one negative sample");
  }
  const SplitSets split = stratified_split(make_binary_set(positives, negatives), config.val_fraction, config.seed);
  const Hyperplane h = train_svm(split.train, config);
  DirectionProvenance prov;
  prov.n_positive = static_cast<int>(positives.size());
  prov.n_negative = static_cast<int>(negatives.size());
  prov.seed = config.seed;
  if (!split.validation.empty()) prov.val_accuracy = validate(h, split.validation);
  return extract_direction(h, attribute, prov);
}

struct MatchedPair {
  std::size_t positive;
  std::size_t negative;
};

/// First (positive, negative) pair sharing speaker and content id, i.e. the
/// same script read by the same speaker with and without the attribute.
inline std::optional<MatchedPair> find_matched_pair(const LabeledLatentSet& positives,
                                                    const LabeledLatentSet& negatives) {
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const auto& p = positives.meta[i];
    if (p.content_id < 0) continue;
    for (std::size_t j = 0; j < negatives.size(); ++j) {
      const auto& q = negatives.meta[j];
      if (q.speaker_id == p.speaker_id && q.content_id == p.content_id) return MatchedPair{i, j};
    }
  }
  return std::nullopt;
}

/// SVM on a single matched pair. Both sides must share speaker_id.
inline EditDirection train_one_shot(const LatentVector& positive, const LatentMeta& pos_meta,
                                    const LatentVector& negative, const LatentMeta& neg_meta,
                                    const std::string& attribute, const SvmConfig& config) {
  if (pos_meta.speaker_id != neg_meta.speaker_id) {
    throw Error(ErrorCode::NoMatchedPair, "one-shot pair must share a speaker");
  }
  LabeledLatentSet data;
  data.push_back(positive, 1, pos_meta);
  data.push_back(negative, -1, neg_meta);
  const Hyperplane h = train_svm(data, config);
  DirectionProvenance prov;
  prov.n_positive = 1;
  prov.n_negative = 1;
  prov.seed = config.seed;
  return extract_direction(h, attribute, prov);
}

inline nlohmann::json direction_to_json(const EditDirection& d) {
  nlohmann::json prov = {
      {"n_positive", d.provenance.n_positive},
      {"n_negative", d.provenance.n_negative},
      {"seed", d.provenance.seed},
      {"val_accuracy", d.provenance.val_accuracy ? nlohmann::json(*d.provenance.val_accuracy)
                                                 : nlohmann::json(nullptr)},
      {"tool", kToolName},
      {"version", kToolVersion},
      {"config_hash", d.provenance.config_hash},
  };
  return {{"attribute", d.attribute},
          {"dim", d.normal.dim()},
          {"normal", d.normal.raw()},
          {"offset", d.offset},
          {"provenance", prov}};
}

inline EditDirection direction_from_json(const nlohmann::json& j) {
  try {
    auto values = j.at("normal").get<std::vector<double>>();
    if (j.at("dim").get<std::size_t>() != values.size()) {
      throw Error(ErrorCode::DimMismatch, "direction dim disagrees with normal length");
    }
    EditDirection d;
    d.normal = LatentVector(std::move(values));
    if (std::abs(norm(d.normal) - 1.0) > 1e-10) throw Error(ErrorCode::NotUnit, "direction normal is not unit norm");
    d.offset = j.at("offset").get<double>();
    d.attribute = j.at("attribute").get<std::string>();
    const auto& p = j.at("provenance");
    d.provenance.n_positive = p.value("n_positive", 0);
    d.provenance.n_negative = p.value("n_negative", 0);
    d.provenance.seed = p.value("seed", std::uint64_t{0});
    if (p.contains("val_accuracy") && !p.at("val_accuracy").is_null()) {
      d.provenance.val_accuracy = p.at("val_accuracy").get<double>();
    }
    d.provenance.config_hash = p.value("config_hash", std::string("none"));
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("edit direction: ") + e.what());
  }
}

inline EditDirection load_direction(const std::string& path) { return direction_from_json(read_json_file(path)); }

inline void save_direction(const std::string& path, const EditDirection& d) {
  write_json_file(path, direction_to_json(d));
}

}  // namespace stylespace
