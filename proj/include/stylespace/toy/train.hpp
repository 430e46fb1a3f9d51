#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "stylespace/provenance.hpp"
#include "stylespace/toy/corpus.hpp"
#include "stylespace/toy/model.hpp"
#include "stylespace/toy/optim.hpp"
#include "stylespace/vector_core.hpp"

namespace stylespace::toy {

struct TrainConfig {
  CorpusSpec corpus;
  int latent_dim = 32;
  int hidden = 32;
  int batch_size = 32;
  double classifier_weight = 0.02;
  double grl_lambda = 1.0;
  int epochs = 300;
  std::uint64_t seed = 1;
  long warmup_steps = 400;
  double base_lr = 1e-3;
  double dropout = 0.1;
  bool use_adversary = true;
  bool use_cycle = true;

  ModelDims dims() const {
    return ModelDims{corpus.content_dim, corpus.feature_dim, latent_dim, hidden, corpus.speakers};
  }

  LossOptions loss_options() const {
    LossOptions o;
    o.classifier_weight = classifier_weight;
    o.grl_lambda = grl_lambda;
    o.use_adversary = use_adversary;
    o.use_cycle = use_cycle;
    return o;
  }

  void check() const {
    corpus.check();
    dims().check();
    if (batch_size < 2) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 2");
    if (epochs < 0) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 0");
    if (warmup_steps < 1) throw Error(ErrorCode::InvalidConfig, "warmup_steps must be >= 1");
    if (!(base_lr > 0.0)) throw Error(ErrorCode::InvalidConfig, "base_lr must be > 0");
    if (!(classifier_weight >= 0.0)) throw Error(ErrorCode::InvalidConfig, "classifier_weight must be >= 0");
    if (!(grl_lambda >= 0.0)) throw Error(ErrorCode::InvalidConfig, "grl_lambda must be >= 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorCode::InvalidConfig, "dropout must be in [0, 1)");
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"corpus", c.corpus},
       {"latent_dim", c.latent_dim},
       {"hidden", c.hidden},
       {"batch_size", c.batch_size},
       {"classifier_weight", c.classifier_weight},
       {"grl_lambda", c.grl_lambda},
       {"epochs", c.epochs},
       {"seed", c.seed},
       {"warmup_steps", c.warmup_steps},
       {"base_lr", c.base_lr},
       {"dropout", c.dropout},
       {"use_adversary", c.use_adversary},
       {"use_cycle", c.use_cycle}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  const TrainConfig d;
  c.corpus = j.contains("corpus") ? j.at("corpus").get<CorpusSpec>() : d.corpus;
  c.latent_dim = j.value("latent_dim", d.latent_dim);
  c.hidden = j.value("hidden", d.hidden);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.classifier_weight = j.value("classifier_weight", d.classifier_weight);
  c.grl_lambda = j.value("grl_lambda", d.grl_lambda);
  c.epochs = j.value("epochs", d.epochs);
  c.seed = j.value("seed", d.seed);
  c.warmup_steps = j.value("warmup_steps", d.warmup_steps);
  c.base_lr = j.value("base_lr", d.base_lr);
  c.dropout = j.value("dropout", d.dropout);
  c.use_adversary = j.value("use_adversary", d.use_adversary);
  c.use_cycle = j.value("use_cycle", d.use_cycle);
}

struct EpochLog {
  int epoch = 0;
  LossReport mean;
  double lr = 0.0;

  friend bool operator==(const EpochLog& a, const EpochLog& b) {
    return a.epoch == b.epoch && a.lr == b.lr && a.mean.recon == b.mean.recon && a.mean.adv_ce == b.mean.adv_ce &&
           a.mean.spk_ce == b.mean.spk_ce && a.mean.l_style == b.mean.l_style &&
           a.mean.l_speaker == b.mean.l_speaker && a.mean.total == b.mean.total;
  }
};

struct TrainingLog {
  std::vector<EpochLog> epochs;

  std::string to_csv() const {
    std::ostringstream out;
    out << "epoch,recon,adv_ce,spk_ce,l_style,l_speaker,lr\n";
    for (const auto& e : epochs) {
      out << e.epoch << ',' << format_double(e.mean.recon) << ',' << format_double(e.mean.adv_ce) << ','
          << format_double(e.mean.spk_ce) << ',' << format_double(e.mean.l_style) << ','
          << format_double(e.mean.l_speaker) << ',' << format_double(e.lr) << '\n';
    }
    return out.str();
  }

  friend bool operator==(const TrainingLog&, const TrainingLog&) = default;
};

inline Batch make_batch(const std::vector<SyntheticSample>& corpus, const std::vector<std::size_t>& idx) {
  Batch b;
  if (idx.empty()) return b;
  const auto& first = corpus.at(idx.front());
  b.features.resize(static_cast<Eigen::Index>(idx.size()), first.features.size());
  b.content.resize(static_cast<Eigen::Index>(idx.size()), first.content.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& s = corpus.at(idx[r]);
    b.features.row(static_cast<Eigen::Index>(r)) = s.features.transpose();
    b.content.row(static_cast<Eigen::Index>(r)) = s.content.transpose();
    b.speakers.push_back(s.speaker_id);
  }
  return b;
}

/// One Adam update of `params` on the total loss. `step` is 1-based and only
/// drives the learning-rate schedule.
inline LossReport train_step(ToyModelParams& params, Adam& adam, const Batch& batch, const StepNoise& noise,
                             const TrainConfig& config, long step) {
  ToyModelParams grad = ToyModelParams::zeros(params.dims);
  const LossReport rep = loss_and_gradient(params, batch, noise, config.loss_options(), &grad);
  adam.step(params, grad, noam_lr(config.base_lr, step, config.warmup_steps));
  if (!all_finite(params)) throw Error(ErrorCode::NonFiniteLoss, "parameters became non-finite");
  return rep;
}

struct TrainResult {
  ToyModelParams params;
  TrainingLog log;
};

/// Mini-batch training, reshuffled every epoch. A trailing batch with fewer
/// than two samples is skipped (the speaker swap needs a partner).
inline TrainResult train(const TrainConfig& config, const std::vector<SyntheticSample>& corpus) {
  config.check();
  std::mt19937_64 rng(config.seed);
  TrainResult result{init_params(config.dims(), rng), {}};
  if (config.epochs == 0) return result;
  if (corpus.size() < 2) throw Error(ErrorCode::BatchTooSmall, "corpus too small to train on");

  Adam adam(config.dims());
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  long step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    LossReport sum;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      if (stop - start < 2) continue;
      const Batch batch = make_batch(corpus, {order.begin() + static_cast<std::ptrdiff_t>(start),
                                              order.begin() + static_cast<std::ptrdiff_t>(stop)});
      const StepNoise noise = draw_noise(batch, result.params.dims, config.dropout, rng);
      const LossReport rep = train_step(result.params, adam, batch, noise, config, ++step);
      sum.recon += rep.recon;
      sum.adv_ce += rep.adv_ce;
      sum.spk_ce += rep.spk_ce;
      sum.l_style += rep.l_style;
      sum.l_speaker += rep.l_speaker;
      sum.total += rep.total;
      ++batches;
    }
    const double inv = 1.0 / static_cast<double>(std::max(batches, 1));
    EpochLog e;
    e.epoch = epoch;
    e.mean = {sum.recon * inv, sum.adv_ce * inv, sum.spk_ce * inv, sum.l_style * inv, sum.l_speaker * inv,
              sum.total * inv};
    e.lr = noam_lr(config.base_lr, std::max(step, 1L), config.warmup_steps);
    result.log.epochs.push_back(e);
  }
  return result;
}

inline TrainResult train(const TrainConfig& config) { return train(config, generate_corpus(config.corpus)); }

inline LatentMeta sample_meta(const SyntheticSample& s) {
  return LatentMeta{s.id(), s.speaker_id, s.emotion_id, s.intensity, s.content_id};
}

struct LatentSets {
  LabeledLatentSet style;
  LabeledLatentSet speaker;
};

/// Style vectors E_w(x) and speaker vectors E_s(x) for every sample, unlabeled,
/// metadata carried over. Dropout plays no part here.
inline LatentSets extract_latents(const ToyModelParams& params, const std::vector<SyntheticSample>& corpus) {
  LatentSets out;
  if (corpus.empty()) return out;
  std::vector<std::size_t> idx(corpus.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const Batch all = make_batch(corpus, idx);
  if (all.features.cols() != params.dims.feature) throw Error(ErrorCode::DimMismatch, "corpus feature dim");
  const MatrixXd w = encode_style(params, all.features);
  const MatrixXd s = encode_speaker(params, all.features);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const LatentMeta m = sample_meta(corpus[i]);
    out.style.push_back(LatentVector(to_std(w.row(r).transpose())), 0, m);
    out.speaker.push_back(LatentVector(to_std(s.row(r).transpose())), 0, m);
  }
  return out;
}

inline Eigen::VectorXd to_eigen(const LatentVector& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.raw().data(), static_cast<Eigen::Index>(v.dim()));
}

// Checkpoint: <dir>/model.json holding the train config (which pins the
// corpus factors) and every tensor with its shape.

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json params_to_json(ToyModelParams& params) {
  nlohmann::json tensors = nlohmann::json::array();
  zip_tensors(
      [&](const std::string& name, auto& t) {
        tensors.push_back({{"name", name},
                           {"rows", t.rows()},
                           {"cols", t.cols()},
                           {"data", std::vector<double>(t.data(), t.data() + t.size())}});
      },
      params);
  return tensors;
}

struct Checkpoint {
  TrainConfig config;
  ToyModelParams params;
};

inline nlohmann::json checkpoint_to_json(const Checkpoint& ckpt, const Provenance& prov) {
  ToyModelParams copy = ckpt.params;
  return {{"format", "stylespace-checkpoint"},
          {"version", kCheckpointVersion},
          {"provenance", prov.to_json()},
          {"train_config", ckpt.config},
          {"tensors", params_to_json(copy)}};
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "stylespace-checkpoint") {
      throw Error(ErrorCode::Parse, "not a stylespace checkpoint");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) throw Error(ErrorCode::Parse, "unsupported checkpoint version");
    Checkpoint ckpt;
    ckpt.config = j.at("train_config").get<TrainConfig>();
    ckpt.config.check();
    ckpt.params = ToyModelParams::zeros(ckpt.config.dims());
    const auto& tensors = j.at("tensors");
    std::size_t k = 0;
    zip_tensors(
        [&](const std::string& name, auto& t) {
          if (k >= tensors.size()) throw Error(ErrorCode::Parse, "checkpoint is missing " + name);
          const auto& e = tensors.at(k++);
          if (e.at("name").get<std::string>() != name || e.at("rows").get<Eigen::Index>() != t.rows() ||
              e.at("cols").get<Eigen::Index>() != t.cols()) {
            throw Error(ErrorCode::DimMismatch, "checkpoint tensor " + name + " has the wrong name or shape");
          }
          const auto data = e.at("data").get<std::vector<double>>();
          if (static_cast<Eigen::Index>(data.size()) != t.size()) throw Error(ErrorCode::DimMismatch, name);
          std::copy(data.begin(), data.end(), t.data());
        },
        ckpt.params);
    if (k != tensors.size()) throw Error(ErrorCode::Parse, "checkpoint has extra tensors");
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const std::string& dir, const Checkpoint& ckpt, const Provenance& prov) {
  std::filesystem::create_directories(dir);
  write_json_file((std::filesystem::path(dir) / "model.json").string(), checkpoint_to_json(ckpt, prov));
}

inline Checkpoint load_checkpoint(const std::string& dir) {
  std::filesystem::path p(dir);
  if (std::filesystem::is_directory(p)) p /= "model.json";
  return checkpoint_from_json(read_json_file(p.string()));
}

}  // namespace stylespace::toy
