#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "stylespace/toy/layers.hpp"

namespace stylespace::toy {

struct ModelDims {
  int content = 4;   // C
  int feature = 32;  // F
  int latent = 32;   // D, shared by style and speaker vectors
  int hidden = 32;   // width of every 2-layer perceptron
  int speakers = 4;  // S

  void check() const {
    if (content < 1 || feature < 1 || latent < 1 || hidden < 1 || speakers < 2) {
      throw Error(ErrorCode::InvalidConfig, "model dims must be positive with speakers >= 2");
    }
  }
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

/// Weights of the stand-in acoustic model.
///   style_encoder   E_w : x -> w
///   speaker_encoder E_s : x -> s
///   text_encoder        : t -> content embedding (D); w is added to it
///   decoder             : [content + w, s] -> x_hat
///   adversary           : GRL(w) -> speaker logits
///   speaker_classifier  : s -> speaker logits (same shape as adversary)
struct ToyModelParams {
  ModelDims dims;
  Mlp style_encoder;
  Mlp speaker_encoder;
  Mlp text_encoder;
  Mlp decoder;
  Mlp adversary;
  Mlp speaker_classifier;

  static ToyModelParams zeros(const ModelDims& d) {
    d.check();
    ToyModelParams p;
    p.dims = d;
    p.style_encoder = Mlp(d.feature, d.hidden, d.latent);
    p.speaker_encoder = Mlp(d.feature, d.hidden, d.latent);
    p.text_encoder = Mlp(d.content, d.hidden, d.latent);
    p.decoder = Mlp(2 * d.latent, d.hidden, d.feature);
    p.adversary = Mlp(d.latent, d.hidden, d.speakers);
    p.speaker_classifier = Mlp(d.latent, d.hidden, d.speakers);
    return p;
  }
};

namespace detail {
template <typename F, typename... Ms>
void zip_mlp(const std::string& name, F& f, Ms&... mlps) {
  f(name + ".hidden.weight", mlps.hidden.weight...);
  f(name + ".hidden.bias", mlps.hidden.bias...);
  f(name + ".output.weight", mlps.output.weight...);
  f(name + ".output.bias", mlps.output.bias...);
}
}  // namespace detail

/// Calls f(name, tensor_a, tensor_b, ...) for every parameter tensor, walking
/// several same-shaped parameter sets in lockstep.
template <typename F, typename... Ps>
void zip_tensors(F&& f, Ps&... params) {
  detail::zip_mlp("style_encoder", f, params.style_encoder...);
  detail::zip_mlp("speaker_encoder", f, params.speaker_encoder...);
  detail::zip_mlp("text_encoder", f, params.text_encoder...);
  detail::zip_mlp("decoder", f, params.decoder...);
  detail::zip_mlp("adversary", f, params.adversary...);
  detail::zip_mlp("speaker_classifier", f, params.speaker_classifier...);
}

/// Gaussian init with variance 1/fan_in, zero biases.
inline ToyModelParams init_params(const ModelDims& dims, std::mt19937_64& rng) {
  ToyModelParams p = ToyModelParams::zeros(dims);
  zip_tensors(
      [&](const std::string&, auto& t) {
        if constexpr (std::decay_t<decltype(t)>::ColsAtCompileTime == 1) return;
        std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(t.cols())));
        for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
      },
      p);
  return p;
}

inline bool all_finite(ToyModelParams& p) {
  bool ok = true;
  zip_tensors([&](const std::string&, auto& t) { ok = ok && t.allFinite(); }, p);
  return ok;
}

/// Generator f(t, w, s): w is added to the text encoding, s is concatenated
/// to the decoder input.
inline MatrixXd forward(const ToyModelParams& p, const MatrixXd& content, const MatrixXd& style,
                        const MatrixXd& speaker) {
  if (style.cols() != p.dims.latent || speaker.cols() != p.dims.latent || style.rows() != content.rows() ||
      speaker.rows() != content.rows()) {
    throw Error(ErrorCode::DimMismatch, "forward: style/speaker shape disagrees with model");
  }
  MatrixXd z(content.rows(), 2 * p.dims.latent);
  z.leftCols(p.dims.latent) = mlp_forward(p.text_encoder, content) + style;
  z.rightCols(p.dims.latent) = speaker;
  return mlp_forward(p.decoder, z);
}

inline VectorXd forward(const ToyModelParams& p, const VectorXd& content, const VectorXd& style,
                        const VectorXd& speaker) {
  return forward(p, MatrixXd(content.transpose()), MatrixXd(style.transpose()), MatrixXd(speaker.transpose()))
      .row(0)
      .transpose();
}

inline MatrixXd encode_style(const ToyModelParams& p, const MatrixXd& x) { return mlp_forward(p.style_encoder, x); }
inline MatrixXd encode_speaker(const ToyModelParams& p, const MatrixXd& x) {
  return mlp_forward(p.speaker_encoder, x);
}

struct Batch {
  MatrixXd features;  // N x F
  MatrixXd content;   // N x C
  std::vector<int> speakers;

  Eigen::Index size() const { return features.rows(); }
};

/// Every random draw a loss evaluation consumes, fixed up front so the loss is
/// a deterministic function of the parameters.
struct StepNoise {
  std::vector<int> swap;  // s'_i = s_{swap[i]}
  MatrixXd adversary_mask;
  MatrixXd classifier_mask;
};

/// For each row, a uniformly drawn other row with a different speaker; falls
/// back to any other row when the batch has a single speaker.
inline std::vector<int> draw_speaker_swap(const std::vector<int>& speakers, std::mt19937_64& rng) {
  const int n = static_cast<int>(speakers.size());
  if (n < 2) throw Error(ErrorCode::BatchTooSmall, "speaker swap needs a batch of at least 2");
  std::vector<int> swap(static_cast<std::size_t>(n));
  std::vector<int> candidates;
  for (int i = 0; i < n; ++i) {
    candidates.clear();
    for (int j = 0; j < n; ++j) {
      if (speakers[static_cast<std::size_t>(j)] != speakers[static_cast<std::size_t>(i)]) candidates.push_back(j);
    }
    if (candidates.empty()) {
      for (int j = 0; j < n; ++j)
        if (j != i) candidates.push_back(j);
    }
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    swap[static_cast<std::size_t>(i)] = candidates[pick(rng)];
  }
  return swap;
}

inline StepNoise draw_noise(const Batch& batch, const ModelDims& dims, double dropout, std::mt19937_64& rng) {
  StepNoise noise;
  noise.swap = draw_speaker_swap(batch.speakers, rng);
  noise.adversary_mask = dropout_mask(rng, batch.size(), dims.hidden, dropout);
  noise.classifier_mask = dropout_mask(rng, batch.size(), dims.hidden, dropout);
  return noise;
}

enum class GrlMode {
  Reverse,   // backward multiplies by -lambda
  Identity,  // GRL replaced by an identity node
};

struct LossOptions {
  double classifier_weight = 0.02;
  double grl_lambda = 1.0;
  bool use_adversary = true;
  bool use_speaker_classifier = true;
  bool use_cycle = true;
  GrlMode grl_mode = GrlMode::Reverse;
  /// Forward-only probe: feed the adversary anchor - lambda·(w - anchor), a
  /// function whose plain derivative equals the reversed gradient at w = anchor.
  std::optional<MatrixXd> grl_anchor;
};

struct LossReport {
  double recon = 0.0;
  double adv_ce = 0.0;
  double spk_ce = 0.0;
  double l_style = 0.0;
  double l_speaker = 0.0;
  double total = 0.0;
};

namespace detail {
/// Mean squared error over every element.
inline double mse(const MatrixXd& d) { return d.squaredNorm() / static_cast<double>(d.size()); }

inline MatrixXd gather_rows(const MatrixXd& m, const std::vector<int>& idx) {
  MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}
}  // namespace detail

struct CycleLosses {
  double style = 0.0;
  double speaker = 0.0;
};

/// L_style = mse(w, E_w(x')), L_speaker = mse(s', E_s(x')), averaged over batch and dims, with
/// x' = f(t, w, s') and s'_i = s_{swap[i]}.
inline CycleLosses cycle_losses(const ToyModelParams& p, const Batch& batch, const std::vector<int>& swap) {
  if (batch.size() < 2) throw Error(ErrorCode::BatchTooSmall, "cycle losses need a batch of at least 2");
  const MatrixXd w = encode_style(p, batch.features);
  const MatrixXd s = encode_speaker(p, batch.features);
  const MatrixXd s_swap = detail::gather_rows(s, swap);
  const MatrixXd x_cycle = forward(p, batch.content, w, s_swap);
  return {detail::mse(w - encode_style(p, x_cycle)),
          detail::mse(s_swap - encode_speaker(p, x_cycle))};
}

inline CycleLosses cycle_losses(const ToyModelParams& p, const Batch& batch, std::mt19937_64& rng) {
  if (batch.size() < 2) throw Error(ErrorCode::BatchTooSmall, "cycle losses need a batch of at least 2");
  return cycle_losses(p, batch, draw_speaker_swap(batch.speakers, rng));
}

/// Total loss
///   mse(x̂, x) + cw·(CE_adv(GRL(w)) + CE_spk(s)) + L_style + L_speaker
/// and, when `grad` is given, its gradient (with the GRL applied on the
/// adversary branch) accumulated into `grad`.
inline LossReport loss_and_gradient(const ToyModelParams& p, const Batch& batch, const StepNoise& noise,
                                    const LossOptions& opt, ToyModelParams* grad) {
  const auto n = batch.size();
  const int d = p.dims.latent;
  if (n < 2) throw Error(ErrorCode::BatchTooSmall, "training batch needs at least 2 samples");
  if (batch.features.cols() != p.dims.feature || batch.content.cols() != p.dims.content ||
      static_cast<Eigen::Index>(batch.speakers.size()) != n) {
    throw Error(ErrorCode::DimMismatch, "batch shape disagrees with model dims");
  }

  LossReport rep;
  MlpTape t_style, t_speaker, t_text, t_dec, t_adv, t_cls, t_dec2, t_style2, t_speaker2;

  const MatrixXd w = mlp_forward(p.style_encoder, batch.features, &t_style);
  const MatrixXd s = mlp_forward(p.speaker_encoder, batch.features, &t_speaker);
  const MatrixXd ht = mlp_forward(p.text_encoder, batch.content, &t_text);

  MatrixXd z(n, 2 * d);
  z.leftCols(d) = ht + w;
  z.rightCols(d) = s;
  const MatrixXd x_hat = mlp_forward(p.decoder, z, &t_dec);
  const MatrixXd recon_diff = x_hat - batch.features;
  rep.recon = detail::mse(recon_diff);
  rep.total = rep.recon;

  CrossEntropy adv_ce, spk_ce;
  if (opt.use_adversary) {
    MatrixXd adv_in = grl_forward(w);
    if (opt.grl_anchor) {
      const double scale = opt.grl_mode == GrlMode::Reverse ? -opt.grl_lambda : 1.0;
      adv_in = *opt.grl_anchor + scale * (w - *opt.grl_anchor);
    }
    const MatrixXd logits = mlp_forward(p.adversary, adv_in, &t_adv, &noise.adversary_mask);
    adv_ce = softmax_cross_entropy(logits, batch.speakers);
    rep.adv_ce = adv_ce.loss;
    rep.total += opt.classifier_weight * adv_ce.loss;
  }
  if (opt.use_speaker_classifier) {
    const MatrixXd logits = mlp_forward(p.speaker_classifier, s, &t_cls, &noise.classifier_mask);
    spk_ce = softmax_cross_entropy(logits, batch.speakers);
    rep.spk_ce = spk_ce.loss;
    rep.total += opt.classifier_weight * spk_ce.loss;
  }

  MatrixXd s_swap, w_cycle, s_cycle;
  if (opt.use_cycle) {
    if (static_cast<Eigen::Index>(noise.swap.size()) != n) throw Error(ErrorCode::DimMismatch, "swap size");
    s_swap = detail::gather_rows(s, noise.swap);
    MatrixXd z2(n, 2 * d);
    z2.leftCols(d) = ht + w;
    z2.rightCols(d) = s_swap;
    const MatrixXd x_cycle = mlp_forward(p.decoder, z2, &t_dec2);
    w_cycle = mlp_forward(p.style_encoder, x_cycle, &t_style2);
    s_cycle = mlp_forward(p.speaker_encoder, x_cycle, &t_speaker2);
    rep.l_style = detail::mse(w - w_cycle);
    rep.l_speaker = detail::mse(s_swap - s_cycle);
    rep.total += rep.l_style + rep.l_speaker;
  }

  if (!std::isfinite(rep.total)) throw Error(ErrorCode::NonFiniteLoss, "training loss is not finite");
  if (grad == nullptr) return rep;

  const double inv_n = 1.0 / static_cast<double>(n);
  const double inv_x = inv_n / static_cast<double>(p.dims.feature);
  const double inv_z = inv_n / static_cast<double>(d);
  MatrixXd g_w = MatrixXd::Zero(n, d);
  MatrixXd g_s = MatrixXd::Zero(n, d);
  MatrixXd g_ht = MatrixXd::Zero(n, d);

  {
    const MatrixXd g_z = mlp_backward(p.decoder, t_dec, 2.0 * inv_x * recon_diff, grad->decoder);
    g_ht += g_z.leftCols(d);
    g_w += g_z.leftCols(d);
    g_s += g_z.rightCols(d);
  }
  if (opt.use_adversary) {
    const MatrixXd g_in =
        mlp_backward(p.adversary, t_adv, opt.classifier_weight * adv_ce.grad_logits, grad->adversary);
    g_w += opt.grl_mode == GrlMode::Reverse ? grl_backward(g_in, opt.grl_lambda) : g_in;
  }
  if (opt.use_speaker_classifier) {
    g_s += mlp_backward(p.speaker_classifier, t_cls, opt.classifier_weight * spk_ce.grad_logits,
                        grad->speaker_classifier);
  }
  if (opt.use_cycle) {
    const MatrixXd style_diff = w - w_cycle;
    const MatrixXd speaker_diff = s_swap - s_cycle;
    g_w += 2.0 * inv_z * style_diff;
    MatrixXd g_s_swap = 2.0 * inv_z * speaker_diff;
    MatrixXd g_x_cycle = mlp_backward(p.style_encoder, t_style2, -2.0 * inv_z * style_diff, grad->style_encoder);
    g_x_cycle += mlp_backward(p.speaker_encoder, t_speaker2, -2.0 * inv_z * speaker_diff, grad->speaker_encoder);
    const MatrixXd g_z2 = mlp_backward(p.decoder, t_dec2, g_x_cycle, grad->decoder);
    g_ht += g_z2.leftCols(d);
    g_w += g_z2.leftCols(d);
    g_s_swap += g_z2.rightCols(d);
    for (Eigen::Index i = 0; i < n; ++i) g_s.row(noise.swap[static_cast<std::size_t>(i)]) += g_s_swap.row(i);
  }

  mlp_backward(p.text_encoder, t_text, g_ht, grad->text_encoder);
  mlp_backward(p.style_encoder, t_style, g_w, grad->style_encoder);
  mlp_backward(p.speaker_encoder, t_speaker, g_s, grad->speaker_encoder);
  return rep;
}

}  // namespace stylespace::toy
