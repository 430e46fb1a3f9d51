#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "stylespace/toy/model.hpp"

namespace stylespace::toy {

/// Noam warmup / inverse-sqrt decay, scaled so that noam_lr(warmup) == base_lr.
inline double noam_lr(double base_lr, long step, long warmup) {
  const auto s = static_cast<double>(std::max(step, 1L));
  const auto w = static_cast<double>(std::max(warmup, 1L));
  return base_lr * std::min(1.0 / std::sqrt(s), s * std::pow(w, -1.5)) * std::sqrt(w);
}

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

class Adam {
 public:
  Adam(const ModelDims& dims, AdamOptions opt = {})
      : opt_(opt), m_(ToyModelParams::zeros(dims)), v_(ToyModelParams::zeros(dims)) {}

  long steps() const { return t_; }

  void step(ToyModelParams& params, ToyModelParams& grad, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    zip_tensors(
        [&](const std::string&, auto& p, auto& g, auto& m, auto& v) {
          m = opt_.beta1 * m + (1.0 - opt_.beta1) * g;
          v = opt_.beta2 * v + (1.0 - opt_.beta2) * g.cwiseAbs2();
          p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + opt_.eps);
        },
        params, grad, m_, v_);
  }

 private:
  AdamOptions opt_;
  ToyModelParams m_;
  ToyModelParams v_;
  long t_ = 0;
};

}  // namespace stylespace::toy
