#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "stylespace/error.hpp"

namespace stylespace::toy {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Batches are row-major in the math sense: one sample per row.

struct Dense {
  MatrixXd weight;  // out x in
  VectorXd bias;    // out

  Dense() = default;
  Dense(int in, int out) : weight(MatrixXd::Zero(out, in)), bias(VectorXd::Zero(out)) {}

  int in() const { return static_cast<int>(weight.cols()); }
  int out() const { return static_cast<int>(weight.rows()); }
};

/// Linear -> tanh -> (optional dropout) -> Linear.
struct Mlp {
  Dense hidden;
  Dense output;

  Mlp() = default;
  Mlp(int in, int width, int out) : hidden(in, width), output(width, out) {}

  int in() const { return hidden.in(); }
  int width() const { return hidden.out(); }
  int out() const { return output.out(); }
};

/// Activations kept from a forward pass for the matching backward pass.
struct MlpTape {
  MatrixXd input;
  MatrixXd activation;  // tanh output, before dropout
  MatrixXd mask;        // empty when no dropout was applied
};

inline MatrixXd affine(const Dense& d, const MatrixXd& x) {
  if (x.cols() != d.weight.cols()) {
    throw Error(ErrorCode::DimMismatch, "layer expects " + std::to_string(d.weight.cols()) + " inputs, got " +
                                            std::to_string(x.cols()));
  }
  MatrixXd y = x * d.weight.transpose();
  y.rowwise() += d.bias.transpose();
  return y;
}

inline MatrixXd mlp_forward(const Mlp& net, const MatrixXd& x, MlpTape* tape = nullptr,
                            const MatrixXd* mask = nullptr) {
  MatrixXd h = affine(net.hidden, x).array().tanh().matrix();
  MatrixXd y;
  if (mask != nullptr && mask->size() > 0) {
    y = affine(net.output, h.cwiseProduct(*mask));
  } else {
    y = affine(net.output, h);
  }
  if (tape != nullptr) {
    tape->input = x;
    tape->activation = std::move(h);
    tape->mask = (mask != nullptr) ? *mask : MatrixXd();
  }
  return y;
}

/// Accumulates parameter gradients into `grad` and returns d(loss)/d(input).
inline MatrixXd mlp_backward(const Mlp& net, const MlpTape& tape, const MatrixXd& grad_out, Mlp& grad) {
  const bool dropped = tape.mask.size() > 0;
  const MatrixXd h_used = dropped ? MatrixXd(tape.activation.cwiseProduct(tape.mask)) : tape.activation;
  grad.output.weight.noalias() += grad_out.transpose() * h_used;
  grad.output.bias += grad_out.colwise().sum().transpose();
  MatrixXd dh = grad_out * net.output.weight;
  if (dropped) dh = dh.cwiseProduct(tape.mask);
  const MatrixXd da = dh.cwiseProduct((1.0 - tape.activation.array().square()).matrix());
  grad.hidden.weight.noalias() += da.transpose() * tape.input;
  grad.hidden.bias += da.colwise().sum().transpose();
  return da * net.hidden.weight;
}

/// Inverted dropout mask: entries are 0 with probability `rate`, else 1/(1-rate).
inline MatrixXd dropout_mask(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double rate) {
  if (rate <= 0.0) return MatrixXd();
  std::bernoulli_distribution keep(1.0 - rate);
  MatrixXd m(rows, cols);
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = keep(rng) ? scale : 0.0;
  return m;
}

struct CrossEntropy {
  double loss = 0.0;
  MatrixXd grad_logits;  // d(mean loss)/d(logits)
};

/// Mean softmax cross-entropy over the batch.
inline CrossEntropy softmax_cross_entropy(const MatrixXd& logits, const std::vector<int>& labels) {
  const auto n = logits.rows();
  if (static_cast<std::size_t>(n) != labels.size()) throw Error(ErrorCode::DimMismatch, "labels vs logits rows");
  CrossEntropy ce;
  ce.grad_logits.resize(n, logits.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logits.cols()) throw Error(ErrorCode::DimMismatch, "class label out of range");
    const double m = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - m).exp().matrix();
    const double z = e.sum();
    ce.loss += std::log(z) + m - logits(i, y);
    ce.grad_logits.row(i) = e / z;
    ce.grad_logits(i, y) -= 1.0;
  }
  ce.loss /= static_cast<double>(n);
  ce.grad_logits /= static_cast<double>(n);
  return ce;
}

/// Gradient reversal: identity forward.
template <typename T>
T grl_forward(const T& v) {
  return v;
}

/// Gradient reversal: backward multiplies the incoming gradient by -lambda.
template <typename T>
T grl_backward(const T& g, double lambda) {
  return -lambda * g;
}

}  // namespace stylespace::toy
