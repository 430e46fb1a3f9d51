#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "stylespace/vector_core.hpp"

namespace stylespace::eval {

struct ProbeOptions {
  int folds = 5;
  int iterations = 300;
  double learning_rate = 0.5;
  double l2 = 1e-3;
};

namespace detail {

/// Multinomial logistic regression on standardized inputs, full-batch
/// gradient descent from zero. Returns the held-out accuracy.
inline double fit_and_score(const Eigen::MatrixXd& x_train, const std::vector<int>& y_train,
                            const Eigen::MatrixXd& x_test, const std::vector<int>& y_test, int classes,
                            const ProbeOptions& opt) {
  const Eigen::RowVectorXd mean = x_train.colwise().mean();
  Eigen::RowVectorXd sd = ((x_train.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
  for (Eigen::Index k = 0; k < sd.size(); ++k) sd(k) = sd(k) > 1e-12 ? sd(k) : 1.0;
  const Eigen::MatrixXd xs = (x_train.rowwise() - mean).array().rowwise() / sd.array();
  const Eigen::MatrixXd xt = (x_test.rowwise() - mean).array().rowwise() / sd.array();

  const auto n = xs.rows();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(xs.cols(), classes);
  Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(classes);
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, classes);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, y_train[static_cast<std::size_t>(i)]) = 1.0;

  for (int it = 0; it < opt.iterations; ++it) {
    Eigen::MatrixXd logits = xs * w;
    logits.rowwise() += b;
    Eigen::MatrixXd p = (logits.colwise() - logits.rowwise().maxCoeff()).array().exp().matrix();
    p.array().colwise() /= p.rowwise().sum().array();
    const Eigen::MatrixXd g = (p - onehot) / static_cast<double>(n);
    w -= opt.learning_rate * (xs.transpose() * g + opt.l2 * w);
    b -= opt.learning_rate * g.colwise().sum();
  }

  Eigen::MatrixXd logits = xt * w;
  logits.rowwise() += b;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    if (static_cast<int>(best) == y_test[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

}  // namespace detail

/// Cross-validated accuracy of a linear probe predicting speaker_id from the
/// vectors. Chance level is 1/S; values near it mean the vectors carry no
/// linearly readable speaker identity.
inline double probe_speaker_from_style(const LabeledLatentSet& set, std::uint64_t seed, const ProbeOptions& opt = {}) {
  set.check();
  std::map<int, int> class_of;
  std::map<int, int> counts;
  for (const auto& m : set.meta) ++counts[m.speaker_id];
  if (counts.size() < 2) throw Error(ErrorCode::InsufficientData, "probe needs at least 2 speakers");
  for (const auto& [spk, c] : counts) {
    if (c < 5) throw Error(ErrorCode::InsufficientData, "probe needs at least 5 samples per speaker");
    const int next = static_cast<int>(class_of.size());
    class_of[spk] = next;
  }
  const int classes = static_cast<int>(class_of.size());
  const auto n = static_cast<Eigen::Index>(set.size());
  const auto dim = static_cast<Eigen::Index>(set.dim());

  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold(set.size());
  for (std::size_t k = 0; k < order.size(); ++k) fold[order[k]] = static_cast<int>(k % static_cast<std::size_t>(opt.folds));

  std::size_t correct_total = 0;
  for (int f = 0; f < opt.folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < set.size(); ++i) (fold[i] == f ? te : tr).push_back(i);
    if (te.empty()) continue;
    Eigen::MatrixXd xtr(static_cast<Eigen::Index>(tr.size()), dim), xte(static_cast<Eigen::Index>(te.size()), dim);
    std::vector<int> ytr, yte;
    for (std::size_t r = 0; r < tr.size(); ++r) {
      for (Eigen::Index c = 0; c < dim; ++c) xtr(static_cast<Eigen::Index>(r), c) = set.vectors[tr[r]][static_cast<std::size_t>(c)];
      ytr.push_back(class_of[set.meta[tr[r]].speaker_id]);
    }
    for (std::size_t r = 0; r < te.size(); ++r) {
      for (Eigen::Index c = 0; c < dim; ++c) xte(static_cast<Eigen::Index>(r), c) = set.vectors[te[r]][static_cast<std::size_t>(c)];
      yte.push_back(class_of[set.meta[te[r]].speaker_id]);
    }
    const double acc = detail::fit_and_score(xtr, ytr, xte, yte, classes, opt);
    correct_total += static_cast<std::size_t>(std::llround(acc * static_cast<double>(te.size())));
  }
  return static_cast<double>(correct_total) / static_cast<double>(n);
}

}  // namespace stylespace::eval
