#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stylespace/error.hpp"

namespace stylespace {

/// Below this norm a vector has no meaningful direction.
inline constexpr double kZeroNormEps = 1e-12;
/// Tolerance on |‖b‖ - 1| accepted by project_out.
inline constexpr double kUnitTolerance = 1e-6;

/// Fixed-dimension real vector with finite entries. Style vectors, speaker
/// vectors and edit directions are all carried as LatentVector.
class LatentVector {
 public:
  LatentVector() = default;

  explicit LatentVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) {
      throw Error(ErrorCode::DimMismatch, "latent vector must have dim > 0");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "latent vector entry is not finite");
    }
  }

  LatentVector(std::initializer_list<double> values)
      : LatentVector(std::vector<double>(values)) {}

  static LatentVector zeros(std::size_t dim) { return LatentVector(std::vector<double>(dim, 0.0)); }

  std::size_t dim() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& raw() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  LatentVector& operator+=(const LatentVector& rhs) {
    require_same_dim(rhs);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += rhs.values_[i];
    return *this;
  }
  LatentVector& operator-=(const LatentVector& rhs) {
    require_same_dim(rhs);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= rhs.values_[i];
    return *this;
  }
  LatentVector& operator*=(double k) {
    for (double& v : values_) v *= k;
    return *this;
  }

  friend LatentVector operator+(LatentVector a, const LatentVector& b) { return a += b; }
  friend LatentVector operator-(LatentVector a, const LatentVector& b) { return a -= b; }
  friend LatentVector operator*(LatentVector a, double k) { return a *= k; }
  friend LatentVector operator*(double k, LatentVector a) { return a *= k; }
  friend LatentVector operator-(LatentVector a) { return a *= -1.0; }

  friend bool operator==(const LatentVector&, const LatentVector&) = default;

  void require_same_dim(const LatentVector& other) const {
    if (other.dim() != dim()) {
      throw Error(ErrorCode::DimMismatch,
                  "dim " + std::to_string(dim()) + " vs " + std::to_string(other.dim()));
    }
  }

 private:
  std::vector<double> values_;
};

/// Per-vector metadata carried alongside latents. content_id identifies the
/// script a sample was generated from (-1 when unknown) and is what one-shot
/// pairing matches on.
struct LatentMeta {
  std::string id;
  int speaker_id = 0;
  int emotion_id = 0;
  double intensity = 0.0;
  int content_id = -1;

  friend bool operator==(const LatentMeta&, const LatentMeta&) = default;
};

/// Latents with binary attribute labels (+1 / -1, 0 = unlabeled) and metadata.
struct LabeledLatentSet {
  std::vector<LatentVector> vectors;
  std::vector<int> labels;
  std::vector<LatentMeta> meta;

  std::size_t size() const noexcept { return vectors.size(); }
  bool empty() const noexcept { return vectors.empty(); }
  std::size_t dim() const noexcept { return vectors.empty() ? 0 : vectors.front().dim(); }

  void push_back(LatentVector v, int label, LatentMeta m) {
    if (!vectors.empty()) vectors.front().require_same_dim(v);
    vectors.push_back(std::move(v));
    labels.push_back(label);
    meta.push_back(std::move(m));
  }

  /// Throws unless the parallel arrays agree and every vector shares one dim.
  void check() const {
    if (labels.size() != vectors.size() || meta.size() != vectors.size()) {
      throw Error(ErrorCode::DimMismatch, "labels/meta length differs from vectors");
    }
    for (const auto& v : vectors) vectors.front().require_same_dim(v);
  }

  /// Copy with every label overwritten.
  LabeledLatentSet relabeled(int label) const {
    LabeledLatentSet out = *this;
    std::fill(out.labels.begin(), out.labels.end(), label);
    return out;
  }

  template <typename Pred>
  LabeledLatentSet filter(Pred&& keep) const {
    LabeledLatentSet out;
    for (std::size_t i = 0; i < size(); ++i) {
      if (keep(meta[i], labels[i])) out.push_back(vectors[i], labels[i], meta[i]);
    }
    return out;
  }

  void append(const LabeledLatentSet& other) {
    for (std::size_t i = 0; i < other.size(); ++i) {
      push_back(other.vectors[i], other.labels[i], other.meta[i]);
    }
  }
};

inline double dot(const LatentVector& a, const LatentVector& b) {
  a.require_same_dim(b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm(const LatentVector& v) { return std::sqrt(dot(v, v)); }

inline double cosine_similarity(const LatentVector& a, const LatentVector& b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na <= kZeroNormEps || nb <= kZeroNormEps) {
    throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
  }
  return dot(a, b) / (na * nb);
}

inline LatentVector centroid(std::span<const LatentVector> set) {
  if (set.empty()) throw Error(ErrorCode::EmptySet, "centroid of empty set");
  const std::size_t dim = set.front().dim();
  std::vector<double> acc(dim, 0.0);
  for (const auto& v : set) {
    set.front().require_same_dim(v);
    for (std::size_t i = 0; i < dim; ++i) acc[i] += v[i];
  }
  const double inv = 1.0 / static_cast<double>(set.size());
  for (double& x : acc) x *= inv;
  return LatentVector(std::move(acc));
}

inline LatentVector normalize(const LatentVector& v) {
  const double n = norm(v);
  if (!(n > kZeroNormEps)) throw Error(ErrorCode::ZeroVector, "cannot normalize a zero-norm vector");
  return v * (1.0 / n);
}

/// a - (a·b) b for unit-norm b.
inline LatentVector project_out(const LatentVector& a, const LatentVector& b) {
  a.require_same_dim(b);
  if (std::abs(norm(b) - 1.0) > kUnitTolerance) {
    throw Error(ErrorCode::NotUnit, "projection axis must be unit norm");
  }
  return a - dot(a, b) * b;
}

}  // namespace stylespace
