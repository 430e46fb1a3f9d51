#pragma once

#include <charconv>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stylespace/svm.hpp"
#include "stylespace/vector_core.hpp"

namespace stylespace {

/// Projection residue at or below this norm means the edit direction lies
/// inside the conditioned subspace.
inline constexpr double kDegenerateDirectionNorm = 1e-8;

struct EditRequest {
  LatentVector base;
  EditDirection direction;
  double alpha = 0.0;
  std::vector<EditDirection> conditioned_on;
  /// false = literal n1 - (n1·n2)n2 without re-normalization.
  bool renormalize = true;
};

/// n·w. The hyperplane offset is not included.
inline double signed_distance(const EditDirection& n, const LatentVector& w) { return dot(n.normal, w); }

/// Same side test including the stored offset, i.e. the SVM's own decision.
inline double signed_distance_with_offset(const EditDirection& n, const LatentVector& w) {
  return dot(n.normal, w) + n.offset;
}

/// Direction actually moved along by an edit. Conditioning normals are
/// orthonormalized first so the result is orthogonal to every one of them, then
/// projected out of the edit normal one at a time.
inline LatentVector effective_direction(const EditDirection& direction,
                                        std::span<const EditDirection> conditioned_on,
                                        bool renormalize = true) {
  if (conditioned_on.empty()) return direction.normal;

  std::vector<LatentVector> basis;
  for (const auto& c : conditioned_on) {
    direction.normal.require_same_dim(c.normal);
    if (std::abs(norm(c.normal) - 1.0) > kUnitTolerance) {
      throw Error(ErrorCode::NotUnit, "conditioning direction '" + c.attribute + "' is not unit norm");
    }
    LatentVector r = c.normal;
    for (const auto& q : basis) r = project_out(r, q);
    if (norm(r) > kDegenerateDirectionNorm) basis.push_back(normalize(r));
  }

  LatentVector out = direction.normal;
  for (const auto& q : basis) out = project_out(out, q);
  if (!(norm(out) > kDegenerateDirectionNorm)) {
    throw Error(ErrorCode::DegenerateDirection,
                "'" + direction.attribute + "' lies inside the conditioned subspace");
  }
  return renormalize ? normalize(out) : out;
}

/// w + α·n, or w + α·n' with n' the conditioned direction.
inline LatentVector edit(const EditRequest& req) {
  req.base.require_same_dim(req.direction.normal);
  if (!std::isfinite(req.alpha)) throw Error(ErrorCode::NonFinite, "alpha must be finite");
  const LatentVector step = effective_direction(req.direction, req.conditioned_on, req.renormalize);
  return req.base + req.alpha * step;
}

inline std::vector<std::pair<double, LatentVector>> sweep(const LatentVector& base,
                                                          const EditDirection& direction,
                                                          std::span<const double> alphas,
                                                          std::span<const EditDirection> conditioned_on = {},
                                                          bool renormalize = true) {
  if (alphas.empty()) throw Error(ErrorCode::EmptySet, "sweep needs at least one alpha");
  base.require_same_dim(direction.normal);
  const LatentVector step = effective_direction(direction, conditioned_on, renormalize);
  std::vector<std::pair<double, LatentVector>> out;
  out.reserve(alphas.size());
  for (double a : alphas) {
    if (!std::isfinite(a)) throw Error(ErrorCode::NonFinite, "alpha must be finite");
    out.emplace_back(a, base + a * step);
  }
  return out;
}

/// Centroid of a speaker's style vectors, used as the unedited (neutral) style.
inline LatentVector neutral_style(std::span<const LatentVector> target_speaker_vectors) {
  return centroid(target_speaker_vectors);
}

namespace detail {

inline double parse_real(std::string_view s, std::string_view what) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidConfig, "bad number '" + std::string(s) + "' in " + std::string(what));
  }
  return v;
}

}  // namespace detail

/// Parses "start:stop:step" (inclusive, ascending) or a comma list "a,b,c".
inline std::vector<double> parse_alpha_spec(std::string_view spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string_view::npos) {
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    while (true) {
      const std::size_t next = spec.find(':', pos);
      parts.push_back(spec.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
      if (next == std::string_view::npos) break;
      pos = next + 1;
    }
    if (parts.size() != 3) throw Error(ErrorCode::InvalidConfig, "alpha spec must be start:stop:step");
    const double start = detail::parse_real(parts[0], "alpha start");
    const double stop = detail::parse_real(parts[1], "alpha stop");
    const double step = detail::parse_real(parts[2], "alpha step");
    if (!(step > 0.0)) throw Error(ErrorCode::InvalidConfig, "alpha step must be > 0");
    if (stop < start) throw Error(ErrorCode::InvalidConfig, "alpha range is inverted (stop < start)");
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (count > 100000) throw Error(ErrorCode::InvalidConfig, "alpha spec expands to too many values");
    for (long k = 0; k < count; ++k) out.push_back(start + static_cast<double>(k) * step);
    return out;
  }
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const std::size_t next = spec.find(',', pos);
    const auto token = spec.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
    out.push_back(detail::parse_real(token, "alpha list"));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace stylespace
