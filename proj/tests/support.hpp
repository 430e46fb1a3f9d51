#pragma once

// Hand-rolled generators for property tests. Every generator takes the rng by
// reference so a failing case can be replayed from the suite seed.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "stylespace/error.hpp"
#include "stylespace/vector_core.hpp"

namespace testkit {

using stylespace::LatentVector;

inline std::size_t random_dim(std::mt19937_64& rng, std::size_t lo = 1, std::size_t hi = 64) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline std::vector<double> random_values(std::mt19937_64& rng, std::size_t dim, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(dim);
  for (auto& x : v) x = n(rng);
  return v;
}

inline LatentVector random_vector(std::mt19937_64& rng, std::size_t dim, double scale = 1.0) {
  return LatentVector(random_values(rng, dim, scale));
}

/// Unit vector computed without the library's normalize.
inline LatentVector random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::vector<double> v;
  long double ss = 0;
  do {
    v = random_values(rng, dim);
    ss = 0;
    for (double x : v) ss += static_cast<long double>(x) * x;
  } while (ss < 1e-6L);
  const long double inv = 1.0L / std::sqrt(ss);
  for (auto& x : v) x = static_cast<double>(x * inv);
  return LatentVector(v);
}

inline double random_real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Straight summation in long double, independent of the library's dot.
inline long double oracle_dot(const LatentVector& a, const LatentVector& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return s;
}

inline double oracle_norm(const LatentVector& a) { return static_cast<double>(std::sqrt(oracle_dot(a, a))); }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  const auto p = std::filesystem::temp_directory_path() /
                 ("stylespace-" + tag + "-" + std::to_string(rng() % 1000000000ULL));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testkit

#define EXPECT_ERROR_CODE(stmt, expected)                                  \
  do {                                                                     \
    try {                                                                  \
      stmt;                                                                \
      ADD_FAILURE() << "expected " << stylespace::to_string(expected);     \
    } catch (const stylespace::Error& e) {                                 \
      EXPECT_EQ(e.code(), expected) << e.what();                           \
    }                                                                      \
  } while (0)
