#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "stylespace/error.hpp"

namespace stylespace {

inline constexpr std::string_view kToolName = "stylespace";
inline constexpr std::string_view kToolVersion = "0.1.0";

/// 64-bit FNV-1a; stable across platforms, used for config hashes and report checksums.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

inline std::string config_hash(const nlohmann::json& config) { return hex64(fnv1a64(config.dump())); }

struct Provenance {
  std::uint64_t seed = 0;
  std::string config_hash = "none";

  nlohmann::json to_json() const {
    return {{"tool", kToolName}, {"version", kToolVersion}, {"seed", seed}, {"config_hash", config_hash}};
  }

  /// One-line header for CSV artifacts.
  std::string csv_comment() const {
    return "# " + std::string(kToolName) + " " + std::string(kToolVersion) + " seed=" +
           std::to_string(seed) + " config_hash=" + config_hash;
  }
};

/// Shortest decimal text that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to " + path);
}

inline nlohmann::json read_json_file(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_file(path, j.dump(2) + "\n");
}

}  // namespace stylespace
