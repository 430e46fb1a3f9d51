#pragma once

#include <istream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "stylespace/provenance.hpp"
#include "stylespace/vector_core.hpp"

namespace stylespace {

// Vector store: JSON Lines, one latent per line.
//   {"id": str, "dim": int, "values": [real], "speaker_id": int,
//    "emotion_id": int, "intensity": real, "label": int|null, "content_id": int}
// An optional first line {"provenance": {...}} carries the writer's header.

inline nlohmann::json latent_record_to_json(const LatentVector& v, int label, const LatentMeta& m) {
  nlohmann::json j;
  j["id"] = m.id;
  j["dim"] = v.dim();
  j["values"] = v.raw();
  j["speaker_id"] = m.speaker_id;
  j["emotion_id"] = m.emotion_id;
  j["intensity"] = m.intensity;
  j["label"] = label == 0 ? nlohmann::json(nullptr) : nlohmann::json(label);
  j["content_id"] = m.content_id;
  return j;
}

inline std::string write_vector_store(const LabeledLatentSet& set,
                                      const std::optional<Provenance>& prov = std::nullopt) {
  set.check();
  std::ostringstream out;
  if (prov) out << nlohmann::json{{"provenance", prov->to_json()}}.dump() << '\n';
  for (std::size_t i = 0; i < set.size(); ++i) {
    out << latent_record_to_json(set.vectors[i], set.labels[i], set.meta[i]).dump() << '\n';
  }
  return out.str();
}

inline LabeledLatentSet read_vector_store(std::istream& in, const std::string& source = "<stream>") {
  LabeledLatentSet set;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Parse, where + ": " + e.what());
    }
    if (j.contains("provenance") && !j.contains("values")) continue;
    try {
      auto values = j.at("values").get<std::vector<double>>();
      const auto dim = j.at("dim").get<std::size_t>();
      if (dim != values.size()) {
        throw Error(ErrorCode::DimMismatch, where + ": dim " + std::to_string(dim) +
                                                " but " + std::to_string(values.size()) + " values");
      }
      LatentMeta m;
      m.id = j.value("id", std::string{});
      m.speaker_id = j.value("speaker_id", 0);
      m.emotion_id = j.value("emotion_id", 0);
      m.intensity = j.value("intensity", 0.0);
      m.content_id = j.value("content_id", -1);
      int label = 0;
      if (j.contains("label") && !j.at("label").is_null()) label = j.at("label").get<int>();
      if (label != 0 && label != 1 && label != -1) {
        throw Error(ErrorCode::Parse, where + ": label must be +1, -1 or null");
      }
      set.push_back(LatentVector(std::move(values)), label, std::move(m));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Parse, where + ": " + e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DimMismatch || e.code() == ErrorCode::Parse) throw;
      throw Error(e.code(), where + ": " + e.what());
    }
  }
  return set;
}

inline LabeledLatentSet read_vector_store_string(const std::string& text) {
  std::istringstream in(text);
  return read_vector_store(in);
}

inline LabeledLatentSet load_vector_store(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_vector_store(in, path);
}

inline void save_vector_store(const std::string& path, const LabeledLatentSet& set,
                              const std::optional<Provenance>& prov = std::nullopt) {
  write_file(path, write_vector_store(set, prov));
}

}  // namespace stylespace
