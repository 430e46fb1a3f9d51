#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "stylespace/error.hpp"
#include "stylespace/provenance.hpp"

namespace stylespace::toy {

/// Shape and scale of the synthetic corpus. Emotion 0 is neutral; emotions
/// 1..emotions each own one factor column.
struct CorpusSpec {
  int speakers = 4;
  int emotions = 3;
  int per_cell = 30;
  int content_dim = 4;
  int feature_dim = 32;
  double noise = 0.05;
  /// Scale of the speaker-specific perturbation of the shared content map.
  double speaker_spread = 0.1;
  /// Scale of the per-speaker feature offset.
  double speaker_offset = 1.0;
  /// Emotional samples draw intensity uniformly from [min_intensity, 1].
  double min_intensity = 0.5;
  std::uint64_t seed = 1;

  void check() const {
    if (speakers < 2) throw Error(ErrorCode::InvalidConfig, "corpus needs speakers >= 2");
    if (emotions < 1) throw Error(ErrorCode::InvalidConfig, "corpus needs emotions >= 1");
    if (per_cell < 1) throw Error(ErrorCode::InvalidConfig, "corpus needs per_cell >= 1");
    if (content_dim < 1 || feature_dim < 1) throw Error(ErrorCode::InvalidConfig, "corpus dims must be positive");
    if (!(noise >= 0.0) || !(speaker_spread >= 0.0) || !(speaker_offset >= 0.0)) {
      throw Error(ErrorCode::InvalidConfig, "corpus scales must be non-negative");
    }
    if (!(min_intensity >= 0.0 && min_intensity <= 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "min_intensity must be in [0, 1]");
    }
  }

  std::size_t sample_count() const {
    return static_cast<std::size_t>(speakers) * static_cast<std::size_t>(emotions + 1) *
           static_cast<std::size_t>(per_cell);
  }
};

inline void to_json(nlohmann::json& j, const CorpusSpec& s) {
  j = {{"speakers", s.speakers},           {"emotions", s.emotions},
       {"per_cell", s.per_cell},           {"content_dim", s.content_dim},
       {"feature_dim", s.feature_dim},     {"noise", s.noise},
       {"speaker_spread", s.speaker_spread}, {"speaker_offset", s.speaker_offset},
       {"min_intensity", s.min_intensity}, {"seed", s.seed}};
}

inline void from_json(const nlohmann::json& j, CorpusSpec& s) {
  const CorpusSpec d;
  s.speakers = j.value("speakers", d.speakers);
  s.emotions = j.value("emotions", d.emotions);
  s.per_cell = j.value("per_cell", d.per_cell);
  s.content_dim = j.value("content_dim", d.content_dim);
  s.feature_dim = j.value("feature_dim", d.feature_dim);
  s.noise = j.value("noise", d.noise);
  s.speaker_spread = j.value("speaker_spread", d.speaker_spread);
  s.speaker_offset = j.value("speaker_offset", d.speaker_offset);
  s.min_intensity = j.value("min_intensity", d.min_intensity);
  s.seed = j.value("seed", d.seed);
}

/// The hidden generative factors. Features are
///   x = A_spk[speaker] · [t; 1] + intensity · B_emo[emotion] + noise
/// where A_spk[k] = [content_map + spread·P_k | offset_k].
struct FactorModel {
  std::vector<Eigen::MatrixXd> speaker_maps;  // F x (C + 1)
  Eigen::MatrixXd emotion_factors;            // F x E, column e-1 belongs to emotion e

  int feature_dim() const { return static_cast<int>(emotion_factors.rows()); }
  int content_dim() const { return static_cast<int>(speaker_maps.front().cols()) - 1; }
  int speakers() const { return static_cast<int>(speaker_maps.size()); }
  int emotions() const { return static_cast<int>(emotion_factors.cols()); }

  Eigen::VectorXd emotion_factor(int emotion_id) const {
    if (emotion_id < 1 || emotion_id > emotions()) {
      throw Error(ErrorCode::InvalidConfig, "emotion id " + std::to_string(emotion_id) + " has no factor");
    }
    return emotion_factors.col(emotion_id - 1);
  }

  /// Noise-free features.
  Eigen::VectorXd clean_features(const Eigen::VectorXd& content, int speaker_id, int emotion_id,
                                 double intensity) const {
    const auto& a = speaker_maps.at(static_cast<std::size_t>(speaker_id));
    const int c = content_dim();
    Eigen::VectorXd x = a.leftCols(c) * content + a.col(c);
    if (emotion_id > 0) x += intensity * emotion_factor(emotion_id);
    return x;
  }
};

inline std::vector<double> draw_normal(std::mt19937_64& rng, std::size_t n, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

inline Eigen::MatrixXd draw_matrix(std::mt19937_64& rng, int rows, int cols, double stddev) {
  const auto v = draw_normal(rng, static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), stddev);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r) * cols + c];
  return m;
}

inline FactorModel make_factor_model(const CorpusSpec& spec) {
  spec.check();
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  const int f = spec.feature_dim;
  const int c = spec.content_dim;
  FactorModel model;
  const Eigen::MatrixXd content_map = draw_matrix(rng, f, c, 1.0 / std::sqrt(static_cast<double>(c)));
  for (int k = 0; k < spec.speakers; ++k) {
    Eigen::MatrixXd a(f, c + 1);
    a.leftCols(c) = content_map + draw_matrix(rng, f, c, spec.speaker_spread / std::sqrt(static_cast<double>(c)));
    a.col(c) = draw_matrix(rng, f, 1, spec.speaker_offset);
    model.speaker_maps.push_back(std::move(a));
  }
  model.emotion_factors = draw_matrix(rng, f, spec.emotions, 1.0);
  return model;
}

struct SyntheticSample {
  Eigen::VectorXd content;
  int speaker_id = 0;
  int emotion_id = 0;
  double intensity = 0.0;
  int content_id = 0;
  Eigen::VectorXd features;

  std::string id() const {
    return "s" + std::to_string(speaker_id) + "-e" + std::to_string(emotion_id) + "-c" + std::to_string(content_id);
  }
};

/// Each speaker reads per_cell scripts; every script is read once neutrally
/// and once per emotion, so (speaker, content_id) identifies matched pairs.
inline std::vector<SyntheticSample> generate_corpus(const CorpusSpec& spec) {
  spec.check();
  const FactorModel factors = make_factor_model(spec);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> intensity_dist(spec.min_intensity, 1.0);
  std::normal_distribution<double> unit(0.0, 1.0);

  std::vector<SyntheticSample> out;
  out.reserve(spec.sample_count());
  for (int s = 0; s < spec.speakers; ++s) {
    std::vector<Eigen::VectorXd> scripts;
    for (int k = 0; k < spec.per_cell; ++k) {
      Eigen::VectorXd t(spec.content_dim);
      for (int i = 0; i < spec.content_dim; ++i) t(i) = unit(rng);
      scripts.push_back(std::move(t));
    }
    for (int e = 0; e <= spec.emotions; ++e) {
      for (int k = 0; k < spec.per_cell; ++k) {
        SyntheticSample smp;
        smp.content = scripts[static_cast<std::size_t>(k)];
        smp.speaker_id = s;
        smp.emotion_id = e;
        smp.intensity = e == 0 ? 0.0 : intensity_dist(rng);
        smp.content_id = s * spec.per_cell + k;
        smp.features = factors.clean_features(smp.content, s, e, smp.intensity);
        for (int i = 0; i < spec.feature_dim; ++i) smp.features(i) += spec.noise * unit(rng);
        out.push_back(std::move(smp));
      }
    }
  }
  return out;
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Corpus file: JSON Lines. The first line holds {"provenance": ..., "corpus": CorpusSpec}
// so the generating factors can be rebuilt; every following line is one sample.
inline std::string write_corpus(const CorpusSpec& spec, const std::vector<SyntheticSample>& samples,
                                const Provenance& prov) {
  std::ostringstream out;
  out << nlohmann::json{{"provenance", prov.to_json()}, {"corpus", spec}}.dump() << '\n';
  for (const auto& s : samples) {
    nlohmann::json j = {{"id", s.id()},
                        {"speaker_id", s.speaker_id},
                        {"emotion_id", s.emotion_id},
                        {"intensity", s.intensity},
                        {"content_id", s.content_id},
                        {"content", to_std(s.content)},
                        {"features", to_std(s.features)}};
    out << j.dump() << '\n';
  }
  return out.str();
}

struct CorpusFile {
  CorpusSpec spec;
  std::vector<SyntheticSample> samples;
};

inline CorpusFile read_corpus(const std::string& text, const std::string& source = "<corpus>") {
  std::istringstream in(text);
  std::string line;
  CorpusFile file;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!have_header) {
        file.spec = j.at("corpus").get<CorpusSpec>();
        file.spec.check();
        have_header = true;
        continue;
      }
      SyntheticSample s;
      s.speaker_id = j.at("speaker_id").get<int>();
      s.emotion_id = j.at("emotion_id").get<int>();
      s.intensity = j.at("intensity").get<double>();
      s.content_id = j.value("content_id", 0);
      s.content = to_eigen(j.at("content").get<std::vector<double>>());
      s.features = to_eigen(j.at("features").get<std::vector<double>>());
      if (s.content.size() != file.spec.content_dim || s.features.size() != file.spec.feature_dim) {
        throw Error(ErrorCode::DimMismatch, "sample dims disagree with corpus header");
      }
      if (s.speaker_id < 0 || s.speaker_id >= file.spec.speakers || s.emotion_id < 0 ||
          s.emotion_id > file.spec.emotions) {
        throw Error(ErrorCode::Parse, "speaker or emotion id out of range");
      }
      file.samples.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Parse, source + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorCode::Parse, source + ": missing corpus header line");
  return file;
}

inline CorpusFile load_corpus(const std::string& path) { return read_corpus(read_file(path), path); }

}  // namespace stylespace::toy
