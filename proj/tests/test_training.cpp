#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "stylespace/toy/train.hpp"
#include "support.hpp"

using namespace stylespace;
using namespace stylespace::toy;

namespace {

TrainConfig small_config(int epochs) {
  TrainConfig cfg;
  cfg.corpus.per_cell = 10;
  cfg.epochs = epochs;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Train, ZeroEpochsReturnsTheInitialParameters) {
  const auto cfg = small_config(0);
  const auto r = train(cfg);
  std::mt19937_64 rng(cfg.seed);
  auto init = init_params(cfg.dims(), rng);
  auto got = r.params;
  zip_tensors([](const std::string& name, auto& a, auto& b) { EXPECT_EQ(a, b) << name; }, got, init);
  EXPECT_TRUE(r.log.epochs.empty());
}

TEST(Train, SameSeedSameLog) {
  const auto cfg = small_config(5);
  const auto a = train(cfg);
  const auto b = train(cfg);
  EXPECT_EQ(a.log, b.log);
  EXPECT_EQ(a.log.to_csv(), b.log.to_csv());
  auto pa = a.params, pb = b.params;
  zip_tensors([](const std::string& name, auto& x, auto& y) { EXPECT_EQ(x, y) << name; }, pa, pb);

  auto other = cfg;
  other.seed = 2;
  EXPECT_NE(train(other).log, a.log);
}

TEST(Train, ReconstructionHalvesFromTheFirstEpoch) {
  const auto r = train(small_config(100));
  ASSERT_EQ(r.log.epochs.size(), 100u);
  const double first = r.log.epochs.front().mean.recon;
  const double last = r.log.epochs.back().mean.recon;
  EXPECT_LE(last, 0.5 * first) << "first " << first << " last " << last;
}

TEST(Train, LogCsvHasOneRowPerEpoch) {
  const auto r = train(small_config(3));
  const auto csv = r.log.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,recon,adv_ce,spk_ce,l_style,l_speaker,lr");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Train, RejectsBadConfig) {
  auto cfg = small_config(1);
  cfg.batch_size = 1;
  EXPECT_ERROR_CODE(train(cfg), ErrorCode::InvalidConfig);
  cfg = small_config(-1);
  EXPECT_ERROR_CODE(train(cfg), ErrorCode::InvalidConfig);
  cfg = small_config(1);
  cfg.dropout = 1.0;
  EXPECT_ERROR_CODE(train(cfg), ErrorCode::InvalidConfig);
  cfg = small_config(1);
  EXPECT_ERROR_CODE(train(cfg, std::vector<SyntheticSample>(1, generate_corpus(cfg.corpus).front())),
                    ErrorCode::BatchTooSmall);
}

TEST(ExtractLatents, EmptyCorpusGivesEmptySets) {
  const auto r = train(small_config(0));
  const auto l = extract_latents(r.params, {});
  EXPECT_TRUE(l.style.empty());
  EXPECT_TRUE(l.speaker.empty());
}

TEST(ExtractLatents, DuplicateSamplesGiveIdenticalVectors) {
  const auto cfg = small_config(2);
  const auto r = train(cfg);
  auto corpus = generate_corpus(cfg.corpus);
  corpus.resize(3);
  corpus.push_back(corpus.front());
  const auto l = extract_latents(r.params, corpus);
  ASSERT_EQ(l.style.size(), 4u);
  EXPECT_EQ(l.style.vectors[0], l.style.vectors[3]);
  EXPECT_EQ(l.speaker.vectors[0], l.speaker.vectors[3]);
  EXPECT_EQ(l.style.meta[3].speaker_id, corpus.front().speaker_id);
  EXPECT_EQ(l.style.meta[3].content_id, corpus.front().content_id);
  EXPECT_EQ(l.style.dim(), static_cast<std::size_t>(cfg.latent_dim));
}

TEST(ExtractLatents, MatchesTheEncoders) {
  const auto cfg = small_config(2);
  const auto r = train(cfg);
  const auto corpus = generate_corpus(cfg.corpus);
  const auto l = extract_latents(r.params, corpus);
  for (std::size_t i = 0; i < corpus.size(); i += 17) {
    const Eigen::MatrixXd x = corpus[i].features.transpose();
    const Eigen::MatrixXd w = encode_style(r.params, x);
    for (Eigen::Index k = 0; k < w.cols(); ++k) EXPECT_NEAR(l.style.vectors[i][static_cast<std::size_t>(k)], w(0, k), 1e-12);
  }
}

TEST(Checkpoint, RoundTripIsByteIdentical) {
  const auto cfg = small_config(2);
  const auto r = train(cfg);
  const auto dir = testkit::temp_dir("ckpt");
  const Provenance prov{cfg.seed, "abc"};
  save_checkpoint((dir / "a").string(), {cfg, r.params}, prov);
  const auto back = load_checkpoint((dir / "a").string());
  save_checkpoint((dir / "b").string(), back, prov);
  EXPECT_EQ(slurp(dir / "a" / "model.json"), slurp(dir / "b" / "model.json"));
  auto p1 = r.params, p2 = back.params;
  zip_tensors([](const std::string& name, auto& x, auto& y) { EXPECT_EQ(x, y) << name; }, p1, p2);
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, RejectsForeignFiles) {
  const auto dir = testkit::temp_dir("ckpt-bad");
  write_json_file((dir / "model.json").string(), nlohmann::json{{"format", "other"}});
  EXPECT_ERROR_CODE(load_checkpoint(dir.string()), ErrorCode::Parse);
  EXPECT_ERROR_CODE(load_checkpoint((dir / "missing").string()), ErrorCode::Io);
  std::filesystem::remove_all(dir);
}
