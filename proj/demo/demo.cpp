// Library walk-through: train the toy model, find an emotion direction in its
// style space, push a neutral style along it and score what the decoder makes
// of the result.

#include <iomanip>
#include <iostream>
#include <vector>

#include "stylespace/editor.hpp"
#include "stylespace/eval/evaluate.hpp"
#include "stylespace/svm.hpp"
#include "stylespace/toy/train.hpp"

using namespace stylespace;

int main() {
  toy::TrainConfig cfg;  // 4 speakers, 3 emotions plus neutral, 300 epochs
  const auto corpus = toy::generate_corpus(cfg.corpus);
  std::cout << "training on " << corpus.size() << " samples...\n";
  const auto trained = toy::train(cfg, corpus);
  std::cout << "recon " << trained.log.epochs.front().mean.recon << " -> " << trained.log.epochs.back().mean.recon
            << "\n";

  const auto latents = toy::extract_latents(trained.params, corpus);
  const SvmConfig svm;
  const EditDirection happy = eval::train_emotion_direction(latents.style, 1, svm, 100);
  const EditDirection spk = eval::train_speaker_direction(latents.style, 0, svm);
  std::cout << happy.attribute << " val accuracy " << happy.provenance.val_accuracy.value_or(0.0) << "\n";

  // Speaker 0's neutral style, edited with and without holding speaker fixed.
  const auto target = eval::target_latents(latents, 0);
  const eval::FactorOracle oracle(toy::make_factor_model(cfg.corpus), 1, 0);
  const auto contents = eval::draw_content_codes(50, cfg.corpus.content_dim, 1);
  const std::vector<EditDirection> cond{spk};

  std::cout << std::fixed << std::setprecision(3);
  std::cout << "alpha  distance  emotion_score  speaker_error  speaker_error|cond\n";
  for (double alpha : {0.0, 0.5, 1.0, 1.5, 2.0}) {
    const LatentVector w = edit({target.neutral_style, happy, alpha, {}, true});
    const LatentVector wc = edit({target.neutral_style, happy, alpha, cond, true});
    const auto s = eval::decode_and_score(trained.params, oracle, contents, w, target.speaker);
    const auto sc = eval::decode_and_score(trained.params, oracle, contents, wc, target.speaker);
    std::cout << std::setw(5) << alpha << std::setw(10) << signed_distance(happy, w) << std::setw(15)
              << s.emotion_axis_score << std::setw(15) << s.speaker_axis_error << std::setw(20)
              << sc.speaker_axis_error << "\n";
  }
  return 0;
}
