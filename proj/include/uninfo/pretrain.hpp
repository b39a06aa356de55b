#pragma once

#include <cstdint>
#include <functional>

#include "uninfo/encoder.hpp"

namespace uninfo {

/// Supervised pre-training of the toy stem on clean synthetic shapes: the
/// zero-shot head against a fixed prototype bank, trained with cross-entropy.
/// Stands in for contrastive pre-training.
struct PretrainConfig {
  int steps = 3000;
  int batch_size = 64;
  double lr = 2e-3;
  double weight_decay = 0.05;
  int warmup = 100;
  // Keeps image-prototype cosine gaps modest, so zero-shot probabilities at
  // tau = 0.01 stay soft as they do for contrastively trained encoders.
  double label_smoothing = 0.1;
  // Per-image pixel noise with sigma drawn from U(0, noise_augment). Zero
  // trains on clean images only.
  double noise_augment = 0.0;
  Index eval_size = 2000;
  std::uint64_t seed = 0;
};

struct PretrainResult {
  EncoderWeights<float> stem;
  double clean_accuracy = 0.0;
};

using PretrainProgress = std::function<void(int step, double loss, double lr)>;

PretrainResult pretrain_stem(const EncoderConfig& cfg, const PrototypeBank<float>& bank, const PretrainConfig& pcfg,
                             const PretrainProgress& progress = {});

/// Zero-shot accuracy of `stem` (+ optional adapters) over a labelled set.
double zero_shot_accuracy(const EncoderWeights<float>& stem, const LoRAParams<float>* lora, const LabeledImages& data,
                          const PrototypeBank<float>& bank, Index batch_size = 256);

}  // namespace uninfo
