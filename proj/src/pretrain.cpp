#include "uninfo/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "uninfo/dataset.hpp"
#include "uninfo/objectives.hpp"
#include "uninfo/optimizer.hpp"

namespace uninfo {

PretrainResult pretrain_stem(const EncoderConfig& cfg, const PrototypeBank<float>& bank, const PretrainConfig& pcfg,
                             const PretrainProgress& progress) {
  require(bank.dim() == cfg.embed_dim, ErrorCode::DimensionMismatch, "bank dimension differs from embed_dim");
  require(pcfg.label_smoothing >= 0.0 && pcfg.label_smoothing < 1.0, ErrorCode::InvalidArgument,
          "label_smoothing must be in [0, 1)");
  require(pcfg.noise_augment >= 0.0, ErrorCode::InvalidArgument, "noise_augment must be nonnegative");
  PretrainResult result;
  result.stem = init_stem<float>(cfg, pcfg.seed);
  auto state = AdamWState<float>::for_params(result.stem);
  EncoderCache<float> cache;
  for (int step = 0; step < pcfg.steps; ++step) {
    LabeledImages data = make_shapes_dataset(pcfg.batch_size, cfg.image_size, derive_seed(pcfg.seed, 1000 + step));
    if (pcfg.noise_augment > 0.0) {
      std::mt19937_64 rng(derive_seed(pcfg.seed, 0xa000 + static_cast<std::uint64_t>(step)));
      std::uniform_real_distribution<float> u(0.0f, static_cast<float>(pcfg.noise_augment));
      std::normal_distribution<float> n(0.0f, 1.0f);
      Matrix<float>& px = data.images.pixels;
      for (Index i = 0; i < px.rows(); ++i) {
        const float sigma = u(rng);
        for (Index j = 0; j < px.cols(); ++j) px(i, j) = std::clamp(px(i, j) + sigma * n(rng), 0.0f, 1.0f);
      }
    }
    const Matrix<float> raw = encode_raw<float>(result.stem, nullptr, data.images.pixels, &cache);
    const EmbeddingBatch<float> z = normalize_rows(raw);
    const PredictionBatch<float> pred = zero_shot_probs(z, bank);

    // Cross-entropy against smoothed one-hot targets: d/dlogits = p - target.
    const Index classes = bank.num_classes();
    const double off = pcfg.label_smoothing / static_cast<double>(classes);
    Matrix<float> dlogits = pred.probs();
    double loss = 0.0;
    for (Index i = 0; i < dlogits.rows(); ++i) {
      const int y = data.labels[static_cast<std::size_t>(i)];
      for (Index c = 0; c < classes; ++c) {
        const double target = off + (c == y ? 1.0 - pcfg.label_smoothing : 0.0);
        loss -= target * std::log(std::max(static_cast<double>(pred.probs()(i, c)), kProbFloor));
        dlogits(i, c) -= static_cast<float>(target);
      }
    }
    loss /= static_cast<double>(dlogits.rows());
    dlogits /= static_cast<float>(dlogits.rows());
    const Matrix<float> d_raw = normalize_rows_backward(raw, logits_to_embedding_grad(dlogits, bank));

    auto grads = EncoderWeights<float>::zeros(cfg);
    encoder_backward<float>(result.stem, nullptr, cache, d_raw, nullptr, &grads);

    AdamWConfig opt;
    const double warm = pcfg.warmup > 0 ? std::min(1.0, (step + 1.0) / pcfg.warmup) : 1.0;
    const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * step / std::max(1, pcfg.steps)));
    opt.lr = pcfg.lr * warm * cosine;
    opt.weight_decay = pcfg.weight_decay;
    adamw_step(result.stem, grads, state, opt);
    if (progress) progress(step, loss, opt.lr);
  }
  const LabeledImages eval = make_shapes_dataset(pcfg.eval_size, cfg.image_size, derive_seed(pcfg.seed, 0xe7a1));
  result.clean_accuracy = zero_shot_accuracy(result.stem, nullptr, eval, bank);
  return result;
}

double zero_shot_accuracy(const EncoderWeights<float>& stem, const LoRAParams<float>* lora, const LabeledImages& data,
                          const PrototypeBank<float>& bank, Index batch_size) {
  require(static_cast<Index>(data.labels.size()) == data.images.size(), ErrorCode::LengthMismatch,
          "accuracy needs one label per image");
  std::size_t hits = 0;
  for (Index begin = 0; begin < data.images.size(); begin += batch_size) {
    const Index count = std::min(batch_size, data.images.size() - begin);
    const auto z = encoder_forward<float>(stem, lora, data.images.pixels.middleRows(begin, count).eval());
    const auto pred = zero_shot_probs(z, bank);
    for (Index i = 0; i < count; ++i) hits += pred.labels()[static_cast<std::size_t>(i)] == data.labels[static_cast<std::size_t>(begin + i)];
  }
  return data.images.size() == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(data.images.size());
}

}  // namespace uninfo
