#pragma once

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "uninfo/attention.hpp"
#include "uninfo/encoder_config.hpp"
#include "uninfo/hypersphere.hpp"
#include "uninfo/image.hpp"
#include "uninfo/lora.hpp"

namespace uninfo {

inline constexpr double kLayerNormEps = 1e-5;

template <typename Scalar>
struct LayerWeights {
  RowVector<Scalar> ln1_gamma, ln1_beta;
  std::array<Matrix<Scalar>, 3> qkv_weight;  // indexed by Projection; width x width
  std::array<RowVector<Scalar>, 3> qkv_bias;
  Matrix<Scalar> out_weight;
  RowVector<Scalar> out_bias;
  RowVector<Scalar> ln2_gamma, ln2_beta;
  Matrix<Scalar> fc1_weight;  // width x mlp_width
  RowVector<Scalar> fc1_bias;
  Matrix<Scalar> fc2_weight;  // mlp_width x width
  RowVector<Scalar> fc2_bias;
};

/// Frozen stem of the toy vision transformer. Also used as the container for
/// stem gradients during pre-training.
template <typename Scalar>
struct EncoderWeights {
  EncoderConfig config;
  Matrix<Scalar> patch_weight;  // patch_dim x width
  RowVector<Scalar> patch_bias;
  RowVector<Scalar> cls_token;
  Matrix<Scalar> pos_embed;  // tokens x width
  std::vector<LayerWeights<Scalar>> layers;
  RowVector<Scalar> post_gamma, post_beta;
  Matrix<Scalar> proj;  // width x embed_dim

  static EncoderWeights zeros(const EncoderConfig& cfg) {
    cfg.validate();
    EncoderWeights w;
    w.config = cfg;
    const Index d = cfg.width;
    const Index mlp = cfg.mlp_width();
    w.patch_weight = Matrix<Scalar>::Zero(cfg.patch_dim(), d);
    w.patch_bias = RowVector<Scalar>::Zero(d);
    w.cls_token = RowVector<Scalar>::Zero(d);
    w.pos_embed = Matrix<Scalar>::Zero(cfg.num_tokens(), d);
    w.layers.resize(static_cast<std::size_t>(cfg.depth));
    for (auto& l : w.layers) {
      l.ln1_gamma = RowVector<Scalar>::Zero(d);
      l.ln1_beta = RowVector<Scalar>::Zero(d);
      for (int p = 0; p < 3; ++p) {
        l.qkv_weight[p] = Matrix<Scalar>::Zero(d, d);
        l.qkv_bias[p] = RowVector<Scalar>::Zero(d);
      }
      l.out_weight = Matrix<Scalar>::Zero(d, d);
      l.out_bias = RowVector<Scalar>::Zero(d);
      l.ln2_gamma = RowVector<Scalar>::Zero(d);
      l.ln2_beta = RowVector<Scalar>::Zero(d);
      l.fc1_weight = Matrix<Scalar>::Zero(d, mlp);
      l.fc1_bias = RowVector<Scalar>::Zero(mlp);
      l.fc2_weight = Matrix<Scalar>::Zero(mlp, d);
      l.fc2_bias = RowVector<Scalar>::Zero(d);
    }
    w.post_gamma = RowVector<Scalar>::Zero(d);
    w.post_beta = RowVector<Scalar>::Zero(d);
    w.proj = Matrix<Scalar>::Zero(d, cfg.embed_dim);
    return w;
  }

  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    visit(*this, fn);
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    visit(*this, fn);
  }

  Index num_parameters() const {
    Index n = 0;
    for_each_tensor([&](const std::string&, const auto& t) { n += t.size(); });
    return n;
  }

  template <typename T>
  EncoderWeights<T> cast() const {
    EncoderWeights<T> out = EncoderWeights<T>::zeros(config);
    std::vector<const Scalar*> src;
    for_each_tensor([&](const std::string&, const auto& t) { src.push_back(t.data()); });
    std::size_t i = 0;
    out.for_each_tensor([&](const std::string&, auto& t) {
      for (Index k = 0; k < t.size(); ++k) t.data()[k] = static_cast<T>(src[i][k]);
      ++i;
    });
    return out;
  }

 private:
  template <typename Self, typename Fn>
  static void visit(Self& self, Fn& fn) {
    fn(std::string("patch_embed.weight"), self.patch_weight);
    fn(std::string("patch_embed.bias"), self.patch_bias);
    fn(std::string("cls_token"), self.cls_token);
    fn(std::string("pos_embed"), self.pos_embed);
    for (std::size_t i = 0; i < self.layers.size(); ++i) {
      auto& l = self.layers[i];
      const std::string p = "layers." + std::to_string(i) + ".";
      fn(p + "ln1.gamma", l.ln1_gamma);
      fn(p + "ln1.beta", l.ln1_beta);
      for (int k = 0; k < 3; ++k) {
        const std::string name = to_string(static_cast<Projection>(k));
        fn(p + "attn." + name + ".weight", l.qkv_weight[k]);
        fn(p + "attn." + name + ".bias", l.qkv_bias[k]);
      }
      fn(p + "attn.out.weight", l.out_weight);
      fn(p + "attn.out.bias", l.out_bias);
      fn(p + "ln2.gamma", l.ln2_gamma);
      fn(p + "ln2.beta", l.ln2_beta);
      fn(p + "mlp.fc1.weight", l.fc1_weight);
      fn(p + "mlp.fc1.bias", l.fc1_bias);
      fn(p + "mlp.fc2.weight", l.fc2_weight);
      fn(p + "mlp.fc2.bias", l.fc2_bias);
    }
    fn(std::string("post_ln.gamma"), self.post_gamma);
    fn(std::string("post_ln.beta"), self.post_beta);
    fn(std::string("proj"), self.proj);
  }
};

/// Random stem: Xavier-uniform linear weights, N(0, 0.02) token/position
/// embeddings, unit LayerNorm gains, zero biases.
template <typename Scalar>
EncoderWeights<Scalar> init_stem(const EncoderConfig& cfg, std::uint64_t seed) {
  EncoderWeights<Scalar> w = EncoderWeights<Scalar>::zeros(cfg);
  std::mt19937_64 rng(derive_seed(seed, 0x57e3));
  auto xavier = [&](Matrix<Scalar>& m) {
    const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(u(rng));
  };
  auto normal = [&](auto& m, double sd) {
    std::normal_distribution<double> n(0.0, sd);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(n(rng));
  };
  xavier(w.patch_weight);
  normal(w.cls_token, 0.02);
  normal(w.pos_embed, 0.02);
  for (auto& l : w.layers) {
    l.ln1_gamma.setOnes();
    l.ln2_gamma.setOnes();
    for (auto& m : l.qkv_weight) xavier(m);
    xavier(l.out_weight);
    xavier(l.fc1_weight);
    xavier(l.fc2_weight);
  }
  w.post_gamma.setOnes();
  xavier(w.proj);
  return w;
}

namespace detail {

template <typename Scalar>
struct LayerNormCache {
  Matrix<Scalar> xhat;
  Vector<Scalar> rstd;
};

template <typename Scalar>
Matrix<Scalar> layer_norm(const Matrix<Scalar>& x, const RowVector<Scalar>& gamma, const RowVector<Scalar>& beta,
                          LayerNormCache<Scalar>* cache) {
  const Index n = x.rows();
  const Index d = x.cols();
  Matrix<Scalar> xhat(n, d);
  Vector<Scalar> rstd(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar mean = x.row(i).mean();
    const Scalar var = (x.row(i).array() - mean).square().mean();
    rstd(i) = Scalar(1) / std::sqrt(var + static_cast<Scalar>(kLayerNormEps));
    xhat.row(i) = (x.row(i).array() - mean) * rstd(i);
  }
  Matrix<Scalar> y = (xhat.array().rowwise() * gamma.array()).rowwise() + beta.array();
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

// Returns dx; accumulates dgamma/dbeta when given.
template <typename Scalar>
Matrix<Scalar> layer_norm_backward(const Matrix<Scalar>& dy, const LayerNormCache<Scalar>& cache,
                                   const RowVector<Scalar>& gamma, RowVector<Scalar>* dgamma,
                                   RowVector<Scalar>* dbeta) {
  if (dgamma != nullptr) *dgamma += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  if (dbeta != nullptr) *dbeta += dy.colwise().sum();
  const Matrix<Scalar> dxhat = dy.array().rowwise() * gamma.array();
  const Scalar inv_d = Scalar(1) / static_cast<Scalar>(dy.cols());
  Matrix<Scalar> dx(dy.rows(), dy.cols());
  for (Index i = 0; i < dy.rows(); ++i) {
    const Scalar mean_dxhat = dxhat.row(i).sum() * inv_d;
    const Scalar mean_dxhat_xhat = dxhat.row(i).dot(cache.xhat.row(i)) * inv_d;
    dx.row(i) = cache.rstd(i) *
                (dxhat.row(i).array() - mean_dxhat - cache.xhat.row(i).array() * mean_dxhat_xhat).matrix();
  }
  return dx;
}

template <typename Scalar>
Scalar gelu(Scalar x) {
  return Scalar(0.5) * x * (Scalar(1) + std::erf(x / std::sqrt(Scalar(2))));
}

template <typename Scalar>
Scalar gelu_grad(Scalar x) {
  const Scalar inv_sqrt_2pi = Scalar(0.3989422804014327);
  return Scalar(0.5) * (Scalar(1) + std::erf(x / std::sqrt(Scalar(2)))) + x * std::exp(Scalar(-0.5) * x * x) * inv_sqrt_2pi;
}

}  // namespace detail

/// Activations kept by a forward pass for the backward pass.
template <typename Scalar>
struct EncoderCache {
  struct Layer {
    detail::LayerNormCache<Scalar> ln1, ln2;
    Matrix<Scalar> normed1;                     // LN1 output
    std::array<Matrix<Scalar>, 3> effective;    // W + scale A B
    Matrix<Scalar> q, k, v;
    std::vector<Matrix<Scalar>> attn;            // per (sample, head)
    Matrix<Scalar> attn_out;                     // concatenated heads, before out projection
    Matrix<Scalar> normed2;                      // LN2 output
    Matrix<Scalar> pre_act, act;                 // MLP hidden before/after GELU
  };
  Index batch = 0;
  Matrix<Scalar> patches;  // (batch * num_patches) x patch_dim
  std::vector<Layer> layers;
  detail::LayerNormCache<Scalar> post_ln;
  Matrix<Scalar> pooled_normed;  // post-LN class tokens
  Matrix<Scalar> raw;            // pre-normalization embeddings
};

/// Unfolds B images (rows, HWC) into patch rows ordered (dy, dx, channel).
template <typename Scalar>
Matrix<Scalar> extract_patches(const Matrix<Scalar>& images, const EncoderConfig& cfg) {
  const int side = cfg.image_size;
  const int ps = cfg.patch_size;
  const int per_side = cfg.patches_per_side();
  require(images.cols() == static_cast<Index>(side) * side * 3, ErrorCode::BadImageShape,
          "expected " + std::to_string(side) + "x" + std::to_string(side) + "x3 images, got row length " +
              std::to_string(images.cols()));
  Matrix<Scalar> out(images.rows() * cfg.num_patches(), cfg.patch_dim());
  for (Index b = 0; b < images.rows(); ++b) {
    for (int py = 0; py < per_side; ++py) {
      for (int px = 0; px < per_side; ++px) {
        const Index row = b * cfg.num_patches() + py * per_side + px;
        Index col = 0;
        for (int dy = 0; dy < ps; ++dy) {
          const Index src = ((static_cast<Index>(py) * ps + dy) * side + static_cast<Index>(px) * ps) * 3;
          for (Index k = 0; k < ps * 3; ++k) out(row, col++) = images(b, src + k);
        }
      }
    }
  }
  return out;
}

/// Raw (pre-normalization) embeddings; fills `cache` when given.
template <typename Scalar>
Matrix<Scalar> encode_raw(const EncoderWeights<Scalar>& stem, const LoRAParams<Scalar>* lora, const Matrix<Scalar>& images,
                          EncoderCache<Scalar>* cache = nullptr) {
  const EncoderConfig& cfg = stem.config;
  const Index batch = images.rows();
  require(batch >= 1, ErrorCode::BadImageShape, "empty image batch");
  const Index n = cfg.num_tokens();
  const Index np = cfg.num_patches();
  const Index d = cfg.width;
  const int heads = cfg.heads;
  const Index dh = cfg.head_dim();
  const Scalar attn_scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));

  Matrix<Scalar> patches = extract_patches(images, cfg);
  Matrix<Scalar> embedded = patches * stem.patch_weight;
  embedded.rowwise() += stem.patch_bias;

  Matrix<Scalar> h(batch * n, d);
  for (Index b = 0; b < batch; ++b) {
    h.row(b * n) = stem.cls_token + stem.pos_embed.row(0);
    h.middleRows(b * n + 1, np) = embedded.middleRows(b * np, np) + stem.pos_embed.bottomRows(np);
  }
  if (cache != nullptr) {
    cache->batch = batch;
    cache->patches = std::move(patches);
    cache->layers.assign(stem.layers.size(), {});
  }

  for (std::size_t li = 0; li < stem.layers.size(); ++li) {
    const LayerWeights<Scalar>& lw = stem.layers[li];
    typename EncoderCache<Scalar>::Layer local;
    auto& lc = cache != nullptr ? cache->layers[li] : local;

    lc.normed1 = detail::layer_norm(h, lw.ln1_gamma, lw.ln1_beta, cache != nullptr ? &lc.ln1 : nullptr);
    std::array<Matrix<Scalar>*, 3> outs{&lc.q, &lc.k, &lc.v};
    for (int p = 0; p < 3; ++p) {
      const LoRAAdapter<Scalar>* ad = lora != nullptr ? lora->find(static_cast<int>(li), static_cast<Projection>(p)) : nullptr;
      lc.effective[p] = ad != nullptr ? lora_effective_weight(lw.qkv_weight[p], ad->a, ad->b, static_cast<Scalar>(lora->scale))
                                      : lw.qkv_weight[p];
      *outs[p] = lc.normed1 * lc.effective[p];
      outs[p]->rowwise() += lw.qkv_bias[p];
    }

    lc.attn_out.resize(batch * n, d);
    if (cache != nullptr) lc.attn.resize(static_cast<std::size_t>(batch * heads));
    for (Index b = 0; b < batch; ++b) {
      for (int hd = 0; hd < heads; ++hd) {
        Matrix<Scalar>* weights = cache != nullptr ? &lc.attn[static_cast<std::size_t>(b * heads + hd)] : nullptr;
        lc.attn_out.block(b * n, hd * dh, n, dh) =
            attend<Scalar>(lc.q.block(b * n, hd * dh, n, dh), lc.k.block(b * n, hd * dh, n, dh),
                           lc.v.block(b * n, hd * dh, n, dh), attn_scale, weights);
      }
    }
    h.noalias() += lc.attn_out * lw.out_weight;
    h.rowwise() += lw.out_bias;

    lc.normed2 = detail::layer_norm(h, lw.ln2_gamma, lw.ln2_beta, cache != nullptr ? &lc.ln2 : nullptr);
    lc.pre_act = lc.normed2 * lw.fc1_weight;
    lc.pre_act.rowwise() += lw.fc1_bias;
    lc.act = lc.pre_act.unaryExpr([](Scalar x) { return detail::gelu(x); });
    h.noalias() += lc.act * lw.fc2_weight;
    h.rowwise() += lw.fc2_bias;

    if (cache == nullptr) local = {};
  }

  Matrix<Scalar> pooled(batch, d);
  for (Index b = 0; b < batch; ++b) pooled.row(b) = h.row(b * n);
  Matrix<Scalar> pooled_normed =
      detail::layer_norm(pooled, stem.post_gamma, stem.post_beta, cache != nullptr ? &cache->post_ln : nullptr);
  Matrix<Scalar> raw = pooled_normed * stem.proj;
  if (cache != nullptr) {
    cache->pooled_normed = std::move(pooled_normed);
    cache->raw = raw;
  }
  return raw;
}

/// Unit-norm image embeddings. `lora` may be null for the bare stem.
template <typename Scalar>
EmbeddingBatch<Scalar> encoder_forward(const EncoderWeights<Scalar>& stem, const LoRAParams<Scalar>* lora,
                                       const Matrix<Scalar>& images, EncoderCache<Scalar>* cache = nullptr) {
  return normalize_rows(encode_raw(stem, lora, images, cache));
}

template <typename Scalar>
EmbeddingBatch<Scalar> encoder_forward(const EncoderWeights<Scalar>& stem, const LoRAParams<Scalar>* lora,
                                       const ImageBatch& images) {
  images.validate();
  require(images.height == stem.config.image_size && images.width == stem.config.image_size, ErrorCode::BadImageShape,
          "image size does not match the encoder");
  if constexpr (std::is_same_v<Scalar, float>) {
    return encoder_forward(stem, lora, images.pixels);
  } else {
    return encoder_forward(stem, lora, Matrix<Scalar>(images.pixels.template cast<Scalar>()));
  }
}

/// Back-propagates d loss / d raw embeddings. LoRA gradients go to
/// `lora_grad` (same layout as the adapters), stem gradients to `stem_grad`;
/// either may be null. Gradients accumulate into the given containers.
template <typename Scalar>
void encoder_backward(const EncoderWeights<Scalar>& stem, const LoRAParams<Scalar>* lora,
                      const EncoderCache<Scalar>& cache, const Matrix<Scalar>& d_raw, LoRAParams<Scalar>* lora_grad,
                      EncoderWeights<Scalar>* stem_grad) {
  const EncoderConfig& cfg = stem.config;
  const Index batch = cache.batch;
  require(d_raw.rows() == batch && d_raw.cols() == cfg.embed_dim, ErrorCode::ShapeMismatch,
          "gradient does not match the cached forward pass");
  const Index n = cfg.num_tokens();
  const Index np = cfg.num_patches();
  const Index d = cfg.width;
  const int heads = cfg.heads;
  const Index dh = cfg.head_dim();
  const Scalar attn_scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
  const bool want_stem = stem_grad != nullptr;

  if (want_stem) stem_grad->proj.noalias() += cache.pooled_normed.transpose() * d_raw;
  const Matrix<Scalar> d_pooled_normed = d_raw * stem.proj.transpose();
  const Matrix<Scalar> d_pooled =
      detail::layer_norm_backward(d_pooled_normed, cache.post_ln, stem.post_gamma,
                                  want_stem ? &stem_grad->post_gamma : nullptr, want_stem ? &stem_grad->post_beta : nullptr);

  Matrix<Scalar> dh_mat = Matrix<Scalar>::Zero(batch * n, d);
  for (Index b = 0; b < batch; ++b) dh_mat.row(b * n) = d_pooled.row(b);

  // Lowest layer whose input gradient is still needed.
  int lowest = 0;
  if (!want_stem) {
    lowest = static_cast<int>(stem.layers.size());
    if (lora != nullptr) {
      for (const auto& ad : lora->adapters) lowest = std::min(lowest, ad.layer);
    }
  }

  for (int li = static_cast<int>(stem.layers.size()) - 1; li >= lowest; --li) {
    const LayerWeights<Scalar>& lw = stem.layers[static_cast<std::size_t>(li)];
    const auto& lc = cache.layers[static_cast<std::size_t>(li)];
    LayerWeights<Scalar>* lg = want_stem ? &stem_grad->layers[static_cast<std::size_t>(li)] : nullptr;

    // MLP branch.
    if (lg != nullptr) {
      lg->fc2_weight.noalias() += lc.act.transpose() * dh_mat;
      lg->fc2_bias += dh_mat.colwise().sum();
    }
    Matrix<Scalar> d_hidden = dh_mat * lw.fc2_weight.transpose();
    d_hidden.array() *= lc.pre_act.unaryExpr([](Scalar x) { return detail::gelu_grad(x); }).array();
    if (lg != nullptr) {
      lg->fc1_weight.noalias() += lc.normed2.transpose() * d_hidden;
      lg->fc1_bias += d_hidden.colwise().sum();
    }
    const Matrix<Scalar> d_normed2 = d_hidden * lw.fc1_weight.transpose();
    dh_mat += detail::layer_norm_backward(d_normed2, lc.ln2, lw.ln2_gamma, lg != nullptr ? &lg->ln2_gamma : nullptr,
                                          lg != nullptr ? &lg->ln2_beta : nullptr);

    // Attention branch.
    if (lg != nullptr) {
      lg->out_weight.noalias() += lc.attn_out.transpose() * dh_mat;
      lg->out_bias += dh_mat.colwise().sum();
    }
    const Matrix<Scalar> d_attn = dh_mat * lw.out_weight.transpose();
    Matrix<Scalar> dq(batch * n, d), dk(batch * n, d), dv(batch * n, d);
    for (Index b = 0; b < batch; ++b) {
      for (int hd = 0; hd < heads; ++hd) {
        const auto g = attend_backward<Scalar>(
            lc.q.block(b * n, hd * dh, n, dh), lc.k.block(b * n, hd * dh, n, dh), lc.v.block(b * n, hd * dh, n, dh),
            lc.attn[static_cast<std::size_t>(b * heads + hd)], d_attn.block(b * n, hd * dh, n, dh), attn_scale);
        dq.block(b * n, hd * dh, n, dh) = g.dq;
        dk.block(b * n, hd * dh, n, dh) = g.dk;
        dv.block(b * n, hd * dh, n, dh) = g.dv;
      }
    }
    const std::array<const Matrix<Scalar>*, 3> dproj{&dq, &dk, &dv};
    Matrix<Scalar> d_normed1 = Matrix<Scalar>::Zero(batch * n, d);
    for (int p = 0; p < 3; ++p) {
      const LoRAAdapter<Scalar>* ad = lora != nullptr ? lora->find(li, static_cast<Projection>(p)) : nullptr;
      if (ad != nullptr || lg != nullptr) {
        const Matrix<Scalar> dw = lc.normed1.transpose() * *dproj[p];
        if (lg != nullptr) {
          lg->qkv_weight[p] += dw;
          lg->qkv_bias[p] += dproj[p]->colwise().sum();
        }
        if (ad != nullptr && lora_grad != nullptr) {
          LoRAAdapter<Scalar>* gad = lora_grad->find(li, static_cast<Projection>(p));
          require(gad != nullptr, ErrorCode::ShapeMismatch, "gradient container lacks an adapter");
          const Scalar s = static_cast<Scalar>(lora->scale);
          gad->a.noalias() += s * dw * ad->b.transpose();
          gad->b.noalias() += s * ad->a.transpose() * dw;
        }
      }
      d_normed1.noalias() += *dproj[p] * lc.effective[p].transpose();
    }
    dh_mat += detail::layer_norm_backward(d_normed1, lc.ln1, lw.ln1_gamma, lg != nullptr ? &lg->ln1_gamma : nullptr,
                                          lg != nullptr ? &lg->ln1_beta : nullptr);
  }

  if (!want_stem) return;
  Matrix<Scalar> d_embedded(batch * np, d);
  for (Index b = 0; b < batch; ++b) {
    stem_grad->cls_token += dh_mat.row(b * n);
    stem_grad->pos_embed += dh_mat.middleRows(b * n, n);
    d_embedded.middleRows(b * np, np) = dh_mat.middleRows(b * n + 1, np);
  }
  stem_grad->patch_weight.noalias() += cache.patches.transpose() * d_embedded;
  stem_grad->patch_bias += d_embedded.colwise().sum();
}

/// Folds the adapters into the stem's Q/K/V weights.
template <typename Scalar>
EncoderWeights<Scalar> merge_lora(const EncoderWeights<Scalar>& stem, const LoRAParams<Scalar>& lora) {
  EncoderWeights<Scalar> out = stem;
  for (const auto& ad : lora.adapters) {
    require(ad.layer >= 0 && ad.layer < static_cast<int>(out.layers.size()), ErrorCode::ShapeMismatch,
            "adapter layer out of range");
    auto& w = out.layers[static_cast<std::size_t>(ad.layer)].qkv_weight[static_cast<int>(ad.target)];
    w = lora_effective_weight(w, ad.a, ad.b, static_cast<Scalar>(lora.scale));
  }
  return out;
}

}  // namespace uninfo
