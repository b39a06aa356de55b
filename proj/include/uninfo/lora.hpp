#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "uninfo/common.hpp"
#include "uninfo/encoder_config.hpp"
#include "uninfo/errors.hpp"

namespace uninfo {

enum class Projection : int { Q = 0, K = 1, V = 2 };

inline const char* to_string(Projection p) {
  switch (p) {
    case Projection::Q: return "q";
    case Projection::K: return "k";
    case Projection::V: return "v";
  }
  return "?";
}

struct LoRAConfig {
  int rank = 2;
  double alpha = 2.0;
  std::vector<Projection> targets{Projection::Q, Projection::K, Projection::V};
  std::uint64_t seed = 0;

  double scale() const { return alpha / rank; }
};

/// W -> W + scale * A B for one projection of one layer.
template <typename Scalar>
struct LoRAAdapter {
  int layer = 0;
  Projection target = Projection::Q;
  Matrix<Scalar> a;  // width x rank
  Matrix<Scalar> b;  // rank x width
};

template <typename Scalar>
struct LoRAParams {
  double scale = 1.0;
  std::vector<LoRAAdapter<Scalar>> adapters;

  const LoRAAdapter<Scalar>* find(int layer, Projection target) const {
    for (const auto& ad : adapters) {
      if (ad.layer == layer && ad.target == target) return &ad;
    }
    return nullptr;
  }
  LoRAAdapter<Scalar>* find(int layer, Projection target) {
    return const_cast<LoRAAdapter<Scalar>*>(std::as_const(*this).find(layer, target));
  }

  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    for (auto& ad : adapters) {
      const std::string p = "lora." + std::to_string(ad.layer) + "." + to_string(ad.target) + ".";
      fn(p + "A", ad.a);
      fn(p + "B", ad.b);
    }
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    for (const auto& ad : adapters) {
      const std::string p = "lora." + std::to_string(ad.layer) + "." + to_string(ad.target) + ".";
      fn(p + "A", ad.a);
      fn(p + "B", ad.b);
    }
  }

  Index num_parameters() const {
    Index n = 0;
    for (const auto& ad : adapters) n += ad.a.size() + ad.b.size();
    return n;
  }

  LoRAParams zeros_like() const {
    LoRAParams out = *this;
    for (auto& ad : out.adapters) {
      ad.a.setZero();
      ad.b.setZero();
    }
    return out;
  }

  bool same_shape(const LoRAParams& other) const {
    if (adapters.size() != other.adapters.size()) return false;
    for (std::size_t i = 0; i < adapters.size(); ++i) {
      const auto& x = adapters[i];
      const auto& y = other.adapters[i];
      if (x.layer != y.layer || x.target != y.target || x.a.rows() != y.a.rows() || x.a.cols() != y.a.cols() ||
          x.b.rows() != y.b.rows() || x.b.cols() != y.b.cols())
        return false;
    }
    return true;
  }

  template <typename T>
  LoRAParams<T> cast() const {
    LoRAParams<T> out;
    out.scale = scale;
    for (const auto& ad : adapters) {
      out.adapters.push_back({ad.layer, ad.target, ad.a.template cast<T>(), ad.b.template cast<T>()});
    }
    return out;
  }
};

/// A ~ U(-sqrt(6/width), sqrt(6/width)), B = 0, one adapter per (layer, target).
template <typename Scalar>
LoRAParams<Scalar> init_lora(const LoRAConfig& cfg, const EncoderConfig& enc) {
  enc.validate();
  require(cfg.rank >= 1, ErrorCode::InvalidArgument, "LoRA rank must be positive");
  require(cfg.rank < enc.width, ErrorCode::RankTooLarge,
          "rank " + std::to_string(cfg.rank) + " must be below width " + std::to_string(enc.width));
  require(cfg.alpha > 0.0, ErrorCode::InvalidArgument, "LoRA alpha must be positive");
  LoRAParams<Scalar> out;
  out.scale = cfg.scale();
  const double bound = std::sqrt(6.0 / enc.width);
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x10a));
  std::uniform_real_distribution<double> unif(-bound, bound);
  for (int layer = 0; layer < enc.depth; ++layer) {
    for (int p = 0; p < 3; ++p) {
      const auto target = static_cast<Projection>(p);
      bool wanted = false;
      for (auto t : cfg.targets) wanted |= t == target;
      if (!wanted) continue;
      LoRAAdapter<Scalar> ad{layer, target, Matrix<Scalar>(enc.width, cfg.rank),
                             Matrix<Scalar>::Zero(cfg.rank, enc.width)};
      for (Index i = 0; i < ad.a.size(); ++i) ad.a.data()[i] = static_cast<Scalar>(unif(rng));
      out.adapters.push_back(std::move(ad));
    }
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> lora_effective_weight(const Matrix<Scalar>& w, const Matrix<Scalar>& a, const Matrix<Scalar>& b,
                                     Scalar scale) {
  require(a.rows() == w.rows() && b.cols() == w.cols() && a.cols() == b.rows(), ErrorCode::ShapeMismatch,
          "LoRA factors do not match the base weight");
  Matrix<Scalar> out = w;
  out.noalias() += scale * (a * b);
  return out;
}

/// Exponential moving average of the adapter parameters.
template <typename Scalar>
struct TeacherState {
  LoRAParams<Scalar> ema;
  double momentum = 0.001;
};

/// ema <- m * student + (1 - m) * ema, element-wise. Written as ema += m * (student - ema)
/// so an ema equal to the student stays bit-identical.
template <typename Scalar>
void ema_update(TeacherState<Scalar>& teacher, const LoRAParams<Scalar>& student) {
  require(teacher.ema.same_shape(student), ErrorCode::ShapeMismatch, "teacher and student adapters differ in shape");
  const Scalar m = static_cast<Scalar>(teacher.momentum);
  for (std::size_t i = 0; i < student.adapters.size(); ++i) {
    auto& t = teacher.ema.adapters[i];
    const auto& s = student.adapters[i];
    t.a += m * (s.a - t.a);
    t.b += m * (s.b - t.b);
  }
}

}  // namespace uninfo
