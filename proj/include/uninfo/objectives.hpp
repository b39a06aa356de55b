#pragma once

#include <algorithm>
#include <cmath>

#include "uninfo/hypersphere.hpp"

namespace uninfo {

struct LossBreakdown {
  double ent = 0.0;
  double unif = 0.0;
  double pl = 0.0;
  double mi = 0.0;
  double w = 1.0;
  double total = 0.0;
};

struct BalanceConfig {
  double lambda = 1.0;
  double i0 = 3.0;
  bool balancing_enabled = true;
  bool unif_enabled = true;
  bool pl_enabled = true;
};

namespace detail {

template <typename Scalar>
Scalar safe_log(Scalar p) {
  return std::log(std::max(p, static_cast<Scalar>(kProbFloor)));
}

template <typename Scalar>
Scalar row_entropy(const Matrix<Scalar>& p, Index i) {
  Scalar h = 0;
  for (Index c = 0; c < p.cols(); ++c) {
    const Scalar v = p(i, c);
    if (v > Scalar(0)) h -= v * safe_log(v);
  }
  return h;
}

template <typename Scalar>
Scalar squared_distance(const Matrix<Scalar>& z, Index i, Index j) {
  return (z.row(i) - z.row(j)).squaredNorm();
}

}  // namespace detail

/// Mean per-sample prediction entropy (nats).
template <typename Scalar>
Scalar entropy_loss(const PredictionBatch<Scalar>& pred) {
  Scalar sum = 0;
  for (Index i = 0; i < pred.size(); ++i) sum += detail::row_entropy(pred.probs(), i);
  return sum / static_cast<Scalar>(pred.size());
}

/// Entropy of the batch-mean prediction.
template <typename Scalar>
Scalar marginal_entropy(const PredictionBatch<Scalar>& pred) {
  const Matrix<Scalar> mean = pred.probs().colwise().mean();
  return detail::row_entropy(mean, 0);
}

/// Mean of exp(-|zi - zj|^2) over all ordered pairs, diagonal included.
template <typename Scalar>
Scalar uniformity_metric(const EmbeddingBatch<Scalar>& z) {
  require(z.size() >= 2, ErrorCode::BatchTooSmall, "uniformity needs at least two embeddings");
  const Index n = z.size();
  Scalar sum = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) sum += std::exp(-detail::squared_distance(z.data(), i, j));
  }
  return sum / static_cast<Scalar>(n * n);
}

template <typename Scalar>
Scalar uniformity_loss(const EmbeddingBatch<Scalar>& z) {
  return std::log(uniformity_metric(z));
}

/// H(mean prediction) - mean H(prediction), before clamping.
template <typename Scalar>
Scalar mutual_information_unclamped(const PredictionBatch<Scalar>& pred) {
  return marginal_entropy(pred) - entropy_loss(pred);
}

template <typename Scalar>
Scalar mutual_information(const PredictionBatch<Scalar>& pred) {
  return std::max(Scalar(0), mutual_information_unclamped(pred));
}

/// exp(mi - i0), or 1 when balancing is switched off. Never differentiated.
inline double balance_weight(double mi, const BalanceConfig& cfg) {
  require(mi >= 0.0, ErrorCode::InvalidArgument, "mutual information must be nonnegative");
  return cfg.balancing_enabled ? std::exp(mi - cfg.i0) : 1.0;
}

/// Cross-entropy of the student against a fixed teacher target.
template <typename Scalar>
Scalar distillation_loss(const PredictionBatch<Scalar>& teacher, const PredictionBatch<Scalar>& student) {
  require(teacher.size() == student.size() && teacher.num_classes() == student.num_classes(),
          ErrorCode::ShapeMismatch, "teacher and student predictions differ in shape");
  Scalar sum = 0;
  for (Index i = 0; i < student.size(); ++i) {
    for (Index c = 0; c < student.num_classes(); ++c) {
      const Scalar q = teacher.probs()(i, c);
      if (q != Scalar(0)) sum -= q * detail::safe_log(student.probs()(i, c));
    }
  }
  return sum / static_cast<Scalar>(student.size());
}

template <typename Scalar>
LossBreakdown composite_loss(const EmbeddingBatch<Scalar>& z, const PredictionBatch<Scalar>& student,
                             const PredictionBatch<Scalar>& teacher, const BalanceConfig& cfg) {
  require(cfg.lambda >= 0.0, ErrorCode::InvalidArgument, "lambda must be nonnegative");
  require(z.size() == student.size(), ErrorCode::ShapeMismatch, "embeddings and predictions differ in length");
  LossBreakdown out;
  out.ent = static_cast<double>(entropy_loss(student));
  out.unif = static_cast<double>(uniformity_loss(z));
  out.pl = static_cast<double>(distillation_loss(teacher, student));
  out.mi = static_cast<double>(mutual_information(student));
  out.w = balance_weight(out.mi, cfg);
  out.total = out.w * out.ent;
  if (cfg.unif_enabled) out.total += cfg.lambda / out.w * out.unif;
  if (cfg.pl_enabled) out.total += out.pl;
  return out;
}

// ---------------------------------------------------------------------------
// Gradients. Logit gradients are w.r.t. l = z t^T / tau, embedding gradients
// w.r.t. the unit rows z.

/// d entropy_loss / d logits.
template <typename Scalar>
Matrix<Scalar> entropy_logit_grad(const PredictionBatch<Scalar>& pred) {
  const Matrix<Scalar>& p = pred.probs();
  Matrix<Scalar> g(p.rows(), p.cols());
  const Scalar inv_b = Scalar(1) / static_cast<Scalar>(p.rows());
  for (Index i = 0; i < p.rows(); ++i) {
    const Scalar h = detail::row_entropy(p, i);
    for (Index c = 0; c < p.cols(); ++c) {
      const Scalar v = p(i, c);
      g(i, c) = v > Scalar(0) ? -v * (detail::safe_log(v) + h) * inv_b : Scalar(0);
    }
  }
  return g;
}

/// d distillation_loss / d student logits, teacher held constant.
template <typename Scalar>
Matrix<Scalar> distillation_logit_grad(const PredictionBatch<Scalar>& teacher, const PredictionBatch<Scalar>& student) {
  const Matrix<Scalar>& p = student.probs();
  const Matrix<Scalar>& q = teacher.probs();
  Matrix<Scalar> g(p.rows(), p.cols());
  const Scalar inv_b = Scalar(1) / static_cast<Scalar>(p.rows());
  for (Index i = 0; i < p.rows(); ++i) {
    const Scalar mass = q.row(i).sum();
    g.row(i) = (p.row(i) * mass - q.row(i)) * inv_b;
  }
  return g;
}

/// d uniformity_loss / d z.
template <typename Scalar>
Matrix<Scalar> uniformity_grad(const EmbeddingBatch<Scalar>& z) {
  require(z.size() >= 2, ErrorCode::BatchTooSmall, "uniformity needs at least two embeddings");
  const Matrix<Scalar>& x = z.data();
  const Index n = x.rows();
  Matrix<Scalar> kernel(n, n);
  Scalar total = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      kernel(i, j) = std::exp(-detail::squared_distance(x, i, j));
      total += kernel(i, j);
    }
  }
  // sum_j K_ij (z_i - z_j) = rowsum(K)_i z_i - (K z)_i
  const Vector<Scalar> row_sums = kernel.rowwise().sum();
  Matrix<Scalar> g = row_sums.asDiagonal() * x - kernel * x;
  return g * (Scalar(-4) / total);
}

template <typename Scalar>
Matrix<Scalar> logits_to_embedding_grad(const Matrix<Scalar>& logit_grad, const PrototypeBank<Scalar>& bank) {
  return logit_grad * bank.prototypes() / bank.temperature();
}

template <typename Scalar>
struct CompositeGradient {
  LossBreakdown loss;
  Matrix<Scalar> dz;  // gradient w.r.t. the unit embeddings
};

/// Value and gradient of the balanced objective. The balance weight enters as
/// a constant, and so does the teacher distribution.
template <typename Scalar>
CompositeGradient<Scalar> composite_loss_gradient(const EmbeddingBatch<Scalar>& z, const PredictionBatch<Scalar>& student,
                                                  const PredictionBatch<Scalar>& teacher,
                                                  const PrototypeBank<Scalar>& bank, const BalanceConfig& cfg) {
  CompositeGradient<Scalar> out;
  out.loss = composite_loss(z, student, teacher, cfg);
  const Scalar w = static_cast<Scalar>(out.loss.w);
  Matrix<Scalar> dlogits = entropy_logit_grad(student) * w;
  if (cfg.pl_enabled) dlogits += distillation_logit_grad(teacher, student);
  out.dz = logits_to_embedding_grad(dlogits, bank);
  if (cfg.unif_enabled && cfg.lambda != 0.0) {
    out.dz += uniformity_grad(z) * static_cast<Scalar>(cfg.lambda / out.loss.w);
  }
  return out;
}

}  // namespace uninfo
