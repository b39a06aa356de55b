#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "uninfo/common.hpp"
#include "uninfo/errors.hpp"

namespace uninfo {

inline constexpr double kZeroNorm = 1e-12;
inline constexpr double kUnitNormTolerance = 1e-5;

template <typename Scalar>
bool rows_unit_norm(const Matrix<Scalar>& m, double tol = kUnitNormTolerance) {
  for (Index i = 0; i < m.rows(); ++i) {
    if (std::abs(static_cast<double>(m.row(i).norm()) - 1.0) > tol) return false;
  }
  return true;
}

/// A B x d batch of unit vectors on the embedding hypersphere.
template <typename Scalar>
class EmbeddingBatch {
 public:
  EmbeddingBatch() = default;

  static EmbeddingBatch from_unit_rows(Matrix<Scalar> rows) {
    require(rows.rows() >= 1 && rows.cols() >= 2, ErrorCode::ShapeMismatch,
            "embedding batch needs B >= 1 and d >= 2");
    require(rows_unit_norm(rows), ErrorCode::InvalidArgument, "embedding rows must have unit norm");
    EmbeddingBatch z;
    z.data_ = std::move(rows);
    return z;
  }

  const Matrix<Scalar>& data() const { return data_; }
  Index size() const { return data_.rows(); }
  Index dim() const { return data_.cols(); }

  template <typename T>
  EmbeddingBatch<T> cast() const {
    return EmbeddingBatch<T>::from_unit_rows(data_.template cast<T>().rowwise().normalized());
  }

 private:
  Matrix<Scalar> data_;
};

/// Class prototypes (unit rows) with the softmax temperature.
template <typename Scalar>
class PrototypeBank {
 public:
  PrototypeBank() = default;

  PrototypeBank(Matrix<Scalar> prototypes, Scalar temperature, std::vector<std::string> class_names = {})
      : prototypes_(std::move(prototypes)), temperature_(temperature), names_(std::move(class_names)) {
    require(prototypes_.rows() >= 2, ErrorCode::InvalidArgument, "prototype bank needs C >= 2");
    require(temperature_ > Scalar(0), ErrorCode::InvalidArgument, "temperature must be positive");
    require(rows_unit_norm(prototypes_), ErrorCode::InvalidArgument, "prototype rows must have unit norm");
    if (names_.empty()) {
      for (Index c = 0; c < prototypes_.rows(); ++c) names_.push_back("class_" + std::to_string(c));
    }
    require(static_cast<Index>(names_.size()) == prototypes_.rows(), ErrorCode::LengthMismatch,
            "class_names length differs from prototype count");
  }

  const Matrix<Scalar>& prototypes() const { return prototypes_; }
  Scalar temperature() const { return temperature_; }
  const std::vector<std::string>& class_names() const { return names_; }
  Index num_classes() const { return prototypes_.rows(); }
  Index dim() const { return prototypes_.cols(); }

  PrototypeBank with_temperature(Scalar t) const { return PrototypeBank(prototypes_, t, names_); }

  template <typename T>
  PrototypeBank<T> cast() const {
    Matrix<T> p = prototypes_.template cast<T>().rowwise().normalized();
    return PrototypeBank<T>(std::move(p), static_cast<T>(temperature_), names_);
  }

 private:
  Matrix<Scalar> prototypes_;
  Scalar temperature_ = Scalar(1);
  std::vector<std::string> names_;
};

/// Row-stochastic class probabilities and their argmax labels.
template <typename Scalar>
class PredictionBatch {
 public:
  PredictionBatch() = default;

  static PredictionBatch from_probs(Matrix<Scalar> probs) {
    require(probs.rows() >= 1 && probs.cols() >= 1, ErrorCode::ShapeMismatch, "empty probability matrix");
    for (Index i = 0; i < probs.rows(); ++i) {
      require((probs.row(i).array() >= Scalar(0)).all(), ErrorCode::InvalidArgument,
              "probabilities must be nonnegative");
      require(std::abs(probs.row(i).sum() - Scalar(1)) <= prob_tolerance<Scalar>(), ErrorCode::InvalidArgument,
              "probability rows must sum to 1");
    }
    PredictionBatch p;
    p.labels_.resize(static_cast<std::size_t>(probs.rows()));
    for (Index i = 0; i < probs.rows(); ++i) {
      Index best = 0;
      for (Index c = 1; c < probs.cols(); ++c) {
        if (probs(i, c) > probs(i, best)) best = c;
      }
      p.labels_[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    p.probs_ = std::move(probs);
    return p;
  }

  const Matrix<Scalar>& probs() const { return probs_; }
  const std::vector<int>& labels() const { return labels_; }
  Index size() const { return probs_.rows(); }
  Index num_classes() const { return probs_.cols(); }

 private:
  Matrix<Scalar> probs_;
  std::vector<int> labels_;
};

/// Divides each row by its L2 norm.
template <typename Scalar>
EmbeddingBatch<Scalar> normalize_rows(const Matrix<Scalar>& raw) {
  Matrix<Scalar> out(raw.rows(), raw.cols());
  for (Index i = 0; i < raw.rows(); ++i) {
    const Scalar n = raw.row(i).norm();
    require(static_cast<double>(n) > kZeroNorm, ErrorCode::ZeroVectorRow,
            "row " + std::to_string(i) + " has zero norm");
    out.row(i) = raw.row(i) / n;
  }
  return EmbeddingBatch<Scalar>::from_unit_rows(std::move(out));
}

// Pulls a gradient on the unit rows back to the raw rows: (I - z z^T) g / |r|.
template <typename Scalar>
Matrix<Scalar> normalize_rows_backward(const Matrix<Scalar>& raw, const Matrix<Scalar>& grad_unit) {
  Matrix<Scalar> out(raw.rows(), raw.cols());
  for (Index i = 0; i < raw.rows(); ++i) {
    const Scalar n = raw.row(i).norm();
    const RowVector<Scalar> z = raw.row(i) / n;
    out.row(i) = (grad_unit.row(i) - z * z.dot(grad_unit.row(i))) / n;
  }
  return out;
}

/// Numerically safe row softmax (per-row max subtraction).
template <typename Scalar>
Matrix<Scalar> softmax_rows(const Matrix<Scalar>& logits) {
  Matrix<Scalar> out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const Scalar mx = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - mx).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> zero_shot_logits(const EmbeddingBatch<Scalar>& z, const PrototypeBank<Scalar>& bank) {
  require(z.dim() == bank.dim(), ErrorCode::DimensionMismatch,
          "embedding dim " + std::to_string(z.dim()) + " vs prototype dim " + std::to_string(bank.dim()));
  return (z.data() * bank.prototypes().transpose()) / bank.temperature();
}

/// Softmax over cosine similarities to the prototypes, scaled by 1/temperature.
template <typename Scalar>
PredictionBatch<Scalar> zero_shot_probs(const EmbeddingBatch<Scalar>& z, const PrototypeBank<Scalar>& bank) {
  return PredictionBatch<Scalar>::from_probs(softmax_rows(zero_shot_logits(z, bank)));
}

template <typename Scalar>
double batch_accuracy(const PredictionBatch<Scalar>& pred, std::span<const int> truth) {
  require(static_cast<Index>(truth.size()) == pred.size(), ErrorCode::LengthMismatch,
          "prediction and truth lengths differ");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += pred.labels()[i] == truth[i] ? 1 : 0;
  return truth.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace uninfo
