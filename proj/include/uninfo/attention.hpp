#pragma once

#include <cmath>

#include "uninfo/hypersphere.hpp"

namespace uninfo {

/// softmax(Q K^T * scale) V for one head. Rows of Q, K, V are tokens. When
/// `weights` is given the attention matrix is stored there.
template <typename Scalar, typename DQ, typename DK, typename DV>
Matrix<Scalar> attend(const Eigen::MatrixBase<DQ>& q, const Eigen::MatrixBase<DK>& k, const Eigen::MatrixBase<DV>& v,
                      Scalar scale, Matrix<Scalar>* weights = nullptr) {
  Matrix<Scalar> scores = (q * k.transpose()) * scale;
  Matrix<Scalar> p = softmax_rows(scores);
  Matrix<Scalar> out = p * v;
  if (weights != nullptr) *weights = std::move(p);
  return out;
}

template <typename Scalar>
struct AttendGrad {
  Matrix<Scalar> dq, dk, dv;
};

/// Backward of attend() given the stored attention matrix.
template <typename Scalar, typename DQ, typename DK, typename DV, typename DO>
AttendGrad<Scalar> attend_backward(const Eigen::MatrixBase<DQ>& q, const Eigen::MatrixBase<DK>& k,
                                   const Eigen::MatrixBase<DV>& v, const Matrix<Scalar>& weights,
                                   const Eigen::MatrixBase<DO>& d_out, Scalar scale) {
  AttendGrad<Scalar> g;
  const Matrix<Scalar> dp = d_out * v.transpose();
  g.dv = weights.transpose() * d_out;
  const Vector<Scalar> inner = (dp.array() * weights.array()).rowwise().sum();
  Matrix<Scalar> ds = weights.array() * (dp.colwise() - inner).array();
  ds *= scale;
  g.dq = ds * k;
  g.dk = ds.transpose() * q;
  return g;
}

/// Single-head attention on a token matrix h (n x d):
/// softmax((h Wq)(h Wk)^T / sqrt(d)) (h Wv).
template <typename Scalar>
Matrix<Scalar> attention_forward(const Matrix<Scalar>& h, const Matrix<Scalar>& wq, const Matrix<Scalar>& wk,
                                 const Matrix<Scalar>& wv) {
  const Index d = h.cols();
  require(wq.rows() == d && wq.cols() == d && wk.rows() == d && wk.cols() == d && wv.rows() == d && wv.cols() == d,
          ErrorCode::ShapeMismatch, "attention weights must be d x d");
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(d));
  return attend<Scalar>(h * wq, h * wk, h * wv, scale);
}

/// Multi-head variant: columns are split into `heads` equal groups, each
/// attended with 1/sqrt(d/heads), and the results concatenated.
template <typename Scalar>
Matrix<Scalar> multi_head_attention(const Matrix<Scalar>& h, const Matrix<Scalar>& wq, const Matrix<Scalar>& wk,
                                    const Matrix<Scalar>& wv, int heads) {
  const Index d = h.cols();
  require(heads >= 1 && d % heads == 0, ErrorCode::ShapeMismatch, "width not divisible by heads");
  require(wq.rows() == d && wq.cols() == d && wk.rows() == d && wk.cols() == d && wv.rows() == d && wv.cols() == d,
          ErrorCode::ShapeMismatch, "attention weights must be d x d");
  const Index dh = d / heads;
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
  const Matrix<Scalar> q = h * wq, k = h * wk, v = h * wv;
  Matrix<Scalar> out(h.rows(), d);
  for (int head = 0; head < heads; ++head) {
    out.middleCols(head * dh, dh) =
        attend<Scalar>(q.middleCols(head * dh, dh), k.middleCols(head * dh, dh), v.middleCols(head * dh, dh), scale);
  }
  return out;
}

}  // namespace uninfo
