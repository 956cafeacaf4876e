#pragma once

#include "tnr/common.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tnr::nn {

using Eigen::Index;

inline constexpr double kProbabilityFloor = 1e-12;

template <typename Scalar>
Vector<Scalar> softmax(const Vector<Scalar>& logits) {
  if (logits.size() == 0) throw std::invalid_argument("softmax of an empty vector");
  if (!logits.allFinite()) throw std::invalid_argument("softmax: non-finite logits");
  const Vector<Scalar> e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

// Column-wise softmax of a K x batch logit matrix.
template <typename Scalar>
Matrix<Scalar> softmax_columns(const Matrix<Scalar>& logits) {
  if (!logits.allFinite()) throw std::invalid_argument("softmax: non-finite logits");
  Matrix<Scalar> e = (logits.rowwise() - logits.colwise().maxCoeff()).array().exp().matrix();
  e.array().rowwise() /= e.colwise().sum().array();
  return e;
}

// (1/T) sum_t [dI(t)^2 + dQ(t)^2] for 2 x T frames.
template <typename Scalar>
Scalar mse_loss(const IQFrame<Scalar>& pred, const IQFrame<Scalar>& target) {
  if (pred.cols() != target.cols()) throw std::invalid_argument("mse_loss: shape mismatch");
  if (pred.cols() == 0) throw std::invalid_argument("mse_loss: empty frames");
  return (pred - target).squaredNorm() / static_cast<Scalar>(pred.cols());
}

template <typename Scalar>
Scalar cross_entropy(const Vector<Scalar>& probs, Index label) {
  if (label < 0 || label >= probs.size()) {
    throw std::invalid_argument("cross_entropy: label " + std::to_string(label) +
                                " outside [0, " + std::to_string(probs.size()) + ")");
  }
  return -std::log(std::max(probs[label], static_cast<Scalar>(kProbabilityFloor)));
}

template <typename Scalar>
struct LossGrad {
  Scalar value{};
  Matrix<Scalar> grad;
};

// Batched reconstruction loss over (2 x steps*batch) matrices: the per-frame
// mse_loss averaged over the batch.
template <typename Scalar>
LossGrad<Scalar> batch_mse(const Matrix<Scalar>& pred, const Matrix<Scalar>& target,
                           Index steps, Index batch) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() ||
      pred.cols() != steps * batch) {
    throw std::invalid_argument("batch_mse: shape mismatch");
  }
  const auto n = static_cast<Scalar>(steps * batch);
  LossGrad<Scalar> out;
  out.grad = pred - target;
  out.value = out.grad.squaredNorm() / n;
  out.grad *= Scalar(2) / n;
  return out;
}

// Mean cross-entropy over the batch; grad is w.r.t. the logits.
template <typename Scalar, typename Labels>
LossGrad<Scalar> batch_cross_entropy(const Matrix<Scalar>& logits, const Labels& labels) {
  const Index batch = logits.cols();
  if (static_cast<Index>(labels.size()) != batch) {
    throw std::invalid_argument("batch_cross_entropy: label count mismatch");
  }
  LossGrad<Scalar> out;
  out.grad = softmax_columns(logits);
  Scalar total{0};
  for (Index b = 0; b < batch; ++b) {
    const auto label = static_cast<Index>(labels[static_cast<std::size_t>(b)]);
    if (label < 0 || label >= logits.rows()) {
      throw std::invalid_argument("batch_cross_entropy: label outside class range");
    }
    const Scalar p = out.grad(label, b);
    total += -std::log(std::max(p, static_cast<Scalar>(kProbabilityFloor)));
    // The clamped branch is constant in the logits.
    if (p >= static_cast<Scalar>(kProbabilityFloor)) {
      out.grad(label, b) -= Scalar(1);
    } else {
      out.grad.col(b).setZero();
    }
  }
  out.value = total / static_cast<Scalar>(batch);
  out.grad /= static_cast<Scalar>(batch);
  return out;
}

}  // namespace tnr::nn
