#pragma once

#include "tnr/common.hpp"

#include <cmath>
#include <random>
#include <string>

namespace tnr::nn {

using Eigen::Index;

// Sequences are laid out as (features x steps*batch) matrices. Column
// t*batch + b holds step t of sequence b, so one time step is a contiguous
// block of `batch` columns.

template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return (Scalar(1) + (-x.array()).exp()).inverse().matrix();
}

template <typename Scalar>
struct GruLayerParams {
  Matrix<Scalar> W_z, W_r, W_h;  // hidden x input
  Matrix<Scalar> U_z, U_r, U_h;  // hidden x hidden
  Vector<Scalar> b_z, b_r, b_h;  // hidden

  Index hidden() const { return W_z.rows(); }
  Index input() const { return W_z.cols(); }

  static GruLayerParams zeros(Index input, Index hidden) {
    GruLayerParams p;
    p.W_z = p.W_r = p.W_h = Matrix<Scalar>::Zero(hidden, input);
    p.U_z = p.U_r = p.U_h = Matrix<Scalar>::Zero(hidden, hidden);
    p.b_z = p.b_r = p.b_h = Vector<Scalar>::Zero(hidden);
    return p;
  }

  void validate() const {
    const Index h = hidden();
    const Index in = input();
    auto check = [&](const auto& m, Index rows, Index cols, const char* name) {
      if (m.rows() != rows || m.cols() != cols) {
        throw std::invalid_argument(std::string("GRU parameter ") + name + " has shape " +
                                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                    ", expected " + std::to_string(rows) + "x" +
                                    std::to_string(cols));
      }
    };
    if (h < 1 || in < 1) throw std::invalid_argument("GRU layer needs positive sizes");
    check(W_r, h, in, "W_r");
    check(W_h, h, in, "W_h");
    check(U_z, h, h, "U_z");
    check(U_r, h, h, "U_r");
    check(U_h, h, h, "U_h");
    check(b_z, h, 1, "b_z");
    check(b_r, h, 1, "b_r");
    check(b_h, h, 1, "b_h");
  }
};

template <typename Scalar>
struct DenseParams {
  Matrix<Scalar> W;  // out x in
  Vector<Scalar> b;  // out

  void validate() const {
    if (b.rows() != W.rows()) throw std::invalid_argument("dense bias does not match W rows");
  }
};

// z = sigmoid(W_z x + U_z h + b_z)
// r = sigmoid(W_r x + U_r h + b_r)
// c = tanh(W_h x + U_h (r .* h) + b_h)
// h' = (1 - z) .* h + z .* c
template <typename Scalar>
Vector<Scalar> gru_cell(const GruLayerParams<Scalar>& p, const Vector<Scalar>& x,
                        const Vector<Scalar>& h_prev) {
  p.validate();
  if (x.size() != p.input() || h_prev.size() != p.hidden()) {
    throw std::invalid_argument("gru_cell: input or hidden size mismatch");
  }
  const Vector<Scalar> z = sigmoid(p.W_z * x + p.U_z * h_prev + p.b_z);
  const Vector<Scalar> r = sigmoid(p.W_r * x + p.U_r * h_prev + p.b_r);
  const Vector<Scalar> c =
      (p.W_h * x + p.U_h * r.cwiseProduct(h_prev) + p.b_h).array().tanh().matrix();
  return (Scalar(1) - z.array()).matrix().cwiseProduct(h_prev) + z.cwiseProduct(c);
}

template <typename Scalar>
Vector<Scalar> dense(const DenseParams<Scalar>& p, const Vector<Scalar>& x) {
  p.validate();
  if (x.size() != p.W.cols()) throw std::invalid_argument("dense: input size mismatch");
  return p.W * x + p.b;
}

// One GRU layer run over a batch of sequences, caching what backward needs.
template <typename Scalar>
class GruLayer {
 public:
  using Mat = Matrix<Scalar>;

  explicit GruLayer(GruLayerParams<Scalar> params) : p_(std::move(params)) { p_.validate(); }

  const GruLayerParams<Scalar>& params() const noexcept { return p_; }

  // inputs: input x (steps*batch). h0 defaults to zeros (hidden x batch).
  const Mat& forward(const Mat& inputs, Index steps, Index batch, const Mat* h0 = nullptr) {
    const Index H = p_.hidden();
    if (inputs.rows() != p_.input() || inputs.cols() != steps * batch || steps < 1 ||
        batch < 1) {
      throw std::invalid_argument("GruLayer::forward: input shape mismatch");
    }
    steps_ = steps;
    batch_ = batch;
    x_ = inputs;
    if (h0) {
      if (h0->rows() != H || h0->cols() != batch) {
        throw std::invalid_argument("GruLayer::forward: h0 shape mismatch");
      }
      h0_ = *h0;
    } else {
      h0_ = Mat::Zero(H, batch);
    }
    z_.noalias() = p_.W_z * x_;
    z_.colwise() += p_.b_z;
    r_.noalias() = p_.W_r * x_;
    r_.colwise() += p_.b_r;
    c_.noalias() = p_.W_h * x_;
    c_.colwise() += p_.b_h;
    h_.resize(H, steps * batch);
    rh_.resize(H, steps * batch);

    Mat hp = h0_;
    for (Index t = 0; t < steps; ++t) {
      auto z = z_.middleCols(t * batch, batch);
      auto r = r_.middleCols(t * batch, batch);
      auto c = c_.middleCols(t * batch, batch);
      auto rh = rh_.middleCols(t * batch, batch);
      auto h = h_.middleCols(t * batch, batch);
      z.noalias() += p_.U_z * hp;
      z = sigmoid(z);
      r.noalias() += p_.U_r * hp;
      r = sigmoid(r);
      rh = r.cwiseProduct(hp);
      c.noalias() += p_.U_h * rh;
      c = c.array().tanh().matrix();
      h = (Scalar(1) - z.array()).matrix().cwiseProduct(hp) + z.cwiseProduct(c);
      hp = h;
    }
    has_forward_ = true;
    return h_;
  }

  const Mat& outputs() const { return h_; }

  // d_outputs: hidden x (steps*batch), gradient of the loss w.r.t. every
  // hidden state. Accumulates parameter gradients into grads and returns
  // the gradient w.r.t. the inputs.
  Mat backward(const Mat& d_outputs, GruLayerParams<Scalar>& grads) const {
    if (!has_forward_) throw InvalidState("GruLayer::backward called before forward");
    const Index H = p_.hidden();
    const Index B = batch_;
    const Index N = steps_ * B;
    if (d_outputs.rows() != H || d_outputs.cols() != N) {
      throw std::invalid_argument("GruLayer::backward: gradient shape mismatch");
    }
    Mat dz(H, N), dr(H, N), dc(H, N);
    Mat dh_next = Mat::Zero(H, B);
    Mat hp(H, B), dh(H, B), drh(H, B);
    for (Index t = steps_ - 1; t >= 0; --t) {
      hp = t == 0 ? h0_ : Mat(h_.middleCols((t - 1) * B, B));
      const auto z = z_.middleCols(t * B, B).array();
      const auto r = r_.middleCols(t * B, B).array();
      const auto c = c_.middleCols(t * B, B).array();
      dh = d_outputs.middleCols(t * B, B) + dh_next;

      dc.middleCols(t * B, B) = (dh.array() * z * (Scalar(1) - c.square())).matrix();
      dz.middleCols(t * B, B) =
          (dh.array() * (c - hp.array()) * z * (Scalar(1) - z)).matrix();
      drh.noalias() = p_.U_h.transpose() * dc.middleCols(t * B, B);
      dr.middleCols(t * B, B) = (drh.array() * hp.array() * r * (Scalar(1) - r)).matrix();

      dh_next = (dh.array() * (Scalar(1) - z) + drh.array() * r).matrix();
      dh_next.noalias() += p_.U_z.transpose() * dz.middleCols(t * B, B);
      dh_next.noalias() += p_.U_r.transpose() * dr.middleCols(t * B, B);
    }

    Mat h_prev(H, N);
    h_prev.leftCols(B) = h0_;
    if (steps_ > 1) h_prev.rightCols(N - B) = h_.leftCols(N - B);

    grads.U_z.noalias() += dz * h_prev.transpose();
    grads.U_r.noalias() += dr * h_prev.transpose();
    grads.U_h.noalias() += dc * rh_.transpose();
    grads.W_z.noalias() += dz * x_.transpose();
    grads.W_r.noalias() += dr * x_.transpose();
    grads.W_h.noalias() += dc * x_.transpose();
    grads.b_z += dz.rowwise().sum();
    grads.b_r += dr.rowwise().sum();
    grads.b_h += dc.rowwise().sum();

    Mat dx(p_.input(), N);
    dx.noalias() = p_.W_z.transpose() * dz;
    dx.noalias() += p_.W_r.transpose() * dr;
    dx.noalias() += p_.W_h.transpose() * dc;
    return dx;
  }

 private:
  GruLayerParams<Scalar> p_;
  bool has_forward_ = false;
  Index steps_ = 0;
  Index batch_ = 0;
  // After forward: z_, r_, c_ hold gate activations (not pre-activations).
  Mat x_, h0_, z_, r_, c_, rh_, h_;
};

// Dense map applied independently to every column.
template <typename Scalar>
class DenseLayer {
 public:
  using Mat = Matrix<Scalar>;

  explicit DenseLayer(DenseParams<Scalar> params) : p_(std::move(params)) { p_.validate(); }

  const DenseParams<Scalar>& params() const noexcept { return p_; }

  Mat forward(const Mat& inputs) {
    if (inputs.rows() != p_.W.cols()) {
      throw std::invalid_argument("DenseLayer::forward: input size mismatch");
    }
    x_ = inputs;
    has_forward_ = true;
    Mat y(p_.W.rows(), inputs.cols());
    y.noalias() = p_.W * inputs;
    y.colwise() += p_.b;
    return y;
  }

  Mat backward(const Mat& d_outputs, DenseParams<Scalar>& grads) const {
    if (!has_forward_) throw InvalidState("DenseLayer::backward called before forward");
    if (d_outputs.rows() != p_.W.rows() || d_outputs.cols() != x_.cols()) {
      throw std::invalid_argument("DenseLayer::backward: gradient shape mismatch");
    }
    grads.W.noalias() += d_outputs * x_.transpose();
    grads.b += d_outputs.rowwise().sum();
    Mat dx(p_.W.cols(), d_outputs.cols());
    dx.noalias() = p_.W.transpose() * d_outputs;
    return dx;
  }

 private:
  DenseParams<Scalar> p_;
  bool has_forward_ = false;
  Mat x_;
};

// All hidden states of one sequence. inputs is T x input, result T x hidden.
template <typename Scalar>
Matrix<Scalar> gru_sequence(const GruLayerParams<Scalar>& p, const Matrix<Scalar>& inputs,
                            const Vector<Scalar>& h0) {
  if (inputs.cols() != p.input()) throw std::invalid_argument("gru_sequence: input width mismatch");
  if (h0.size() != p.hidden()) throw std::invalid_argument("gru_sequence: h0 size mismatch");
  if (inputs.rows() < 1) throw std::invalid_argument("gru_sequence: empty sequence");
  GruLayer<Scalar> layer(p);
  const Matrix<Scalar> h0m = h0;
  const Matrix<Scalar> x = inputs.transpose();
  return layer.forward(x, inputs.rows(), 1, &h0m).transpose();
}

// Glorot-uniform: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
template <typename Scalar>
Matrix<Scalar> glorot_uniform(Index rows, Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix<Scalar> m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = static_cast<Scalar>(dist(rng));
  }
  return m;
}

}  // namespace tnr::nn
