#pragma once

#include "tnr/nn/param_store.hpp"

#include <cmath>

namespace tnr::nn {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment estimates are kept per tensor, in the
// order of the store they were created from.
template <typename Scalar>
class Adam {
 public:
  explicit Adam(const ParamStore<Scalar>& like, AdamOptions options = {})
      : opt_(options), m_(like.zeros_like()), v_(like.zeros_like()) {}

  std::size_t steps() const noexcept { return t_; }

  // params <- params - lr * m_hat / (sqrt(v_hat) + eps)
  void step(ParamStore<Scalar>& params, const ParamStore<Scalar>& grads, double lr) {
    if (!params.structurally_equal(m_) || !grads.structurally_equal(m_)) {
      throw std::invalid_argument("Adam::step: parameter/gradient layout mismatch");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    const auto b1 = static_cast<Scalar>(opt_.beta1);
    const auto b2 = static_cast<Scalar>(opt_.beta2);
    const auto step_size = static_cast<Scalar>(lr / c1);
    const auto inv_sqrt_c2 = static_cast<Scalar>(1.0 / std::sqrt(c2));
    const auto eps = static_cast<Scalar>(opt_.eps);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& g = grads.at(i).value.array();
      auto m = m_.at(i).value.array();
      auto v = v_.at(i).value.array();
      m = b1 * m + (Scalar(1) - b1) * g;
      v = b2 * v + (Scalar(1) - b2) * g.square();
      params.at(i).value.array() -= step_size * m / (v.sqrt() * inv_sqrt_c2 + eps);
    }
  }

 private:
  AdamOptions opt_;
  ParamStore<Scalar> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace tnr::nn
