#pragma once

#include "tnr/nn/param_store.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <type_traits>
#include <utility>
#include <vector>

namespace tnr::nn {

struct FiniteDiffOptions {
  double epsilon = 1e-4;
  // All coordinates are checked when the store is at most this large,
  // otherwise this many distinct coordinates are sampled.
  std::size_t max_coordinates = 400;
  std::uint64_t seed = 0;
};

struct FiniteDiffResult {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  Eigen::Index worst_index = -1;
  std::size_t checked = 0;
};

// Central differences against an analytic gradient:
//   err = |g_a - g_n| / max(|g_a|, |g_n|, 1e-8), maximized over coordinates.
// loss maps a parameter store to the scalar loss.
template <typename Scalar, typename LossFn>
FiniteDiffResult finite_diff_check(const ParamStore<Scalar>& params,
                                   const ParamStore<Scalar>& analytic, LossFn&& loss,
                                   const FiniteDiffOptions& options = {}) {
  if constexpr (!std::is_same_v<Scalar, double>) {
    throw std::invalid_argument("finite_diff_check requires double precision");
  }
  if (!params.structurally_equal(analytic)) {
    throw std::invalid_argument("finite_diff_check: gradient layout does not match parameters");
  }

  std::vector<std::pair<std::size_t, Eigen::Index>> coords;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (Eigen::Index k = 0; k < params.at(i).value.size(); ++k) coords.emplace_back(i, k);
  }
  if (coords.size() > options.max_coordinates) {
    std::vector<std::pair<std::size_t, Eigen::Index>> picked;
    std::mt19937_64 rng(options.seed);
    std::sample(coords.begin(), coords.end(), std::back_inserter(picked),
                options.max_coordinates, rng);
    coords = std::move(picked);
  }

  ParamStore<Scalar> probe = params;
  FiniteDiffResult result;
  const auto eps = static_cast<Scalar>(options.epsilon);
  for (const auto& [i, k] : coords) {
    Scalar& w = probe.at(i).value.data()[k];
    const Scalar saved = w;
    w = saved + eps;
    const double up = static_cast<double>(loss(std::as_const(probe)));
    w = saved - eps;
    const double down = static_cast<double>(loss(std::as_const(probe)));
    w = saved;

    const double numeric = (up - down) / (2.0 * options.epsilon);
    const double exact = static_cast<double>(analytic.at(i).value.data()[k]);
    const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
    const double err = std::abs(exact - numeric) / denom;
    if (err > result.max_relative_error || result.worst_index < 0) {
      result.max_relative_error = err;
      result.worst_tensor = params.at(i).name;
      result.worst_index = k;
    }
    ++result.checked;
  }
  return result;
}

}  // namespace tnr::nn
