#pragma once

#include "tnr/common.hpp"
#include "tnr/signal_synthesis.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace tnr {

// h(t) = alpha * exp(j (omega t + phi)). Experiments use the identity.
struct ChannelCoefficient {
  double alpha = 1.0;
  double omega = 0.0;  // rad/sample
  double phi = 0.0;    // rad

  static constexpr ChannelCoefficient identity() noexcept { return {}; }
};

// Per-sample SNR in dB, piecewise constant. segment_starts[0] == 0 and the
// last segment runs to the end of the frame.
struct SnrTrajectory {
  Vector<double> snr_db;
  std::vector<std::size_t> segment_starts;

  std::size_t length() const noexcept { return static_cast<std::size_t>(snr_db.size()); }
  double mean() const { return snr_db.mean(); }

  static SnrTrajectory constant(std::size_t length, double snr_db);
};

struct NoisyFrame {
  IQFrame<double> frame;
  SnrTrajectory trajectory;
  FrameLabel label;
  std::uint64_t source_seed = 0;
};

inline constexpr double kInfiniteSnr = std::numeric_limits<double>::infinity();

SnrTrajectory sample_trajectory(std::size_t length, double snr_min, double snr_max,
                                std::size_t max_segments, std::uint64_t seed);

// Noise variance per complex sample is P * 10^(-snr/10), where P is the
// clean frame's average power, split evenly over I and Q.
NoisyFrame apply_channel(const CleanFrame& clean, const ChannelCoefficient& coeff,
                         const SnrTrajectory& trajectory, std::uint64_t seed);

// 10 log10(clean power / residual power). Returns kInfiniteSnr when the
// residual is exactly zero.
template <typename Scalar>
double empirical_snr(const IQFrame<Scalar>& clean, const IQFrame<Scalar>& noisy) {
  if (clean.cols() != noisy.cols()) {
    throw std::invalid_argument("empirical_snr: frame lengths differ");
  }
  const auto c = clean.template cast<double>();
  const double signal = c.squaredNorm();
  const double residual = (noisy.template cast<double>() - c).squaredNorm();
  if (residual == 0.0) return kInfiniteSnr;
  return 10.0 * std::log10(signal / residual);
}

}  // namespace tnr
