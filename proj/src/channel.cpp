#include "tnr/channel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>

namespace tnr {

SnrTrajectory SnrTrajectory::constant(std::size_t length, double snr_db) {
  SnrTrajectory traj;
  traj.snr_db = Vector<double>::Constant(static_cast<Eigen::Index>(length), snr_db);
  traj.segment_starts = {0};
  return traj;
}

SnrTrajectory sample_trajectory(std::size_t length, double snr_min, double snr_max,
                                std::size_t max_segments, std::uint64_t seed) {
  if (length == 0) throw std::invalid_argument("trajectory length must be positive");
  if (!(snr_min <= snr_max)) throw std::invalid_argument("snr_min must not exceed snr_max");
  if (max_segments < 1 || max_segments > length) {
    throw std::invalid_argument("max_segments must lie in [1, length]");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> count_dist(1, max_segments);
  const std::size_t segments = count_dist(rng);

  // Boundaries: segments-1 distinct interior indices in [1, length-1].
  std::vector<std::size_t> candidates(length - 1);
  std::iota(candidates.begin(), candidates.end(), std::size_t{1});
  std::vector<std::size_t> starts{0};
  std::sample(candidates.begin(), candidates.end(), std::back_inserter(starts), segments - 1, rng);
  std::sort(starts.begin(), starts.end());

  std::uniform_real_distribution<double> level(snr_min, snr_max);
  SnrTrajectory traj;
  traj.snr_db.resize(static_cast<Eigen::Index>(length));
  for (std::size_t s = 0; s < starts.size(); ++s) {
    const double value = snr_min == snr_max ? snr_min : level(rng);
    const std::size_t end = s + 1 < starts.size() ? starts[s + 1] : length;
    traj.snr_db.segment(static_cast<Eigen::Index>(starts[s]),
                        static_cast<Eigen::Index>(end - starts[s]))
        .setConstant(value);
  }
  traj.segment_starts = std::move(starts);
  return traj;
}

NoisyFrame apply_channel(const CleanFrame& clean, const ChannelCoefficient& coeff,
                         const SnrTrajectory& trajectory, std::uint64_t seed) {
  const Eigen::Index n = clean.frame.cols();
  if (static_cast<Eigen::Index>(trajectory.length()) != n) {
    throw std::invalid_argument("trajectory length does not match frame length");
  }
  if (!(coeff.alpha > 0.0)) throw std::invalid_argument("channel gain must be positive");

  const double signal_power = average_power(clean.frame);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  IQFrame<double> y(2, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const std::complex<double> s(clean.frame(0, t), clean.frame(1, t));
    const auto h = std::polar(coeff.alpha, coeff.omega * static_cast<double>(t) + coeff.phi);
    const std::complex<double> faded = h * s;
    const double variance = signal_power * std::pow(10.0, -trajectory.snr_db[t] / 10.0);
    const double sigma = std::sqrt(variance / 2.0);
    const double ni = gauss(rng);
    const double nq = gauss(rng);
    y(0, t) = faded.real() + sigma * ni;
    y(1, t) = faded.imag() + sigma * nq;
  }
  return NoisyFrame{std::move(y), trajectory, clean.label, clean.seed};
}

}  // namespace tnr
