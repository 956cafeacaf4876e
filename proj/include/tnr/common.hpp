#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace tnr {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// One signal realization. Row 0 holds the in-phase samples, row 1 the
// quadrature samples; column t is sample t.
template <typename Scalar>
using IQFrame = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

// Raised when an operation is called on an object in the wrong state
// (backward before forward, wrong network role, role assigned twice).
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Raised by the binary readers. offset is the byte position where decoding
// stopped.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

template <typename Scalar>
bool all_finite(const IQFrame<Scalar>& frame) {
  return frame.allFinite();
}

// Mean over t of I(t)^2 + Q(t)^2.
template <typename Scalar>
double average_power(const IQFrame<Scalar>& frame) {
  if (frame.cols() == 0) return 0.0;
  return frame.template cast<double>().squaredNorm() / static_cast<double>(frame.cols());
}

// SplitMix64 finalizer; used to derive independent per-frame seeds from a
// run seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  return mix_seed(base ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace tnr
