#include "tnr/signal_synthesis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace tnr {

int bits_per_symbol(ModulationScheme scheme) noexcept {
  switch (scheme) {
    case ModulationScheme::BPSK: return 1;
    case ModulationScheme::QPSK: return 2;
    case ModulationScheme::PSK8: return 3;
    case ModulationScheme::QAM16: return 4;
    case ModulationScheme::QAM64: return 6;
  }
  return 0;
}

std::string_view to_string(ModulationScheme scheme) noexcept {
  switch (scheme) {
    case ModulationScheme::BPSK: return "BPSK";
    case ModulationScheme::QPSK: return "QPSK";
    case ModulationScheme::PSK8: return "8PSK";
    case ModulationScheme::QAM16: return "16QAM";
    case ModulationScheme::QAM64: return "64QAM";
  }
  return "?";
}

std::string_view to_string(WaveformKind kind) noexcept {
  switch (kind) {
    case WaveformKind::Sine: return "sine";
    case WaveformKind::Square: return "square";
    case WaveformKind::Triangle: return "triangle";
    case WaveformKind::Sawtooth: return "sawtooth";
  }
  return "?";
}

ModulationScheme parse_scheme(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (auto scheme : kAllSchemes) {
    if (upper == to_string(scheme)) return scheme;
  }
  if (upper == "PSK8") return ModulationScheme::PSK8;
  if (upper == "QAM16") return ModulationScheme::QAM16;
  if (upper == "QAM64") return ModulationScheme::QAM64;
  throw std::invalid_argument("unknown modulation scheme '" + std::string(name) + "'");
}

std::uint8_t label_index(const FrameLabel& label) noexcept {
  return std::visit([](auto v) { return static_cast<std::uint8_t>(v); }, label);
}

namespace {

double waveform_value(WaveformKind kind, double cycle_pos) {
  const double u = cycle_pos - std::floor(cycle_pos);
  switch (kind) {
    case WaveformKind::Sine:
      return std::sin(2.0 * std::numbers::pi * u);
    case WaveformKind::Square:
      return u < 0.5 ? 1.0 : -1.0;
    case WaveformKind::Triangle:
      if (u < 0.25) return 4.0 * u;
      if (u < 0.75) return 2.0 - 4.0 * u;
      return 4.0 * u - 4.0;
    case WaveformKind::Sawtooth:
      return 2.0 * u - 1.0;
  }
  return 0.0;
}

void normalize_power(IQFrame<double>& frame) {
  const double power = average_power(frame);
  if (!(power > 0.0) || !std::isfinite(power)) {
    throw std::invalid_argument("frame has zero or non-finite power and cannot be normalized");
  }
  frame /= std::sqrt(power);
}

std::uint64_t gray(std::uint64_t k) { return k ^ (k >> 1); }

// Square QAM with m levels per axis. Axis level index k maps to amplitude
// (m - 1) - 2k and carries Gray label gray(k); I takes the high bits.
std::vector<std::complex<double>> square_qam(int bits_per_axis) {
  const std::uint64_t m = 1ULL << bits_per_axis;
  std::vector<double> level_of_label(m);
  for (std::uint64_t k = 0; k < m; ++k) {
    level_of_label[gray(k)] = static_cast<double>(m - 1) - 2.0 * static_cast<double>(k);
  }
  std::vector<std::complex<double>> points(m * m);
  double power = 0.0;
  for (std::uint64_t hi = 0; hi < m; ++hi) {
    for (std::uint64_t lo = 0; lo < m; ++lo) {
      const std::complex<double> p(level_of_label[hi], level_of_label[lo]);
      points[(hi << bits_per_axis) | lo] = p;
      power += std::norm(p);
    }
  }
  const double scale = 1.0 / std::sqrt(power / static_cast<double>(points.size()));
  for (auto& p : points) p *= scale;
  return points;
}

}  // namespace

Vector<double> sample_waveform(WaveformKind kind, double n_periods, std::size_t length,
                               double phase) {
  if (length == 0) throw std::invalid_argument("waveform length must be positive");
  if (!std::isfinite(phase)) throw std::invalid_argument("phase must be finite");
  if (!std::isfinite(n_periods) || n_periods <= 0.0) {
    throw std::invalid_argument("n_periods must be positive and finite");
  }
  Vector<double> row(static_cast<Eigen::Index>(length));
  const double phase_cycles = phase / (2.0 * std::numbers::pi);
  for (std::size_t t = 0; t < length; ++t) {
    const double pos = n_periods * static_cast<double>(t) / static_cast<double>(length);
    row[static_cast<Eigen::Index>(t)] = waveform_value(kind, pos + phase_cycles);
  }
  return row;
}

CleanFrame gen_periodic(WaveformKind kind, double n_periods, std::size_t length, double phase,
                        std::uint64_t seed) {
  if (length < 8) throw std::invalid_argument("periodic frame length must be at least 8");
  if (!std::isfinite(phase)) throw std::invalid_argument("phase must be finite");
  if (!std::isfinite(n_periods) || n_periods < 1.0) {
    throw std::invalid_argument("n_periods must be finite and at least 1");
  }
  const Vector<double> i_row = sample_waveform(kind, n_periods, length, phase);
  const auto n = static_cast<Eigen::Index>(length);
  const auto delay = static_cast<Eigen::Index>(
      std::llround(static_cast<double>(length) / (4.0 * n_periods)) % static_cast<long long>(n));

  IQFrame<double> frame(2, n);
  frame.row(0) = i_row.transpose();
  for (Eigen::Index t = 0; t < n; ++t) {
    frame(1, t) = i_row[(t - delay + n) % n];
  }
  normalize_power(frame);
  return CleanFrame{std::move(frame), kind, seed};
}

CleanFrame random_periodic(std::size_t length, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto kind = kAllWaveforms[rng() % kAllWaveforms.size()];
  std::uniform_real_distribution<double> periods(5.0, 10.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double n_periods = periods(rng);
  const double ph = phase(rng);
  return gen_periodic(kind, n_periods, length, ph, seed);
}

std::vector<std::complex<double>> constellation(ModulationScheme scheme) {
  switch (scheme) {
    case ModulationScheme::BPSK:
      return {{1.0, 0.0}, {-1.0, 0.0}};
    case ModulationScheme::QPSK:
      return square_qam(1);
    case ModulationScheme::PSK8: {
      std::vector<std::complex<double>> points(8);
      for (std::uint64_t k = 0; k < 8; ++k) {
        points[gray(k)] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) / 8.0);
      }
      return points;
    }
    case ModulationScheme::QAM16:
      return square_qam(2);
    case ModulationScheme::QAM64:
      return square_qam(3);
  }
  return {};
}

std::vector<std::complex<double>> bits_to_symbols(ModulationScheme scheme,
                                                  std::span<const std::uint8_t> bits) {
  const auto k = static_cast<std::size_t>(bits_per_symbol(scheme));
  if (bits.size() % k != 0) {
    throw std::invalid_argument("bit count " + std::to_string(bits.size()) +
                                " is not a multiple of " + std::to_string(k));
  }
  const auto points = constellation(scheme);
  std::vector<std::complex<double>> symbols;
  symbols.reserve(bits.size() / k);
  for (std::size_t s = 0; s < bits.size(); s += k) {
    std::size_t group = 0;
    for (std::size_t b = 0; b < k; ++b) {
      if (bits[s + b] > 1) throw std::invalid_argument("bits must be 0 or 1");
      group = (group << 1) | bits[s + b];
    }
    symbols.push_back(points[group]);
  }
  return symbols;
}

CleanFrame modulate_bits(ModulationScheme scheme, std::span<const std::uint8_t> bits,
                         std::size_t sps, std::uint64_t seed) {
  if (sps == 0) throw std::invalid_argument("samples per symbol must be at least 1");
  const auto symbols = bits_to_symbols(scheme, bits);
  if (symbols.empty()) throw std::invalid_argument("no symbols to modulate");
  IQFrame<double> frame(2, static_cast<Eigen::Index>(symbols.size() * sps));
  for (std::size_t s = 0; s < symbols.size(); ++s) {
    for (std::size_t k = 0; k < sps; ++k) {
      const auto t = static_cast<Eigen::Index>(s * sps + k);
      frame(0, t) = symbols[s].real();
      frame(1, t) = symbols[s].imag();
    }
  }
  normalize_power(frame);
  return CleanFrame{std::move(frame), scheme, seed};
}

CleanFrame synthesize_mod_frame(ModulationScheme scheme, std::size_t length, std::size_t sps,
                                std::uint64_t seed) {
  if (sps == 0) throw std::invalid_argument("samples per symbol must be at least 1");
  if (length == 0 || length % sps != 0) {
    throw std::invalid_argument("length " + std::to_string(length) +
                                " is not a positive multiple of sps " + std::to_string(sps));
  }
  const std::size_t n_bits = (length / sps) * static_cast<std::size_t>(bits_per_symbol(scheme));
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> bits(n_bits);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < n_bits; ++i) {
    if (i % 64 == 0) word = rng();
    bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1U);
  }
  return modulate_bits(scheme, bits, sps, seed);
}

}  // namespace tnr
