#pragma once

#include "tnr/common.hpp"

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace tnr {

enum class WaveformKind : std::uint8_t { Sine = 0, Square = 1, Triangle = 2, Sawtooth = 3 };

enum class ModulationScheme : std::uint8_t { BPSK = 0, QPSK = 1, PSK8 = 2, QAM16 = 3, QAM64 = 4 };

inline constexpr std::array<WaveformKind, 4> kAllWaveforms = {
    WaveformKind::Sine, WaveformKind::Square, WaveformKind::Triangle, WaveformKind::Sawtooth};

inline constexpr std::array<ModulationScheme, 5> kAllSchemes = {
    ModulationScheme::BPSK, ModulationScheme::QPSK, ModulationScheme::PSK8,
    ModulationScheme::QAM16, ModulationScheme::QAM64};

int bits_per_symbol(ModulationScheme scheme) noexcept;
std::string_view to_string(ModulationScheme scheme) noexcept;
std::string_view to_string(WaveformKind kind) noexcept;
// Accepts the names returned by to_string ("BPSK", "8PSK", ...), case-insensitive.
ModulationScheme parse_scheme(std::string_view name);

using FrameLabel = std::variant<ModulationScheme, WaveformKind>;

std::uint8_t label_index(const FrameLabel& label) noexcept;

struct CleanFrame {
  IQFrame<double> frame;
  FrameLabel label;
  std::uint64_t seed = 0;
};

// One real waveform row, amplitude in [-1, 1], before any normalization:
// sample t sits at cycle position n_periods * t / length + phase / (2 pi).
// Square is +1 on the first half cycle; Sawtooth ramps from -1 up to +1.
Vector<double> sample_waveform(WaveformKind kind, double n_periods, std::size_t length,
                               double phase);

// Periodic training frame. The Q row is the I row circularly delayed by a
// quarter period, round(length / (4 n_periods)) samples, and the frame is
// scaled to unit average power.
CleanFrame gen_periodic(WaveformKind kind, double n_periods, std::size_t length, double phase,
                        std::uint64_t seed = 0);

// Draws kind, n_periods ~ U[5, 10] and phase ~ U[0, 2 pi) from seed.
CleanFrame random_periodic(std::size_t length, std::uint64_t seed);

// Unit-power Gray-coded constellation. Entry i is the point for the bit
// group whose big-endian value is i.
std::vector<std::complex<double>> constellation(ModulationScheme scheme);

std::vector<std::complex<double>> bits_to_symbols(ModulationScheme scheme,
                                                  std::span<const std::uint8_t> bits);

// Rectangular pulse: every symbol is held for sps samples. The frame is
// rescaled to unit average power.
CleanFrame modulate_bits(ModulationScheme scheme, std::span<const std::uint8_t> bits,
                         std::size_t sps, std::uint64_t seed = 0);

CleanFrame synthesize_mod_frame(ModulationScheme scheme, std::size_t length, std::size_t sps,
                                std::uint64_t seed);

}  // namespace tnr
