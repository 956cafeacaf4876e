#pragma once

#include "tnr/channel.hpp"
#include "tnr/common.hpp"
#include "tnr/signal_synthesis.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tnr {

enum class Domain : std::uint8_t { Periodic = 0, Modulation = 1 };

// One stored training/evaluation example in training precision.
struct LabeledExample {
  IQFrame<float> clean;
  IQFrame<float> noisy;
  std::uint8_t label = 0;
  std::uint64_t seed = 0;
  Vector<float> snr_db;  // per-sample trajectory

  double mean_snr() const { return snr_db.template cast<double>().mean(); }
  friend bool operator==(const LabeledExample& a, const LabeledExample& b);
};

struct Dataset {
  Domain domain = Domain::Modulation;
  std::size_t length = 0;
  std::vector<LabeledExample> examples;

  std::size_t size() const noexcept { return examples.size(); }
  bool empty() const noexcept { return examples.empty(); }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

LabeledExample make_example(const CleanFrame& clean, const NoisyFrame& noisy);

struct PeriodicDatasetOptions {
  std::size_t count = 10000;
  std::size_t length = 1280;
  double snr_min = -10.0;
  double snr_max = 18.0;
  std::size_t max_segments = 4;
  std::uint64_t seed = 1;
};

struct ModulationDatasetOptions {
  std::vector<ModulationScheme> schemes{kAllSchemes.begin(), kAllSchemes.end()};
  std::size_t count_per_scheme = 1000;
  std::size_t length = 1280;
  std::size_t sps = 8;
  double snr_min = -10.0;
  double snr_max = 18.0;
  std::size_t max_segments = 4;
  std::uint64_t seed = 1;
};

// Frame i draws everything from derive_seed(seed, i); the dataset is a pure
// function of its options.
Dataset make_periodic_dataset(const PeriodicDatasetOptions& options);
// Frames are ordered scheme-major; labels are the scheme indices.
Dataset make_modulation_dataset(const ModulationDatasetOptions& options);

// Appends b to a. Both must share domain and frame length.
void append(Dataset& a, const Dataset& b);

// TNRD container, little-endian:
//   "TNRD" | version u16 | domain u8 | count u32 | T u32 | flags u16
//   per frame: label u8 | seed u64 | snr f32 x T | clean I,Q f32 x 2T |
//              noisy I,Q f32 x 2T
inline constexpr std::uint16_t kDatasetVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 17;

std::size_t dataset_record_bytes(std::size_t length);
std::vector<std::uint8_t> encode_dataset(const Dataset& dataset);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace tnr
