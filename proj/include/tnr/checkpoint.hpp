#pragma once

#include "tnr/nn/param_store.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace tnr {

// TNRW checkpoint, little-endian:
//   "TNRW" | version u16 | role u8 | count u32
//   per tensor: name length u16 | UTF-8 name | rank u8 | dims u32 x rank |
//               f32 payload in row-major order
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const nn::ParamStore<float>& params);
nn::ParamStore<float> decode_checkpoint(std::span<const std::uint8_t> bytes);

void write_checkpoint(const nn::ParamStore<float>& params, const std::filesystem::path& path);
nn::ParamStore<float> read_checkpoint(const std::filesystem::path& path);

}  // namespace tnr
