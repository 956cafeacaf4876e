#include "tnr/checkpoint.hpp"

#include "tnr/byte_io.hpp"
#include "tnr/dataset.hpp"

#include <limits>

namespace tnr {

std::vector<std::uint8_t> encode_checkpoint(const nn::ParamStore<float>& params) {
  if (!params.role()) throw InvalidState("cannot write a checkpoint without a role tag");
  io::ByteWriter w;
  w.put_tag("TNRW");
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(*params.role()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const auto& t : params) {
    if (t.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw std::invalid_argument("tensor name too long: " + t.name);
    }
    w.put<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
    w.put_bytes({reinterpret_cast<const std::uint8_t*>(t.name.data()), t.name.size()});
    w.put<std::uint8_t>(t.rank);
    for (auto d : t.shape()) w.put<std::uint32_t>(d);
    for (Eigen::Index i = 0; i < t.value.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.value.cols(); ++j) w.put<float>(t.value(i, j));
    }
  }
  return std::move(w.bytes());
}

nn::ParamStore<float> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  r.expect_tag("TNRW", "checkpoint");
  const std::size_t version_at = r.position();
  const auto version = r.get<std::uint16_t>("checkpoint version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), version_at);
  }
  const std::size_t role_at = r.position();
  const auto role = r.get<std::uint8_t>("role tag");
  if (role > 2) throw FormatError("unknown role tag " + std::to_string(role), role_at);
  const auto count = r.get<std::uint32_t>("tensor count");

  nn::ParamStore<float> params(static_cast<nn::Role>(role));
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = r.get<std::uint16_t>("name length");
    const auto name_bytes = r.get_bytes(name_len, "tensor name");
    std::string name(reinterpret_cast<const char*>(name_bytes.data()), name_bytes.size());
    const std::size_t rank_at = r.position();
    const auto rank = r.get<std::uint8_t>("rank");
    if (rank != 1 && rank != 2) {
      throw FormatError("tensor '" + name + "' has unsupported rank " + std::to_string(rank),
                        rank_at);
    }
    const auto rows = r.get<std::uint32_t>("dimension");
    const std::uint32_t cols = rank == 2 ? r.get<std::uint32_t>("dimension") : 1;
    if (r.remaining() / 4 < static_cast<std::size_t>(rows) * cols) {
      throw FormatError("truncated payload for tensor '" + name + "'", r.position());
    }
    Matrix<float> value(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < cols; ++j) value(i, j) = r.get<float>("tensor payload");
    }
    try {
      params.add(std::move(name), std::move(value), rank);
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what(), r.position());
    }
  }
  if (r.remaining() != 0) {
    throw FormatError("trailing bytes after the last tensor", r.position());
  }
  return params;
}

void write_checkpoint(const nn::ParamStore<float>& params, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(params));
}

nn::ParamStore<float> read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace tnr
