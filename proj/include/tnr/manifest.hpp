#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tnr::io {

inline constexpr std::string_view kToolVersion = "0.1.0";

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_file(const std::filesystem::path& path);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Plain-text key=value lines. Blank lines and lines starting with '#' are
// skipped; whitespace around keys and values is trimmed.
KeyValues parse_key_values(std::string_view text);
KeyValues read_key_value_file(const std::filesystem::path& path);

struct FileDigest {
  std::filesystem::path path;
  std::string sha256;
};

// Everything needed to re-run one CLI command: its resolved parameters and
// the digests of the files it read and wrote.
struct RunManifest {
  std::string tool_version{kToolVersion};
  std::string command;
  KeyValues parameters;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;

  std::string serialize() const;
  static RunManifest parse(std::string_view text);

  void write(const std::filesystem::path& path) const;
  static RunManifest read(const std::filesystem::path& path);
};

// "<artifact>.manifest" next to the artifact.
std::filesystem::path manifest_path_for(const std::filesystem::path& artifact);

}  // namespace tnr::io
