#include "tnr/manifest.hpp"

#include "tnr/dataset.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace tnr::io {

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FileDigest parse_digest(const std::string& value) {
  const auto space = value.find(' ');
  if (space == std::string::npos) throw std::invalid_argument("malformed digest entry: " + value);
  return {value.substr(space + 1), value.substr(0, space)};
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || trim(line.substr(0, eq)).empty()) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected key=value");
    }
    out.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

KeyValues read_key_value_file(const std::filesystem::path& path) {
  return parse_key_values(read_text(path));
}

std::string RunManifest::serialize() const {
  std::ostringstream out;
  out << "tool_version=" << tool_version << '\n';
  out << "command=" << command << '\n';
  for (const auto& [k, v] : parameters) out << "param." << k << '=' << v << '\n';
  for (const auto& d : inputs) out << "input=" << d.sha256 << ' ' << d.path.string() << '\n';
  for (const auto& d : outputs) out << "output=" << d.sha256 << ' ' << d.path.string() << '\n';
  return out.str();
}

RunManifest RunManifest::parse(std::string_view text) {
  RunManifest m;
  m.tool_version.clear();
  for (auto& [k, v] : parse_key_values(text)) {
    if (k == "tool_version") {
      m.tool_version = v;
    } else if (k == "command") {
      m.command = v;
    } else if (k.starts_with("param.")) {
      m.parameters.emplace_back(k.substr(6), v);
    } else if (k == "input") {
      m.inputs.push_back(parse_digest(v));
    } else if (k == "output") {
      m.outputs.push_back(parse_digest(v));
    } else {
      throw std::invalid_argument("unknown manifest key '" + k + "'");
    }
  }
  if (m.command.empty()) throw std::invalid_argument("manifest has no command");
  return m;
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << serialize();
}

RunManifest RunManifest::read(const std::filesystem::path& path) { return parse(read_text(path)); }

std::filesystem::path manifest_path_for(const std::filesystem::path& artifact) {
  auto p = artifact;
  p += ".manifest";
  return p;
}

}  // namespace tnr::io
