#include "tnr/dataset.hpp"

#include "tnr/byte_io.hpp"

#include <fstream>
#include <iterator>
#include <numbers>
#include <random>

namespace tnr {

bool operator==(const LabeledExample& a, const LabeledExample& b) {
  auto same = [](const auto& x, const auto& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
  };
  return a.label == b.label && a.seed == b.seed && same(a.clean, b.clean) &&
         same(a.noisy, b.noisy) && same(a.snr_db, b.snr_db);
}

LabeledExample make_example(const CleanFrame& clean, const NoisyFrame& noisy) {
  LabeledExample ex;
  ex.clean = clean.frame.cast<float>();
  ex.noisy = noisy.frame.cast<float>();
  ex.label = label_index(clean.label);
  ex.seed = clean.seed;
  ex.snr_db = noisy.trajectory.snr_db.cast<float>();
  return ex;
}

namespace {

LabeledExample corrupt(const CleanFrame& clean, std::size_t length, double snr_min,
                       double snr_max, std::size_t max_segments, std::uint64_t frame_seed) {
  const auto traj = sample_trajectory(length, snr_min, snr_max, max_segments,
                                      derive_seed(frame_seed, 1));
  const auto noisy =
      apply_channel(clean, ChannelCoefficient::identity(), traj, derive_seed(frame_seed, 2));
  return make_example(clean, noisy);
}

}  // namespace

Dataset make_periodic_dataset(const PeriodicDatasetOptions& o) {
  Dataset ds{Domain::Periodic, o.length, {}};
  ds.examples.reserve(o.count);
  for (std::size_t i = 0; i < o.count; ++i) {
    const std::uint64_t s = derive_seed(o.seed, i);
    const CleanFrame clean = random_periodic(o.length, s);
    ds.examples.push_back(corrupt(clean, o.length, o.snr_min, o.snr_max, o.max_segments, s));
  }
  return ds;
}

Dataset make_modulation_dataset(const ModulationDatasetOptions& o) {
  if (o.schemes.empty()) throw std::invalid_argument("no modulation schemes selected");
  Dataset ds{Domain::Modulation, o.length, {}};
  ds.examples.reserve(o.schemes.size() * o.count_per_scheme);
  std::size_t index = 0;
  for (const auto scheme : o.schemes) {
    for (std::size_t i = 0; i < o.count_per_scheme; ++i, ++index) {
      const std::uint64_t s = derive_seed(o.seed, index);
      const CleanFrame clean = synthesize_mod_frame(scheme, o.length, o.sps, s);
      ds.examples.push_back(corrupt(clean, o.length, o.snr_min, o.snr_max, o.max_segments, s));
    }
  }
  return ds;
}

void append(Dataset& a, const Dataset& b) {
  if (a.empty() && a.length == 0) {
    a.domain = b.domain;
    a.length = b.length;
  }
  if (a.domain != b.domain || a.length != b.length) {
    throw std::invalid_argument("cannot append datasets of different domain or frame length");
  }
  a.examples.insert(a.examples.end(), b.examples.begin(), b.examples.end());
}

std::size_t dataset_record_bytes(std::size_t length) { return 1 + 8 + 4 * length + 16 * length; }

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
  io::ByteWriter w;
  w.put_tag("TNRD");
  w.put<std::uint16_t>(kDatasetVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(ds.domain));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.size()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.length));
  w.put<std::uint16_t>(0);
  w.bytes().reserve(kDatasetHeaderBytes + ds.size() * dataset_record_bytes(ds.length));
  const auto T = static_cast<Eigen::Index>(ds.length);
  for (const auto& ex : ds.examples) {
    if (ex.clean.cols() != T || ex.noisy.cols() != T || ex.snr_db.size() != T) {
      throw std::invalid_argument("dataset example does not match the dataset frame length");
    }
    w.put<std::uint8_t>(ex.label);
    w.put<std::uint64_t>(ex.seed);
    for (Eigen::Index t = 0; t < T; ++t) w.put<float>(ex.snr_db[t]);
    for (const auto* frame : {&ex.clean, &ex.noisy}) {
      for (Eigen::Index row = 0; row < 2; ++row) {
        for (Eigen::Index t = 0; t < T; ++t) w.put<float>((*frame)(row, t));
      }
    }
  }
  return std::move(w.bytes());
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  r.expect_tag("TNRD", "dataset");
  const std::size_t version_at = r.position();
  const auto version = r.get<std::uint16_t>("dataset version");
  if (version != kDatasetVersion) {
    throw FormatError("unsupported dataset version " + std::to_string(version), version_at);
  }
  const std::size_t domain_at = r.position();
  const auto domain = r.get<std::uint8_t>("dataset domain");
  if (domain > 1) throw FormatError("unknown dataset domain tag", domain_at);
  const auto count = r.get<std::uint32_t>("frame count");
  const auto length = r.get<std::uint32_t>("frame length");
  r.get<std::uint16_t>("flags");

  Dataset ds{static_cast<Domain>(domain), length, {}};
  const std::size_t expected = static_cast<std::size_t>(count) * dataset_record_bytes(length);
  if (r.remaining() < expected) {
    throw FormatError("truncated dataset: header announces " + std::to_string(count) +
                          " frames but only " + std::to_string(r.remaining()) +
                          " payload bytes remain",
                      bytes.size());
  }
  if (r.remaining() > expected) {
    throw FormatError("trailing bytes after the last dataset record",
                      r.position() + expected);
  }
  const auto T = static_cast<Eigen::Index>(length);
  ds.examples.resize(count);
  for (auto& ex : ds.examples) {
    ex.label = r.get<std::uint8_t>("label");
    ex.seed = r.get<std::uint64_t>("seed");
    ex.snr_db.resize(T);
    for (Eigen::Index t = 0; t < T; ++t) ex.snr_db[t] = r.get<float>("trajectory");
    for (auto* frame : {&ex.clean, &ex.noisy}) {
      frame->resize(2, T);
      for (Eigen::Index row = 0; row < 2; ++row) {
        for (Eigen::Index t = 0; t < T; ++t) (*frame)(row, t) = r.get<float>("frame sample");
      }
    }
  }
  return ds;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  write_file(path, encode_dataset(dataset));
}

Dataset read_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

}  // namespace tnr
