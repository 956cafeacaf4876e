#include "tnr/checkpoint.hpp"
#include "tnr/dataset.hpp"
#include "tnr/manifest.hpp"
#include "tnr/models.hpp"

#include <doctest.h>

#include <filesystem>

using namespace tnr;
namespace fs = std::filesystem;

namespace {

Dataset three_frames() {
  ModulationDatasetOptions o;
  o.schemes = {ModulationScheme::QPSK, ModulationScheme::QAM16, ModulationScheme::BPSK};
  o.count_per_scheme = 1;
  o.length = 48;
  return make_modulation_dataset(o);
}

fs::path scratch(const std::string& name) { return fs::temp_directory_path() / ("tnr_ds_" + name); }

}  // namespace

TEST_CASE("dataset round trip is byte exact") {
  const auto ds = three_frames();
  const auto bytes = encode_dataset(ds);
  CHECK(bytes.size() == kDatasetHeaderBytes + 3 * dataset_record_bytes(48));
  const auto back = decode_dataset(bytes);
  CHECK(back == ds);
  CHECK(encode_dataset(back) == bytes);

  const auto path = scratch("rt.tnrd");
  write_dataset(ds, path);
  CHECK(read_dataset(path) == ds);
  CHECK(read_file(path) == bytes);
  fs::remove(path);
}

TEST_CASE("record layout arithmetic for the full periodic set") {
  CHECK(dataset_record_bytes(1280) == 1 + 8 + 4 * 1280 + 8 * 1280 + 8 * 1280);
  CHECK(kDatasetHeaderBytes + 10000 * dataset_record_bytes(1280) == 17 + 10000 * 25609);
}

TEST_CASE("dataset decoding errors") {
  const auto bytes = encode_dataset(three_frames());
  std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 4);
  try {
    decode_dataset(cut);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("truncat") != std::string::npos);
    CHECK(e.offset() <= cut.size());
  }
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_dataset(bad), FormatError);
  bad = bytes;
  bad[4] = 9;
  CHECK_THROWS_AS(decode_dataset(bad), FormatError);
  bad = bytes;
  bad.push_back(0);
  CHECK_THROWS_AS(decode_dataset(bad), FormatError);
  CHECK_THROWS_AS(read_dataset(scratch("missing.tnrd")), std::runtime_error);
}

TEST_CASE("datasets are pure functions of their options") {
  PeriodicDatasetOptions p;
  p.count = 20;
  p.length = 64;
  CHECK(encode_dataset(make_periodic_dataset(p)) == encode_dataset(make_periodic_dataset(p)));
  auto q = p;
  q.seed = 2;
  CHECK(!(make_periodic_dataset(p) == make_periodic_dataset(q)));
  const auto ds = make_periodic_dataset(p);
  for (const auto& ex : ds.examples) {
    CHECK(ex.snr_db.size() == 64);
    CHECK(ex.snr_db.minCoeff() >= -10.0f);
    CHECK(ex.snr_db.maxCoeff() <= 18.0f);
    CHECK(ex.label < 4);
  }
  ModulationDatasetOptions m;
  m.count_per_scheme = 3;
  m.length = 64;
  const auto md = make_modulation_dataset(m);
  CHECK(md.size() == 15);
  CHECK(md.examples[0].label == 0);
  CHECK(md.examples[14].label == 4);
}

TEST_CASE("checkpoint round trip keeps role and bits") {
  const auto cls = models::build_classifier<float>(models::ClassifierConfig{}, 3);
  const auto bytes = encode_checkpoint(cls);
  const auto back = decode_checkpoint(bytes);
  CHECK(back == cls);
  CHECK(back.role() == nn::Role::Classifier);
  CHECK(encode_checkpoint(back) == bytes);
  CHECK(bytes[0] == 'T');
  CHECK(bytes[3] == 'W');

  std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 4);
  CHECK_THROWS_AS(decode_checkpoint(cut), FormatError);
  auto bad = bytes;
  bad[6] = 7;  // role byte
  CHECK_THROWS_AS(decode_checkpoint(bad), FormatError);

  const auto path = scratch("w.tnrw");
  write_checkpoint(cls, path);
  CHECK(read_checkpoint(path) == cls);
  fs::remove(path);
}

TEST_CASE("sha256 known answers") {
  CHECK(io::sha256_hex({}) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const std::string abc = "abc";
  CHECK(io::sha256_hex({reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size()}) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("key=value parsing") {
  const auto kv = io::parse_key_values("# comment\n\n lr-p = 0.01 \nseed=3\n");
  REQUIRE(kv.size() == 2);
  CHECK(kv[0].first == "lr-p");
  CHECK(kv[0].second == "0.01");
  CHECK(kv[1].second == "3");
  CHECK_THROWS_WITH_AS(io::parse_key_values("a=1\nnonsense\n"), "line 2: expected key=value",
                       std::invalid_argument);
}

TEST_CASE("manifest serialization round trip") {
  io::RunManifest m;
  m.command = "finetune";
  m.parameters = {{"seed", "4"}, {"w-nr", "0.1"}};
  m.inputs = {{"data/mod.tnrd", std::string(64, 'a')}};
  m.outputs = {{"out dir/mc.tnrw", std::string(64, 'b')}};
  const auto back = io::RunManifest::parse(m.serialize());
  CHECK(back.command == m.command);
  CHECK(back.tool_version == io::kToolVersion);
  CHECK(back.parameters == m.parameters);
  REQUIRE(back.outputs.size() == 1);
  CHECK(back.outputs[0].path == m.outputs[0].path);
  CHECK(back.outputs[0].sha256 == m.outputs[0].sha256);
  CHECK(back.serialize() == m.serialize());
  CHECK_THROWS_AS(io::RunManifest::parse("tool_version=1\n"), std::invalid_argument);
  CHECK(io::manifest_path_for("x/y.tnrw") == fs::path("x/y.tnrw.manifest"));
}
