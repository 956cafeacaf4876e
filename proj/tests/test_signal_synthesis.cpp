#include "tnr/signal_synthesis.hpp"

#include <doctest.h>

#include <bit>
#include <cmath>
#include <numbers>
#include <set>

using namespace tnr;

namespace {

// Upward zero crossings, counted circularly so a ramp that restarts at the
// frame edge is not missed.
int upward_resets(const Vector<double>& row) {
  int count = 0;
  const auto n = row.size();
  for (Eigen::Index t = 0; t < n; ++t) {
    if (row[(t + 1) % n] < row[t] - 1.0) ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("sine and square at quarter-cycle sample points") {
  const auto sine = sample_waveform(WaveformKind::Sine, 1, 4, 0.0);
  CHECK(sine[0] == doctest::Approx(0.0));
  CHECK(sine[1] == doctest::Approx(1.0));
  CHECK(sine[2] == doctest::Approx(0.0));
  CHECK(sine[3] == doctest::Approx(-1.0));

  const auto square = sample_waveform(WaveformKind::Square, 1, 4, 0.0);
  CHECK(square[0] == 1.0);
  CHECK(square[1] == 1.0);
  CHECK(square[2] == -1.0);
  CHECK(square[3] == -1.0);
}

TEST_CASE("sawtooth shows exactly one ramp per period") {
  const auto f = gen_periodic(WaveformKind::Sawtooth, 5, 1280, 0.0);
  // A falling edge bigger than one unit of unit-power amplitude marks a ramp reset.
  const Vector<double> i_row = f.frame.row(0).transpose();
  CHECK(upward_resets(i_row) == 5);
  const auto raw = sample_waveform(WaveformKind::Sawtooth, 5, 1280, 0.0);
  CHECK(upward_resets(raw) == 5);
}

TEST_CASE("gen_periodic: Q is a quarter-period delay and power is one") {
  for (auto kind : kAllWaveforms) {
    for (double n : {5.0, 7.0, 10.0}) {
      const std::size_t T = 1280;
      const auto f = gen_periodic(kind, n, T, 0.7);
      CHECK(average_power(f.frame) == doctest::Approx(1.0).epsilon(1e-9));
      const auto d = static_cast<Eigen::Index>(std::llround(T / (4.0 * n)));
      for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(T); ++t) {
        const auto src = (t - d + static_cast<Eigen::Index>(T)) % static_cast<Eigen::Index>(T);
        REQUIRE(f.frame(1, t) == f.frame(0, src));
      }
    }
  }
}

TEST_CASE("gen_periodic argument checks") {
  CHECK_THROWS_AS(gen_periodic(WaveformKind::Sine, 1, 7, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gen_periodic(WaveformKind::Sine, 1, 64, NAN), std::invalid_argument);
  CHECK_THROWS_AS(gen_periodic(WaveformKind::Sine, 0.5, 64, 0.0), std::invalid_argument);
}

TEST_CASE("random periodic frames are unit power and reproducible") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto a = random_periodic(256, s);
    CHECK(average_power(a.frame) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(a.frame == random_periodic(256, s).frame);
  }
  CHECK(random_periodic(256, 1).frame != random_periodic(256, 2).frame);
}

TEST_CASE("constellations: unit power, distinct points, size matches bits") {
  for (auto s : kAllSchemes) {
    const auto pts = constellation(s);
    CHECK(pts.size() == (std::size_t{1} << bits_per_symbol(s)));
    double power = 0.0;
    for (auto p : pts) power += std::norm(p);
    CHECK(std::abs(power / static_cast<double>(pts.size()) - 1.0) < 1e-12);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) CHECK(std::abs(pts[i] - pts[j]) > 1e-6);
    }
  }
}

TEST_CASE("QAM16 scale matches the brute-force power of the {+-1,+-3} grid") {
  double sum = 0.0;
  for (int a : {-3, -1, 1, 3}) {
    for (int b : {-3, -1, 1, 3}) sum += a * a + b * b;
  }
  CHECK(sum / 16.0 == 10.0);
  const auto pts = constellation(ModulationScheme::QAM16);
  double min_abs_re = 1e9;
  for (auto p : pts) min_abs_re = std::min(min_abs_re, std::abs(p.real()));
  CHECK(min_abs_re == doctest::Approx(1.0 / std::sqrt(10.0)).epsilon(1e-12));
}

TEST_CASE("Gray labels: neighbouring points differ in one bit") {
  for (auto s : {ModulationScheme::QAM16, ModulationScheme::QAM64, ModulationScheme::PSK8}) {
    const auto pts = constellation(s);
    double dmin = 1e9;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) dmin = std::min(dmin, std::abs(pts[i] - pts[j]));
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        if (std::abs(pts[i] - pts[j]) < dmin * 1.0001) CHECK(std::popcount(i ^ j) == 1);
      }
    }
  }
}

TEST_CASE("bits_to_symbols mappings") {
  const std::uint8_t b01[] = {0, 1};
  const auto bpsk = bits_to_symbols(ModulationScheme::BPSK, b01);
  REQUIRE(bpsk.size() == 2);
  CHECK(bpsk[0] == std::complex<double>(1, 0));
  CHECK(bpsk[1] == std::complex<double>(-1, 0));

  const std::uint8_t b00[] = {0, 0};
  const auto q = bits_to_symbols(ModulationScheme::QPSK, b00);
  REQUIRE(q.size() == 1);
  CHECK(q[0].real() == doctest::Approx(1 / std::numbers::sqrt2));
  CHECK(q[0].imag() == doctest::Approx(1 / std::numbers::sqrt2));

  std::vector<std::uint8_t> all;
  for (int v = 0; v < 16; ++v) {
    for (int k = 3; k >= 0; --k) all.push_back(static_cast<std::uint8_t>((v >> k) & 1));
  }
  const auto qam = bits_to_symbols(ModulationScheme::QAM16, all);
  std::set<std::pair<double, double>> distinct;
  double power = 0.0;
  for (auto p : qam) {
    distinct.emplace(p.real(), p.imag());
    power += std::norm(p);
  }
  CHECK(distinct.size() == 16);
  CHECK(power / 16.0 == doctest::Approx(1.0).epsilon(1e-12));

  const std::uint8_t three[] = {0, 1, 1};
  CHECK_THROWS_AS(bits_to_symbols(ModulationScheme::QPSK, three), std::invalid_argument);
  const std::uint8_t bad[] = {2};
  CHECK_THROWS_AS(bits_to_symbols(ModulationScheme::BPSK, bad), std::invalid_argument);
}

TEST_CASE("rectangular BPSK frame") {
  const std::uint8_t bits[] = {1, 0};
  const auto f = modulate_bits(ModulationScheme::BPSK, bits, 4);
  REQUIRE(f.frame.cols() == 8);
  for (int t = 0; t < 8; ++t) {
    CHECK(f.frame(0, t) == (t < 4 ? -1.0 : 1.0));
    CHECK(f.frame(1, t) == 0.0);
  }
}

TEST_CASE("modulation frames are piecewise constant per symbol and deterministic") {
  for (auto s : kAllSchemes) {
    const auto f = synthesize_mod_frame(s, 1280, 8, 42);
    CHECK(f.frame.cols() == 1280);
    CHECK(average_power(f.frame) == doctest::Approx(1.0).epsilon(1e-9));
    for (int sym = 0; sym < 160; ++sym) {
      for (int k = 1; k < 8; ++k) {
        REQUIRE(f.frame.col(sym * 8 + k) == f.frame.col(sym * 8));
      }
    }
    CHECK(f.frame == synthesize_mod_frame(s, 1280, 8, 42).frame);
    CHECK(std::get<ModulationScheme>(f.label) == s);
  }
  CHECK_THROWS_AS(synthesize_mod_frame(ModulationScheme::QPSK, 100, 8, 1), std::invalid_argument);
}

TEST_CASE("scheme names round trip") {
  for (auto s : kAllSchemes) CHECK(parse_scheme(to_string(s)) == s);
  CHECK(parse_scheme("qam16") == ModulationScheme::QAM16);
  CHECK_THROWS_AS(parse_scheme("OOK"), std::invalid_argument);
}
