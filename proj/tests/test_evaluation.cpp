#include "tnr/evaluation.hpp"
#include "tnr/models.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>

using namespace tnr;
using namespace tnr::eval;

namespace {

Dataset testset(std::size_t per_scheme, std::uint64_t seed) {
  ModulationDatasetOptions o;
  o.count_per_scheme = per_scheme;
  o.length = 64;
  o.seed = seed;
  return make_modulation_dataset(o);
}

Predictor oracle() {
  return [](std::span<const LabeledExample> items) {
    std::vector<std::size_t> out;
    for (const auto& ex : items) out.push_back(ex.label);
    return out;
  };
}

Predictor constant(std::size_t k) {
  return [k](std::span<const LabeledExample> items) {
    return std::vector<std::size_t>(items.size(), k);
  };
}

// Predicts from a hash of the seed; deterministic and not order dependent.
Predictor scrambled() {
  return [](std::span<const LabeledExample> items) {
    std::vector<std::size_t> out;
    for (const auto& ex : items) out.push_back(static_cast<std::size_t>(mix_seed(ex.seed) % 5));
    return out;
  };
}

}  // namespace

TEST_CASE("default bins cover -10..18 in 2 dB steps") {
  const auto bins = default_bins();
  REQUIRE(bins.size() == 15);
  CHECK(bins.front().center == -10.0);
  CHECK(bins.back().center == 18.0);
  for (std::size_t i = 1; i < bins.size(); ++i) {
    CHECK(bins[i].center - bins[i].half_width == bins[i - 1].center + bins[i - 1].half_width);
  }
}

TEST_CASE("every example lands in at most one bin") {
  const auto ds = testset(40, 1);
  const auto bins = assign_bins(ds.examples, default_bins());
  std::vector<int> hits(ds.size(), 0);
  for (const auto& b : bins) {
    for (auto i : b.examples) ++hits[i];
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double s = ds.examples[i].mean_snr();
    CHECK(hits[i] == (s >= -11.0 && s < 19.0 ? 1 : 0));
  }
}

TEST_CASE("oracle and constant models") {
  const auto ds = testset(40, 2);
  for (const auto& p : accuracy_vs_snr(oracle(), ds.examples)) CHECK(p.accuracy == 1.0);
  const auto curve = accuracy_vs_snr(constant(0), ds.examples);
  std::size_t n = 0, correct = 0;
  for (const auto& p : curve) {
    CHECK(p.n > 0);
    n += p.n;
    correct += static_cast<std::size_t>(std::llround(p.accuracy * static_cast<double>(p.n)));
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(n) == doctest::Approx(0.2).epsilon(0.01));
  CHECK_THROWS_AS(accuracy_vs_snr(oracle(), std::span<const LabeledExample>{}), std::invalid_argument);
}

TEST_CASE("accuracy curve is invariant to testset order") {
  const auto ds = testset(20, 3);
  auto shuffled = ds.examples;
  std::mt19937_64 rng(1);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto a = accuracy_vs_snr(scrambled(), ds.examples);
  const auto b = accuracy_vs_snr(scrambled(), shuffled);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].accuracy == b[i].accuracy);
    CHECK(a[i].n == b[i].n);
  }
}

TEST_CASE("confusion matrix accounting") {
  const auto ds = testset(60, 4);
  const auto perfect = confusion(oracle(), ds.examples, 4.0, 14.0, 5);
  CHECK(perfect.correct() == perfect.total());
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) {
      if (i != j) CHECK(perfect.counts(i, j) == 0);
    }
  }

  const auto cm = confusion(scrambled(), ds.examples, -8.0, 1.0, 5);
  std::vector<LabeledExample> band;
  for (const auto& ex : ds.examples) {
    if (ex.mean_snr() >= -9.0 && ex.mean_snr() < -7.0) band.push_back(ex);
  }
  REQUIRE(!band.empty());
  CHECK(cm.total() == band.size());
  for (Eigen::Index k = 0; k < 5; ++k) {
    const auto want = std::count_if(band.begin(), band.end(),
                                    [k](const LabeledExample& e) { return e.label == k; });
    CHECK(cm.counts.row(k).sum() == static_cast<std::size_t>(want));
  }
  CHECK(cm.accuracy() == per_example_accuracy(scrambled(), band));
  CHECK_THROWS_AS(confusion(oracle(), ds.examples, 100.0, 1.0, 5), std::invalid_argument);
}

TEST_CASE("snr gain") {
  const auto ds = testset(10, 5);
  CHECK(snr_gain(identity_denoiser(), ds.examples) == 0.0);

  Denoiser perfect = [](std::span<const LabeledExample> items) {
    std::vector<IQFrame<float>> out;
    for (const auto& ex : items) out.push_back(ex.clean);
    return out;
  };
  double want = 0.0;
  for (const auto& ex : ds.examples) want += kSnrCap - std::min(kSnrCap, empirical_snr(ex.clean, ex.noisy));
  CHECK(snr_gain(perfect, ds.examples) == doctest::Approx(want / static_cast<double>(ds.size())));
  CHECK_THROWS_AS(snr_gain(perfect, std::span<const LabeledExample>{}), std::invalid_argument);
}

TEST_CASE("network predictors agree with single-frame inference") {
  const auto ds = testset(4, 6);
  models::ClassifierConfig cc;
  cc.hidden = 8;
  cc.head_hidden = 8;
  cc.dense_hidden = 8;
  const auto params = models::build_classifier<float>(cc, 3);
  const auto batched = classifier_predictor(params, 3, 7)(ds.examples);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(batched[i] == models::classify(params, ds.examples[i].noisy).predicted_class);
  }
  const auto den = models::build_denoiser<float>(models::DenoiserConfig{2, 4, 2, 2}, 1);
  const auto frames = network_denoiser(den, 3, 3)(ds.examples);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK((frames[i] - models::denoise(den, ds.examples[i].noisy)).cwiseAbs().maxCoeff() < 1e-5f);
  }
  CHECK_THROWS_AS(classifier_predictor(den), InvalidState);
}

TEST_CASE("CSV writers") {
  const auto dir = std::filesystem::temp_directory_path() / "tnr_eval_test";
  std::filesystem::create_directories(dir);
  write_accuracy_csv({{-10.0, 0.5, 4}}, dir / "a.csv");
  ConfusionMatrix cm;
  cm.counts = Eigen::Matrix<std::size_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(5, 5);
  cm.counts(1, 2) = 3;
  write_confusion_csv(cm, modulation_class_names(), dir / "c.csv");
  std::ifstream a(dir / "a.csv"), c(dir / "c.csv");
  std::string line;
  std::getline(a, line);
  CHECK(line == "snr_db,accuracy,n");
  std::getline(a, line);
  CHECK(line == "-10,0.5,4");
  std::getline(c, line);
  CHECK(line == "true\\predicted,BPSK,QPSK,8PSK,16QAM,64QAM");
  std::getline(c, line);
  std::getline(c, line);
  CHECK(line == "QPSK,0,0,3,0,0");
  CHECK_THROWS_AS(write_confusion_csv(cm, {"a"}, dir / "x.csv"), std::invalid_argument);
  std::filesystem::remove_all(dir);
}
