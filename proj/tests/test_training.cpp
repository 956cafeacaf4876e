#include "tnr/training.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace tnr;
using namespace tnr::training;

namespace {

Dataset small_modulation(std::size_t per_scheme, std::size_t length, std::uint64_t seed,
                         double snr_min = 0.0, double snr_max = 18.0) {
  ModulationDatasetOptions o;
  o.count_per_scheme = per_scheme;
  o.length = length;
  o.seed = seed;
  o.snr_min = snr_min;
  o.snr_max = snr_max;
  return make_modulation_dataset(o);
}

Dataset small_periodic(std::size_t count, std::size_t length, std::uint64_t seed) {
  PeriodicDatasetOptions o;
  o.count = count;
  o.length = length;
  o.seed = seed;
  return make_periodic_dataset(o);
}

// Constant-SNR periodic frames of the given kinds.
Dataset fixed_snr_periodic(std::vector<WaveformKind> kinds, std::size_t count, std::size_t length,
                           double snr) {
  Dataset ds{Domain::Periodic, length, {}};
  for (std::size_t i = 0; i < count; ++i) {
    const auto seed = derive_seed(77, i);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> periods(5.0, 10.0), phase(0.0, 6.283185307179586);
    const auto kind = kinds[i % kinds.size()];
    const auto clean = gen_periodic(kind, periods(rng), length, phase(rng), seed);
    const auto noisy = apply_channel(clean, ChannelCoefficient::identity(),
                                     SnrTrajectory::constant(length, snr), derive_seed(seed, 2));
    ds.examples.push_back(make_example(clean, noisy));
  }
  return ds;
}

TrainConfig quick(std::size_t epochs) {
  TrainConfig c;
  c.epochs_pretrain = c.epochs_stage1 = c.epochs_stage2 = epochs;
  c.batch_size = 8;
  return c;
}

models::ClassifierConfig small_classifier(std::size_t hidden) {
  models::ClassifierConfig c;
  c.hidden = hidden;
  c.head_hidden = hidden;
  c.dense_hidden = 2 * hidden;
  return c;
}

double mean_mse(const nn::ParamStore<float>& den, const Dataset& ds, bool denoised) {
  double total = 0.0;
  for (const auto& ex : ds.examples) {
    const IQFrame<float> out = denoised ? models::denoise(den, ex.noisy) : ex.noisy;
    total += (out - ex.clean).cast<double>().squaredNorm() / static_cast<double>(ex.clean.cols());
  }
  return total / static_cast<double>(ds.size());
}

}  // namespace

TEST_CASE("lr_schedule hits both endpoints and the geometric midpoint") {
  CHECK(lr_schedule(0, 600, 1e-3, 1e-5) == 1e-3);
  CHECK(lr_schedule(599, 600, 1e-3, 1e-5) == 1e-5);
  CHECK(lr_schedule(50, 101, 1e-3, 1e-5) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(lr_schedule(0, 1, 1e-3, 1e-5) == 1e-3);
  double prev = 1.0;
  for (std::size_t e = 0; e < 37; ++e) {
    const double lr = lr_schedule(e, 37, 1e-3, 1e-5);
    CHECK(lr <= prev);
    prev = lr;
  }
  CHECK_THROWS_AS(lr_schedule(600, 600, 1e-3, 1e-5), std::invalid_argument);
}

TEST_CASE("config validation") {
  TrainConfig c;
  c.lr_mc_end = 1e-2;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.lr_nr = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("stratified split keeps every class on both sides") {
  const auto ds = small_modulation(10, 16, 1);
  const auto s = stratified_split(ds, 0.2, 3);
  CHECK(s.train.size() == 40);
  CHECK(s.validation.size() == 10);
  std::vector<int> per(5, 0);
  for (auto i : s.validation) ++per[ds.examples[i].label];
  for (int n : per) CHECK(n == 2);
  const auto again = stratified_split(ds, 0.2, 3);
  CHECK(again.train == s.train);
}

TEST_CASE("every stage overfits a single frame") {
  const auto one_mod = small_modulation(1, 32, 4);
  Dataset single{Domain::Modulation, 32, {one_mod.examples.front()}};
  Dataset single_p = small_periodic(1, 32, 4);
  auto cfg = quick(200);
  cfg.lr_p = cfg.lr_nr = 1e-2;
  const models::DenoiserConfig arch{1, 8, 2, 2};

  const auto p = pretrain(single_p, cfg, arch);
  CHECK(p.report.train_loss.back() < p.report.initial_val_loss);
  for (double l : p.report.train_loss) CHECK(std::isfinite(l));

  const auto s1 = transfer_stage1(p.params, single, cfg);
  CHECK(s1.report.train_loss.back() < s1.report.initial_val_loss);

  auto cc = small_classifier(8);
  cc.transferred_gru_layers = 1;
  cc.reconstruction_tap = 1;
  cc.n_classes = 5;
  auto cfg2 = quick(60);
  const auto s2 = transfer_stage2(s1.params, single, cfg2, cc);
  CHECK(s2.report.train_loss.back() < s2.report.initial_val_loss);
  CHECK(s2.report.accuracy.size() == 60);
}

TEST_CASE("stages are deterministic") {
  const auto ds = small_modulation(4, 32, 2);
  const auto cfg = quick(2);
  const models::DenoiserConfig arch{2, 6, 2, 2};
  const auto a = train_baseline_nr_scratch(ds, cfg, arch);
  const auto b = train_baseline_nr_scratch(ds, cfg, arch);
  CHECK(a.params == b.params);
  CHECK(a.report.val_loss == b.report.val_loss);

  auto cc = small_classifier(6);
  cc.transferred_gru_layers = 2;
  cc.reconstruction_tap = 2;
  const auto c1 = transfer_stage2(a.params, ds, cfg, cc);
  const auto c2 = transfer_stage2(a.params, ds, cfg, cc);
  CHECK(c1.params == c2.params);
  const auto amc1 = train_baseline_amc(ds, cfg, cc);
  CHECK(amc1.params == train_baseline_amc(ds, cfg, cc).params);
}

TEST_CASE("a disconnected loss term leaves its exclusive parameters untouched") {
  const auto ds = small_modulation(4, 32, 3);
  auto cfg = quick(2);
  const models::DenoiserConfig arch{2, 6, 2, 2};
  const auto den = train_baseline_nr_scratch(ds, cfg, arch).params;
  auto cc = small_classifier(6);
  cc.transferred_gru_layers = 2;
  cc.reconstruction_tap = 2;

  cfg.w_nr = 0.0;
  cfg.w_mc = 1.0;
  const auto no_recon = transfer_stage2(den, ds, cfg, cc).params;
  CHECK(no_recon["recon.W"] == den["recon.W"]);
  CHECK(no_recon["recon.b"] == den["recon.b"]);
  CHECK(no_recon["fc2.W"] != models::build_classifier<float>(cc, derive_seed(cfg.seed, seed_stream::kClassifierInit))["fc2.W"]);

  cfg.w_nr = 1.0;
  cfg.w_mc = 0.0;
  const auto no_cls = transfer_stage2(den, ds, cfg, cc).params;
  const auto init = models::build_classifier<float>(cc, derive_seed(cfg.seed, seed_stream::kClassifierInit));
  for (const auto& t : init) {
    if (t.name.starts_with("cls_gru") || t.name.starts_with("fc")) {
      CHECK_MESSAGE(no_cls[t.name] == t.value, t.name);
    }
  }
  CHECK(no_cls["recon.W"] != den["recon.W"]);
}

TEST_CASE("domain and label checks") {
  const auto ds = small_modulation(2, 16, 1);
  CHECK_THROWS_AS(pretrain(Dataset{Domain::Periodic, 16, {}}, quick(1)), std::invalid_argument);
  auto cc = small_classifier(4);
  cc.n_classes = 3;
  CHECK_THROWS_AS(train_baseline_amc(ds, quick(1), cc), std::invalid_argument);
  const auto cls = models::build_classifier<float>(small_classifier(4), 1);
  CHECK_THROWS_AS(transfer_stage1(cls, ds, quick(1)), InvalidState);
}

TEST_CASE("toy denoiser beats its noisy input at 0 dB") {
  const auto train = fixed_snr_periodic({WaveformKind::Sine}, 200, 256, 0.0);
  auto cfg = quick(50);
  cfg.batch_size = 32;
  cfg.lr_p = 3e-3;
  const auto res = pretrain(train, cfg, models::DenoiserConfig{2, 16, 2, 2});
  const auto test = fixed_snr_periodic({WaveformKind::Sine}, 20, 256, 0.0);
  const double before = mean_mse(res.params, test, false);
  const double after = mean_mse(res.params, test, true);
  MESSAGE("noisy MSE " << before << ", denoised MSE " << after);
  CHECK(after < before);
}

TEST_CASE("report CSV layout") {
  StageReport r;
  r.train_loss = {1.0, 0.5};
  r.val_loss = {1.1, 0.6};
  r.accuracy = {0.2, 0.4};
  const auto path = std::filesystem::temp_directory_path() / "tnr_report_test.csv";
  write_report_csv(r, path);
  std::ifstream in(path);
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  CHECK(header == "epoch,train_loss,val_loss,accuracy");
  CHECK(line == "0,1,1.1,0.2");
  CHECK(r.epochs_to_threshold(0.7) == 1);
  CHECK(!r.epochs_to_threshold(0.1).has_value());
  std::filesystem::remove(path);
}
