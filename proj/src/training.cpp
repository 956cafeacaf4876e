#include "tnr/training.hpp"

#include "tnr/nn/adam.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <span>

namespace tnr::training {

using models::Index;
using nn::ParamStore;
using nn::Role;

void TrainConfig::validate() const {
  for (double lr : {lr_p, lr_nr, lr_mc_start, lr_mc_end}) {
    if (!(lr > 0.0) || !std::isfinite(lr)) {
      throw std::invalid_argument("learning rates must be positive and finite");
    }
  }
  if (lr_mc_end > lr_mc_start) throw std::invalid_argument("lr_mc_end must not exceed lr_mc_start");
  if (!(w_nr >= 0.0) || !(w_mc >= 0.0)) throw std::invalid_argument("loss weights must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("val_fraction must lie in [0, 1)");
  }
}

std::optional<std::size_t> StageReport::epochs_to_threshold(double threshold) const {
  for (std::size_t e = 0; e < val_loss.size(); ++e) {
    if (val_loss[e] <= threshold) return e;
  }
  return std::nullopt;
}

Split stratified_split(const Dataset& dataset, double val_fraction, std::uint64_t seed) {
  std::map<std::uint8_t, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    by_label[dataset.examples[i].label].push_back(i);
  }
  Split split;
  for (auto& [label, idx] : by_label) {
    std::mt19937_64 rng(derive_seed(seed, label));
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(idx.size())));
    if (n_val >= idx.size()) n_val = idx.size() - 1;
    split.validation.insert(split.validation.end(), idx.begin(), idx.begin() + static_cast<long>(n_val));
    split.train.insert(split.train.end(), idx.begin() + static_cast<long>(n_val), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

double lr_schedule(std::size_t epoch, std::size_t total_epochs, double lr_start, double lr_end) {
  if (total_epochs == 0 || epoch >= total_epochs) {
    throw std::invalid_argument("lr_schedule: epoch " + std::to_string(epoch) +
                                " outside [0, " + std::to_string(total_epochs) + ")");
  }
  if (total_epochs == 1) return lr_start;
  if (epoch + 1 == total_epochs) return lr_end;
  const double frac = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  return lr_start * std::pow(lr_end / lr_start, frac);
}

namespace {

// Loss evaluation for one batch of dataset indices.
struct BatchOutcome {
  double loss = 0.0;
  std::size_t correct = 0;
  ParamStore<float> grads;
};

using BatchFn = std::function<BatchOutcome(const ParamStore<float>&, std::span<const std::size_t>,
                                           bool with_grads)>;

Matrix<float> pack(const Dataset& ds, std::span<const std::size_t> idx, bool noisy) {
  return models::pack_batch<float>(idx, [&](std::size_t i) -> const IQFrame<float>& {
    return noisy ? ds.examples[i].noisy : ds.examples[i].clean;
  });
}

BatchFn denoiser_batches(const Dataset& ds) {
  return [&ds](const ParamStore<float>& params, std::span<const std::size_t> idx,
               bool with_grads) {
    const auto batch = static_cast<Index>(idx.size());
    auto loss = models::denoiser_loss(params, pack(ds, idx, true), pack(ds, idx, false),
                                      static_cast<Index>(ds.length), batch, with_grads);
    return BatchOutcome{loss.total, 0, std::move(loss.grads)};
  };
}

BatchFn classifier_batches(const Dataset& ds, std::size_t tap, double w_nr, double w_mc) {
  return [&ds, tap, w_nr, w_mc](const ParamStore<float>& params,
                                std::span<const std::size_t> idx, bool with_grads) {
    const auto batch = static_cast<Index>(idx.size());
    std::vector<std::uint8_t> labels;
    labels.reserve(idx.size());
    for (auto i : idx) labels.push_back(ds.examples[i].label);
    auto loss = models::joint_loss(params, tap, pack(ds, idx, true), pack(ds, idx, false), labels,
                                   static_cast<Index>(ds.length), batch, w_nr, w_mc, with_grads);
    std::size_t correct = 0;
    for (Index b = 0; b < batch; ++b) {
      Index k = 0;
      loss.output.col(b).maxCoeff(&k);
      if (static_cast<std::size_t>(k) == labels[static_cast<std::size_t>(b)]) ++correct;
    }
    return BatchOutcome{loss.total, correct, std::move(loss.grads)};
  };
}

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

Evaluation evaluate(const ParamStore<float>& params, const std::vector<std::size_t>& idx,
                    const BatchFn& fn, std::size_t batch_size) {
  double total = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < idx.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, idx.size() - start);
    const auto out = fn(params, std::span(idx).subspan(start, n), false);
    total += out.loss * static_cast<double>(n);
    correct += out.correct;
  }
  const auto count = static_cast<double>(idx.size());
  return {total / count, static_cast<double>(correct) / count};
}

struct StageSpec {
  std::size_t epochs = 0;
  std::function<double(std::size_t)> lr;
  std::uint64_t shuffle_seed = 0;
  bool classifier = false;
};

StageReport run_stage(ParamStore<float>& params, const Dataset& ds, const TrainConfig& cfg,
                      const StageSpec& spec, const BatchFn& fn, const EpochCallback& on_epoch) {
  if (ds.empty()) throw std::invalid_argument("training dataset is empty");
  const Split split = stratified_split(ds, cfg.val_fraction,
                                       derive_seed(cfg.seed, seed_stream::kSplit));
  const auto& val = split.validation.empty() ? split.train : split.validation;
  const std::size_t eval_batch = std::max<std::size_t>(cfg.batch_size, 64);

  StageReport report;
  report.initial_val_loss = evaluate(params, val, fn, eval_batch).loss;

  nn::Adam<float> adam(params);
  std::vector<std::size_t> order = split.train;
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    std::mt19937_64 rng(derive_seed(spec.shuffle_seed, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = spec.lr(epoch);
    double total = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      const auto out = fn(params, std::span(order).subspan(start, n), true);
      if (!std::isfinite(out.loss)) {
        throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch));
      }
      adam.step(params, out.grads, lr);
      total += out.loss * static_cast<double>(n);
      correct += out.correct;
    }
    const auto count = static_cast<double>(order.size());
    report.train_loss.push_back(total / count);
    const auto v = evaluate(params, val, fn, eval_batch);
    report.val_loss.push_back(v.loss);
    if (spec.classifier) {
      report.accuracy.push_back(static_cast<double>(correct) / count);
      report.val_accuracy.push_back(v.accuracy);
    }
    if (on_epoch) on_epoch(epoch, report);
  }
  return report;
}

void check_labels(const Dataset& ds, std::size_t n_classes) {
  for (const auto& ex : ds.examples) {
    if (ex.label >= n_classes) {
      throw std::invalid_argument("label " + std::to_string(ex.label) + " outside the " +
                                  std::to_string(n_classes) + " classifier classes");
    }
  }
}

StageResult train_denoiser(ParamStore<float> params, const Dataset& ds, const TrainConfig& cfg,
                           std::size_t epochs, double lr, std::uint64_t shuffle_stream,
                           const EpochCallback& on_epoch) {
  StageSpec spec{epochs, [lr](std::size_t) { return lr; },
                 derive_seed(cfg.seed, shuffle_stream), false};
  auto report = run_stage(params, ds, cfg, spec, denoiser_batches(ds), on_epoch);
  return {std::move(params), std::move(report)};
}

StageResult train_classifier(ParamStore<float> params, const Dataset& ds, const TrainConfig& cfg,
                             std::size_t tap, double w_nr, double w_mc,
                             const EpochCallback& on_epoch) {
  const std::size_t epochs = cfg.epochs_stage2;
  StageSpec spec{epochs,
                 [&cfg, epochs](std::size_t e) {
                   return lr_schedule(e, epochs, cfg.lr_mc_start, cfg.lr_mc_end);
                 },
                 derive_seed(cfg.seed, seed_stream::kShuffle + 3), true};
  auto report = run_stage(params, ds, cfg, spec, classifier_batches(ds, tap, w_nr, w_mc), on_epoch);
  return {std::move(params), std::move(report)};
}

}  // namespace

StageResult pretrain(const Dataset& periodic, const TrainConfig& cfg,
                     const models::DenoiserConfig& arch, const EpochCallback& on_epoch) {
  cfg.validate();
  if (periodic.empty()) throw std::invalid_argument("pretrain: empty dataset");
  auto params = models::build_denoiser<float>(
      arch, derive_seed(cfg.seed, seed_stream::kPretrainInit), Role::Pretrain);
  return train_denoiser(std::move(params), periodic, cfg, cfg.epochs_pretrain, cfg.lr_p,
                        seed_stream::kShuffle + 1, on_epoch);
}

StageResult transfer_stage1(const ParamStore<float>& pretrained, const Dataset& modulation,
                            const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (modulation.empty()) throw std::invalid_argument("transfer_stage1: empty dataset");
  models::detail::require_role(pretrained, {Role::Pretrain, Role::NoiseReduction},
                               "transfer_stage1");
  const auto arch = models::denoiser_config_of(pretrained);
  auto params = models::build_denoiser<float>(
      arch, derive_seed(cfg.seed, seed_stream::kDenoiserInit), Role::NoiseReduction);
  models::transfer_weights(pretrained, params, arch.gru_layers);
  return train_denoiser(std::move(params), modulation, cfg, cfg.epochs_stage1, cfg.lr_nr,
                        seed_stream::kShuffle + 2, on_epoch);
}

StageResult train_baseline_nr_scratch(const Dataset& modulation, const TrainConfig& cfg,
                                      const models::DenoiserConfig& arch,
                                      const EpochCallback& on_epoch) {
  cfg.validate();
  if (modulation.empty()) throw std::invalid_argument("train_baseline_nr_scratch: empty dataset");
  auto params = models::build_denoiser<float>(
      arch, derive_seed(cfg.seed, seed_stream::kDenoiserInit), Role::NoiseReduction);
  return train_denoiser(std::move(params), modulation, cfg, cfg.epochs_stage1, cfg.lr_nr,
                        seed_stream::kShuffle + 2, on_epoch);
}

StageResult transfer_stage2(const ParamStore<float>& denoiser, const Dataset& modulation,
                            const TrainConfig& cfg, const models::ClassifierConfig& arch,
                            const EpochCallback& on_epoch) {
  cfg.validate();
  arch.validate();
  if (modulation.empty()) throw std::invalid_argument("transfer_stage2: empty dataset");
  models::detail::require_role(denoiser, {Role::NoiseReduction, Role::Pretrain},
                               "transfer_stage2");
  check_labels(modulation, arch.n_classes);
  auto params =
      models::build_classifier<float>(arch, derive_seed(cfg.seed, seed_stream::kClassifierInit));
  models::transfer_weights(denoiser, params, arch.transferred_gru_layers);
  return train_classifier(std::move(params), modulation, cfg, arch.reconstruction_tap, cfg.w_nr,
                          cfg.w_mc, on_epoch);
}

StageResult train_baseline_amc(const Dataset& modulation, const TrainConfig& cfg,
                               const models::ClassifierConfig& arch,
                               const EpochCallback& on_epoch) {
  cfg.validate();
  arch.validate();
  if (modulation.empty()) throw std::invalid_argument("train_baseline_amc: empty dataset");
  check_labels(modulation, arch.n_classes);
  auto params =
      models::build_classifier<float>(arch, derive_seed(cfg.seed, seed_stream::kClassifierInit));
  return train_classifier(std::move(params), modulation, cfg, arch.reconstruction_tap, 0.0, 1.0,
                          on_epoch);
}

void write_report_csv(const StageReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.precision(9);
  out << "epoch,train_loss,val_loss,accuracy\n";
  for (std::size_t e = 0; e < report.epochs(); ++e) {
    out << e << ',' << report.train_loss[e] << ',' << report.val_loss[e] << ',';
    if (e < report.accuracy.size()) out << report.accuracy[e];
    out << '\n';
  }
}

}  // namespace tnr::training
