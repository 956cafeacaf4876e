#pragma once

#include "tnr/dataset.hpp"
#include "tnr/models.hpp"
#include "tnr/nn/param_store.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace tnr::training {

struct TrainConfig {
  double lr_p = 1e-3;
  double lr_nr = 1e-3;
  double lr_mc_start = 1e-3;
  double lr_mc_end = 1e-5;
  double w_nr = 0.1;
  double w_mc = 0.9;
  std::size_t epochs_pretrain = 60;
  std::size_t epochs_stage1 = 60;
  std::size_t epochs_stage2 = 600;
  std::size_t batch_size = 32;
  double val_fraction = 0.2;
  std::uint64_t seed = 1;

  void validate() const;
};

struct StageReport {
  double initial_val_loss = 0.0;  // before the first update
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> accuracy;      // running training accuracy, classifier stages only
  std::vector<double> val_accuracy;  // classifier stages only

  std::size_t epochs() const noexcept { return train_loss.size(); }
  // First epoch (0-based) whose validation loss is <= threshold.
  std::optional<std::size_t> epochs_to_threshold(double threshold) const;
};

struct StageResult {
  nn::ParamStore<float> params;
  StageReport report;
};

// Called after every epoch with the 0-based epoch index.
using EpochCallback = std::function<void(std::size_t epoch, const StageReport&)>;

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Per label, a seeded shuffle; the first round(val_fraction * n) go to
// validation. A class with a single frame keeps it for training.
Split stratified_split(const Dataset& dataset, double val_fraction, std::uint64_t seed);

// lr_start * (lr_end / lr_start)^(epoch / (total - 1)); lr_start when total == 1.
double lr_schedule(std::size_t epoch, std::size_t total_epochs, double lr_start, double lr_end);

StageResult pretrain(const Dataset& periodic, const TrainConfig& cfg,
                     const models::DenoiserConfig& arch = {}, const EpochCallback& on_epoch = {});

StageResult transfer_stage1(const nn::ParamStore<float>& pretrained, const Dataset& modulation,
                            const TrainConfig& cfg, const EpochCallback& on_epoch = {});

StageResult transfer_stage2(const nn::ParamStore<float>& denoiser, const Dataset& modulation,
                            const TrainConfig& cfg, const models::ClassifierConfig& arch = {},
                            const EpochCallback& on_epoch = {});

StageResult train_baseline_nr_scratch(const Dataset& modulation, const TrainConfig& cfg,
                                      const models::DenoiserConfig& arch = {},
                                      const EpochCallback& on_epoch = {});

// Classifier from scratch on pure cross-entropy (w_nr = 0, w_mc = 1), same
// schedule and epochs as stage II.
StageResult train_baseline_amc(const Dataset& modulation, const TrainConfig& cfg,
                               const models::ClassifierConfig& arch = {},
                               const EpochCallback& on_epoch = {});

// Header: epoch,train_loss,val_loss,accuracy (accuracy empty for denoiser stages).
void write_report_csv(const StageReport& report, const std::filesystem::path& path);

// Seeds every stage derives from cfg.seed. Paired arms share init streams
// for their non-transferred tensors and share shuffling.
namespace seed_stream {
inline constexpr std::uint64_t kSplit = 7;
inline constexpr std::uint64_t kPretrainInit = 101;
inline constexpr std::uint64_t kDenoiserInit = 202;
inline constexpr std::uint64_t kClassifierInit = 303;
inline constexpr std::uint64_t kShuffle = 1000;
}  // namespace seed_stream

}  // namespace tnr::training
