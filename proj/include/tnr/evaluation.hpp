#pragma once

#include "tnr/dataset.hpp"
#include "tnr/nn/param_store.hpp"

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace tnr::eval {

// Maps a batch of examples to predicted class indices, one per example.
using Predictor = std::function<std::vector<std::size_t>(std::span<const LabeledExample>)>;
// Maps a batch of examples to reconstructed frames, one per example.
using Denoiser = std::function<std::vector<IQFrame<float>>(std::span<const LabeledExample>)>;

Predictor classifier_predictor(const nn::ParamStore<float>& params, std::size_t reconstruction_tap = 3,
                               std::size_t batch_size = 64);
// Denoiser role: the network output. Classifier role: the reconstruction branch.
Denoiser network_denoiser(const nn::ParamStore<float>& params, std::size_t reconstruction_tap = 3,
                          std::size_t batch_size = 64);
Denoiser identity_denoiser();

// Half-open interval [center - half_width, center + half_width) on the
// frame's mean trajectory SNR.
struct SnrBin {
  double center = 0.0;
  double half_width = 1.0;
  std::vector<std::size_t> examples;

  bool contains(double snr) const {
    return snr >= center - half_width && snr < center + half_width;
  }
};

// Centers -10, -8, ..., +18 dB with half width 1.
std::vector<SnrBin> default_bins();
std::vector<SnrBin> make_bins(double first_center, double last_center, double step);
// Fills each bin's example list; examples outside every bin are dropped.
std::vector<SnrBin> assign_bins(std::span<const LabeledExample> testset, std::vector<SnrBin> bins);

struct AccuracyPoint {
  double snr_db = 0.0;
  double accuracy = 0.0;
  std::size_t n = 0;
};

// One point per nonempty bin, in bin order.
std::vector<AccuracyPoint> accuracy_vs_snr(const Predictor& model,
                                           std::span<const LabeledExample> testset,
                                           std::vector<SnrBin> bins = default_bins());

struct ConfusionMatrix {
  // counts(true, predicted)
  Eigen::Matrix<std::size_t, Eigen::Dynamic, Eigen::Dynamic> counts;

  std::size_t total() const { return counts.sum(); }
  std::size_t correct() const { return counts.diagonal().sum(); }
  double accuracy() const {
    return static_cast<double>(correct()) / static_cast<double>(total());
  }
};

// Examples whose mean trajectory SNR lies in [center - half_width,
// center + half_width).
ConfusionMatrix confusion(const Predictor& model, std::span<const LabeledExample> testset,
                          double snr_center, double half_width, std::size_t n_classes);

// Mean over examples of empirical_snr(clean, denoised) - empirical_snr(clean, noisy);
// infinite values are capped at kSnrCap first.
inline constexpr double kSnrCap = 60.0;
double snr_gain(const Denoiser& denoiser, std::span<const LabeledExample> testset);

// Fraction of examples whose prediction equals the label, computed one
// example at a time.
double per_example_accuracy(const Predictor& model, std::span<const LabeledExample> testset);

// snr_db,accuracy,n
void write_accuracy_csv(const std::vector<AccuracyPoint>& curve, const std::filesystem::path& path);
// Header row "true\predicted,<names...>", then one row per true class.
void write_confusion_csv(const ConfusionMatrix& matrix, const std::vector<std::string>& class_names,
                         const std::filesystem::path& path);

std::vector<std::string> modulation_class_names();

}  // namespace tnr::eval
