#include "tnr/evaluation.hpp"

#include "tnr/channel.hpp"
#include "tnr/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace tnr::eval {

using models::Index;

namespace {

template <typename Fn>
void for_each_chunk(std::span<const LabeledExample> items, std::size_t batch_size, Fn&& fn) {
  for (std::size_t start = 0; start < items.size(); start += batch_size) {
    fn(items.subspan(start, std::min(batch_size, items.size() - start)));
  }
}

Matrix<float> pack_noisy(std::span<const LabeledExample> batch) {
  return models::pack_batch<float>(
      batch, [](const LabeledExample& ex) -> const IQFrame<float>& { return ex.noisy; });
}

}  // namespace

Predictor classifier_predictor(const nn::ParamStore<float>& params, std::size_t tap,
                               std::size_t batch_size) {
  models::detail::require_role(params, {nn::Role::Classifier}, "classifier_predictor");
  return [&params, tap, batch_size](std::span<const LabeledExample> items) {
    std::vector<std::size_t> out;
    out.reserve(items.size());
    for_each_chunk(items, batch_size, [&](std::span<const LabeledExample> batch) {
      models::ClassifierGraph<float> graph(params, tap);
      const auto steps = batch.front().noisy.cols();
      const auto res = graph.forward(pack_noisy(batch), steps, static_cast<Index>(batch.size()));
      for (Index b = 0; b < res.logits.cols(); ++b) {
        out.push_back(models::argmax(res.logits.col(b).cast<double>()));
      }
    });
    return out;
  };
}

Denoiser network_denoiser(const nn::ParamStore<float>& params, std::size_t tap,
                          std::size_t batch_size) {
  const bool is_classifier = params.role() == nn::Role::Classifier;
  if (!is_classifier) {
    models::detail::require_role(params, {nn::Role::Pretrain, nn::Role::NoiseReduction},
                                 "network_denoiser");
  }
  return [&params, tap, batch_size, is_classifier](std::span<const LabeledExample> items) {
    std::vector<IQFrame<float>> out;
    out.reserve(items.size());
    for_each_chunk(items, batch_size, [&](std::span<const LabeledExample> batch) {
      const auto steps = batch.front().noisy.cols();
      const auto n = static_cast<Index>(batch.size());
      Matrix<float> recon;
      if (is_classifier) {
        models::ClassifierGraph<float> graph(params, tap);
        recon = graph.forward(pack_noisy(batch), steps, n).reconstruction;
      } else {
        models::DenoiserGraph<float> graph(params);
        recon = graph.forward(pack_noisy(batch), steps, n);
      }
      for (Index b = 0; b < n; ++b) out.push_back(models::unpack_frame(recon, steps, n, b));
    });
    return out;
  };
}

Denoiser identity_denoiser() {
  return [](std::span<const LabeledExample> items) {
    std::vector<IQFrame<float>> out;
    out.reserve(items.size());
    for (const auto& ex : items) out.push_back(ex.noisy);
    return out;
  };
}

std::vector<SnrBin> make_bins(double first_center, double last_center, double step) {
  if (!(step > 0.0) || last_center < first_center) {
    throw std::invalid_argument("invalid SNR bin range");
  }
  std::vector<SnrBin> bins;
  const auto n = static_cast<std::size_t>(std::llround((last_center - first_center) / step)) + 1;
  for (std::size_t i = 0; i < n; ++i) {
    bins.push_back(SnrBin{first_center + step * static_cast<double>(i), step / 2.0, {}});
  }
  return bins;
}

std::vector<SnrBin> default_bins() { return make_bins(-10.0, 18.0, 2.0); }

std::vector<SnrBin> assign_bins(std::span<const LabeledExample> testset, std::vector<SnrBin> bins) {
  for (std::size_t i = 0; i < testset.size(); ++i) {
    const double snr = testset[i].mean_snr();
    for (auto& bin : bins) {
      if (bin.contains(snr)) {
        bin.examples.push_back(i);
        break;
      }
    }
  }
  return bins;
}

std::vector<AccuracyPoint> accuracy_vs_snr(const Predictor& model,
                                           std::span<const LabeledExample> testset,
                                           std::vector<SnrBin> bins) {
  if (testset.empty()) throw std::invalid_argument("accuracy_vs_snr: empty testset");
  const auto predictions = model(testset);
  bins = assign_bins(testset, std::move(bins));
  std::vector<AccuracyPoint> curve;
  for (const auto& bin : bins) {
    if (bin.examples.empty()) continue;
    std::size_t correct = 0;
    for (auto i : bin.examples) {
      if (predictions[i] == testset[i].label) ++correct;
    }
    curve.push_back({bin.center,
                     static_cast<double>(correct) / static_cast<double>(bin.examples.size()),
                     bin.examples.size()});
  }
  return curve;
}

ConfusionMatrix confusion(const Predictor& model, std::span<const LabeledExample> testset,
                          double snr_center, double half_width, std::size_t n_classes) {
  const SnrBin band{snr_center, half_width, {}};
  std::vector<LabeledExample> selected;
  for (const auto& ex : testset) {
    if (band.contains(ex.mean_snr())) selected.push_back(ex);
  }
  if (selected.empty()) throw std::invalid_argument("confusion: SNR filter selects no examples");
  const auto predictions = model(selected);
  ConfusionMatrix m;
  const auto K = static_cast<Index>(n_classes);
  m.counts = Eigen::Matrix<std::size_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(K, K);
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (selected[i].label >= n_classes || predictions[i] >= n_classes) {
      throw std::invalid_argument("confusion: class index outside the matrix");
    }
    ++m.counts(selected[i].label, static_cast<Index>(predictions[i]));
  }
  return m;
}

double snr_gain(const Denoiser& denoiser, std::span<const LabeledExample> testset) {
  if (testset.empty()) throw std::invalid_argument("snr_gain: empty testset");
  const auto denoised = denoiser(testset);
  auto capped = [](double snr) { return std::min(snr, kSnrCap); };
  double total = 0.0;
  for (std::size_t i = 0; i < testset.size(); ++i) {
    const double after = capped(empirical_snr(testset[i].clean, denoised[i]));
    const double before = capped(empirical_snr(testset[i].clean, testset[i].noisy));
    total += after - before;
  }
  return total / static_cast<double>(testset.size());
}

double per_example_accuracy(const Predictor& model, std::span<const LabeledExample> testset) {
  if (testset.empty()) throw std::invalid_argument("per_example_accuracy: empty testset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < testset.size(); ++i) {
    if (model(testset.subspan(i, 1)).front() == testset[i].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(testset.size());
}

void write_accuracy_csv(const std::vector<AccuracyPoint>& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "snr_db,accuracy,n\n";
  for (const auto& p : curve) out << p.snr_db << ',' << p.accuracy << ',' << p.n << '\n';
}

void write_confusion_csv(const ConfusionMatrix& matrix, const std::vector<std::string>& names,
                         const std::filesystem::path& path) {
  if (static_cast<Index>(names.size()) != matrix.counts.rows()) {
    throw std::invalid_argument("class name count does not match confusion matrix");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "true\\predicted";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Index i = 0; i < matrix.counts.rows(); ++i) {
    out << names[static_cast<std::size_t>(i)];
    for (Index j = 0; j < matrix.counts.cols(); ++j) out << ',' << matrix.counts(i, j);
    out << '\n';
  }
}

std::vector<std::string> modulation_class_names() {
  std::vector<std::string> names;
  for (auto s : kAllSchemes) names.emplace_back(to_string(s));
  return names;
}

}  // namespace tnr::eval
