#pragma once

#include "tnr/common.hpp"
#include "tnr/nn/layers.hpp"
#include "tnr/nn/losses.hpp"
#include "tnr/nn/param_store.hpp"

#include <array>
#include <iterator>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace tnr::models {

using Eigen::Index;
using nn::ParamStore;
using nn::Role;

struct DenoiserConfig {
  std::size_t gru_layers = 3;
  std::size_t hidden = 32;
  std::size_t input_width = 2;
  std::size_t output_width = 2;

  void validate() const {
    if (gru_layers < 1) throw std::invalid_argument("denoiser needs at least one GRU layer");
    if (hidden < 1) throw std::invalid_argument("denoiser hidden size must be positive");
    if (input_width != 2 || output_width != 2) {
      throw std::invalid_argument("denoiser input and output width must be 2 (I/Q)");
    }
  }
};

struct ClassifierConfig {
  std::size_t transferred_gru_layers = 3;
  std::size_t hidden = 32;  // width of the transferred stack
  std::size_t head_gru_layers = 1;
  std::size_t head_hidden = 32;
  std::size_t dense_hidden = 64;
  std::size_t n_classes = 5;
  // 1-based index of the transferred layer whose output feeds the
  // reconstruction head.
  std::size_t reconstruction_tap = 3;

  DenoiserConfig transferred() const { return {transferred_gru_layers, hidden, 2, 2}; }

  void validate() const {
    transferred().validate();
    if (head_gru_layers < 1 || head_hidden < 1 || dense_hidden < 1) {
      throw std::invalid_argument("classifier head sizes must be positive");
    }
    if (n_classes < 2) throw std::invalid_argument("classifier needs at least two classes");
    if (reconstruction_tap < 1 || reconstruction_tap > transferred_gru_layers) {
      throw std::invalid_argument("reconstruction_tap must lie in [1, transferred_gru_layers]");
    }
  }
};

inline const std::array<const char*, 9> kGruTensorNames = {"W_z", "W_r", "W_h", "U_z", "U_r",
                                                          "U_h", "b_z", "b_r", "b_h"};

inline std::string gru_prefix(std::size_t layer) { return "gru" + std::to_string(layer) + "."; }
inline std::string head_gru_prefix(std::size_t layer) {
  return "cls_gru" + std::to_string(layer) + ".";
}

// 3 gates x (hidden x (in + hidden) weights + hidden biases) per layer plus
// the hidden -> 2 output head.
inline std::size_t denoiser_parameter_count(const DenoiserConfig& cfg) {
  std::size_t n = 0;
  for (std::size_t l = 0; l < cfg.gru_layers; ++l) {
    const std::size_t in = l == 0 ? cfg.input_width : cfg.hidden;
    n += 3 * cfg.hidden * (in + cfg.hidden) + 3 * cfg.hidden;
  }
  return n + cfg.output_width * cfg.hidden + cfg.output_width;
}

// ---------------------------------------------------------------------------
// Store <-> layer parameter plumbing

template <typename Scalar>
nn::GruLayerParams<Scalar> load_gru(const ParamStore<Scalar>& store, const std::string& prefix) {
  nn::GruLayerParams<Scalar> p;
  p.W_z = store[prefix + "W_z"];
  p.W_r = store[prefix + "W_r"];
  p.W_h = store[prefix + "W_h"];
  p.U_z = store[prefix + "U_z"];
  p.U_r = store[prefix + "U_r"];
  p.U_h = store[prefix + "U_h"];
  p.b_z = store[prefix + "b_z"];
  p.b_r = store[prefix + "b_r"];
  p.b_h = store[prefix + "b_h"];
  return p;
}

template <typename Scalar>
void write_gru(ParamStore<Scalar>& store, const std::string& prefix,
               const nn::GruLayerParams<Scalar>& p) {
  store[prefix + "W_z"] = p.W_z;
  store[prefix + "W_r"] = p.W_r;
  store[prefix + "W_h"] = p.W_h;
  store[prefix + "U_z"] = p.U_z;
  store[prefix + "U_r"] = p.U_r;
  store[prefix + "U_h"] = p.U_h;
  store[prefix + "b_z"] = p.b_z;
  store[prefix + "b_r"] = p.b_r;
  store[prefix + "b_h"] = p.b_h;
}

template <typename Scalar>
nn::DenseParams<Scalar> load_dense(const ParamStore<Scalar>& store, const std::string& prefix) {
  return {store[prefix + "W"], store[prefix + "b"]};
}

template <typename Scalar>
void write_dense(ParamStore<Scalar>& store, const std::string& prefix,
                 const nn::DenseParams<Scalar>& p) {
  store[prefix + "W"] = p.W;
  store[prefix + "b"] = p.b;
}

namespace detail {

template <typename Scalar>
void add_gru(ParamStore<Scalar>& store, const std::string& prefix, Index in, Index hidden,
             std::mt19937_64& rng) {
  for (const char* w : {"W_z", "W_r", "W_h"}) {
    store.add(prefix + w, nn::glorot_uniform<Scalar>(hidden, in, rng));
  }
  for (const char* u : {"U_z", "U_r", "U_h"}) {
    store.add(prefix + u, nn::glorot_uniform<Scalar>(hidden, hidden, rng));
  }
  for (const char* b : {"b_z", "b_r", "b_h"}) {
    store.add(prefix + b, Matrix<Scalar>::Zero(hidden, 1), 1);
  }
}

template <typename Scalar>
void add_dense(ParamStore<Scalar>& store, const std::string& prefix, Index in, Index out,
               std::mt19937_64& rng) {
  store.add(prefix + "W", nn::glorot_uniform<Scalar>(out, in, rng));
  store.add(prefix + "b", Matrix<Scalar>::Zero(out, 1), 1);
}

inline std::size_t count_layers(const auto& store, const auto& prefix_fn) {
  std::size_t n = 0;
  while (store.contains(prefix_fn(n) + "W_z")) ++n;
  return n;
}

template <typename Scalar>
void require_role(const ParamStore<Scalar>& store, std::initializer_list<Role> allowed,
                  const char* what) {
  const auto role = store.role();
  for (Role r : allowed) {
    if (role == r) return;
  }
  throw InvalidState(std::string(what) + ": parameter store has role '" +
                     (role ? std::string(nn::to_string(*role)) : std::string("unset")) + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Builders

template <typename Scalar = float>
ParamStore<Scalar> build_denoiser(const DenoiserConfig& cfg, std::uint64_t seed,
                                  Role role = Role::NoiseReduction) {
  cfg.validate();
  if (role == Role::Classifier) throw std::invalid_argument("denoiser role must be P or NR");
  std::mt19937_64 rng(seed);
  ParamStore<Scalar> store(role);
  const auto H = static_cast<Index>(cfg.hidden);
  for (std::size_t l = 0; l < cfg.gru_layers; ++l) {
    detail::add_gru(store, gru_prefix(l), l == 0 ? static_cast<Index>(cfg.input_width) : H, H,
                    rng);
  }
  detail::add_dense(store, "recon.", H, static_cast<Index>(cfg.output_width), rng);
  return store;
}

template <typename Scalar = float>
ParamStore<Scalar> build_classifier(const ClassifierConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  ParamStore<Scalar> store(Role::Classifier);
  const auto H = static_cast<Index>(cfg.hidden);
  for (std::size_t l = 0; l < cfg.transferred_gru_layers; ++l) {
    detail::add_gru(store, gru_prefix(l), l == 0 ? Index{2} : H, H, rng);
  }
  detail::add_dense(store, "recon.", H, 2, rng);
  const auto HH = static_cast<Index>(cfg.head_hidden);
  for (std::size_t l = 0; l < cfg.head_gru_layers; ++l) {
    detail::add_gru(store, head_gru_prefix(l), l == 0 ? H : HH, HH, rng);
  }
  detail::add_dense(store, "fc1.", HH, static_cast<Index>(cfg.dense_hidden), rng);
  detail::add_dense(store, "fc2.", static_cast<Index>(cfg.dense_hidden),
                    static_cast<Index>(cfg.n_classes), rng);
  return store;
}

// Recovers layer counts and widths from tensor shapes. The reconstruction
// tap is not encoded in the weights and must be supplied.
template <typename Scalar>
ClassifierConfig classifier_config_of(const ParamStore<Scalar>& store,
                                      std::size_t reconstruction_tap = 3) {
  ClassifierConfig cfg;
  cfg.transferred_gru_layers = detail::count_layers(store, gru_prefix);
  cfg.head_gru_layers = detail::count_layers(store, head_gru_prefix);
  if (cfg.transferred_gru_layers == 0 || cfg.head_gru_layers == 0 || !store.contains("fc2.W")) {
    throw std::invalid_argument("parameter store does not hold a classifier");
  }
  cfg.hidden = static_cast<std::size_t>(store["gru0.W_z"].rows());
  cfg.head_hidden = static_cast<std::size_t>(store["cls_gru0.W_z"].rows());
  cfg.dense_hidden = static_cast<std::size_t>(store["fc1.W"].rows());
  cfg.n_classes = static_cast<std::size_t>(store["fc2.W"].rows());
  cfg.reconstruction_tap = reconstruction_tap;
  cfg.validate();
  return cfg;
}

template <typename Scalar>
DenoiserConfig denoiser_config_of(const ParamStore<Scalar>& store) {
  DenoiserConfig cfg;
  cfg.gru_layers = detail::count_layers(store, gru_prefix);
  if (cfg.gru_layers == 0 || !store.contains("recon.W")) {
    throw std::invalid_argument("parameter store does not hold a denoiser");
  }
  cfg.hidden = static_cast<std::size_t>(store["gru0.W_z"].rows());
  cfg.validate();
  return cfg;
}

// Copies GRU layers 0..n_layers-1 and, when both stores have one, the
// reconstruction head from src into dst. Every shape is checked before
// anything is written.
template <typename Scalar>
void transfer_weights(const ParamStore<Scalar>& src, ParamStore<Scalar>& dst,
                      std::size_t n_layers) {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < n_layers; ++l) {
    for (const char* t : kGruTensorNames) names.push_back(gru_prefix(l) + t);
  }
  if (src.contains("recon.W") && dst.contains("recon.W")) {
    names.emplace_back("recon.W");
    names.emplace_back("recon.b");
  }
  for (const auto& name : names) {
    if (!src.contains(name) || !dst.contains(name)) {
      throw std::invalid_argument("transfer_weights: tensor '" + name +
                                  "' missing from source or destination");
    }
    if (!src.tensor(name).same_shape(dst.tensor(name))) {
      throw std::invalid_argument("transfer_weights: shape mismatch for tensor '" + name + "'");
    }
  }
  for (const auto& name : names) dst[name] = src[name];
}

// ---------------------------------------------------------------------------
// Batching

// Packs frames into a (2 x steps*batch) matrix, column t*batch + b.
template <typename Scalar, typename Range, typename Proj>
Matrix<Scalar> pack_batch(const Range& items, Proj frame_of) {
  const auto batch = static_cast<Index>(std::size(items));
  if (batch == 0) throw std::invalid_argument("pack_batch: empty batch");
  const Index steps = frame_of(*std::begin(items)).cols();
  Matrix<Scalar> out(2, steps * batch);
  Index b = 0;
  for (const auto& item : items) {
    const auto& f = frame_of(item);
    if (f.cols() != steps) throw std::invalid_argument("pack_batch: frames differ in length");
    for (Index t = 0; t < steps; ++t) {
      out.col(t * batch + b) = f.col(t).template cast<Scalar>();
    }
    ++b;
  }
  return out;
}

template <typename Scalar>
IQFrame<Scalar> unpack_frame(const Matrix<Scalar>& packed, Index steps, Index batch, Index b) {
  IQFrame<Scalar> f(2, steps);
  for (Index t = 0; t < steps; ++t) f.col(t) = packed.col(t * batch + b);
  return f;
}

// ---------------------------------------------------------------------------
// Graphs: forward records activations, backward returns gradients shaped
// like the parameter store.

template <typename Scalar>
Matrix<Scalar> run_stack(std::vector<nn::GruLayer<Scalar>>& layers, const Matrix<Scalar>& x,
                         Index steps, Index batch, std::vector<const Matrix<Scalar>*>* taps) {
  const Matrix<Scalar>* h = &x;
  for (auto& layer : layers) {
    h = &layer.forward(*h, steps, batch);
    if (taps) taps->push_back(h);
  }
  return *h;
}

template <typename Scalar>
class DenoiserGraph {
 public:
  explicit DenoiserGraph(const ParamStore<Scalar>& params)
      : params_(params), head_(load_dense(params, "recon.")) {
    detail::require_role(params, {Role::Pretrain, Role::NoiseReduction}, "denoiser");
    const std::size_t n = detail::count_layers(params, gru_prefix);
    if (n == 0) throw std::invalid_argument("denoiser has no GRU layers");
    for (std::size_t l = 0; l < n; ++l) stack_.emplace_back(load_gru(params, gru_prefix(l)));
  }

  Matrix<Scalar> forward(const Matrix<Scalar>& inputs, Index steps, Index batch) {
    const Matrix<Scalar> top = run_stack<Scalar>(stack_, inputs, steps, batch, nullptr);
    forwarded_ = true;
    return head_.forward(top);
  }

  // Hidden states of GRU layer l from the last forward pass.
  const Matrix<Scalar>& hidden_states(std::size_t l) const { return stack_.at(l).outputs(); }

  ParamStore<Scalar> backward(const Matrix<Scalar>& d_output) const {
    if (!forwarded_) throw InvalidState("backward called before forward");
    ParamStore<Scalar> grads = params_.zeros_like();
    nn::DenseParams<Scalar> dh = load_dense(grads, "recon.");
    Matrix<Scalar> d = head_.backward(d_output, dh);
    write_dense(grads, "recon.", dh);
    for (std::size_t l = stack_.size(); l-- > 0;) {
      auto g = load_gru(grads, gru_prefix(l));
      d = stack_[l].backward(d, g);
      write_gru(grads, gru_prefix(l), g);
    }
    return grads;
  }

 private:
  const ParamStore<Scalar>& params_;
  std::vector<nn::GruLayer<Scalar>> stack_;
  nn::DenseLayer<Scalar> head_;
  bool forwarded_ = false;
};

template <typename Scalar>
struct ClassifierOutput {
  Matrix<Scalar> reconstruction;  // 2 x steps*batch
  Matrix<Scalar> logits;          // K x batch
};

template <typename Scalar>
class ClassifierGraph {
 public:
  ClassifierGraph(const ParamStore<Scalar>& params, std::size_t reconstruction_tap)
      : params_(params),
        cfg_(checked_config(params, reconstruction_tap)),
        recon_(load_dense(params, "recon.")),
        fc1_(load_dense(params, "fc1.")),
        fc2_(load_dense(params, "fc2.")) {
    for (std::size_t l = 0; l < cfg_.transferred_gru_layers; ++l) {
      stack_.emplace_back(load_gru(params, gru_prefix(l)));
    }
    for (std::size_t l = 0; l < cfg_.head_gru_layers; ++l) {
      head_.emplace_back(load_gru(params, head_gru_prefix(l)));
    }
  }

  const ClassifierConfig& config() const noexcept { return cfg_; }

  ClassifierOutput<Scalar> forward(const Matrix<Scalar>& inputs, Index steps, Index batch) {
    std::vector<const Matrix<Scalar>*> taps;
    const Matrix<Scalar> top = run_stack<Scalar>(stack_, inputs, steps, batch, &taps);
    ClassifierOutput<Scalar> out;
    out.reconstruction = recon_.forward(*taps[cfg_.reconstruction_tap - 1]);

    const Matrix<Scalar> features = run_stack<Scalar>(head_, top, steps, batch, nullptr);
    Matrix<Scalar> pooled = Matrix<Scalar>::Zero(features.rows(), batch);
    for (Index t = 0; t < steps; ++t) pooled += features.middleCols(t * batch, batch);
    pooled /= static_cast<Scalar>(steps);

    pre_relu_ = fc1_.forward(pooled);
    out.logits = fc2_.forward(pre_relu_.cwiseMax(Scalar(0)));
    steps_ = steps;
    batch_ = batch;
    forwarded_ = true;
    return out;
  }

  const Matrix<Scalar>& hidden_states(std::size_t l) const { return stack_.at(l).outputs(); }

  ParamStore<Scalar> backward(const Matrix<Scalar>& d_reconstruction,
                              const Matrix<Scalar>& d_logits) const {
    if (!forwarded_) throw InvalidState("backward called before forward");
    ParamStore<Scalar> grads = params_.zeros_like();

    auto g2 = load_dense(grads, "fc2.");
    Matrix<Scalar> d = fc2_.backward(d_logits, g2);
    write_dense(grads, "fc2.", g2);
    d = d.cwiseProduct((pre_relu_.array() > Scalar(0)).matrix().template cast<Scalar>());
    auto g1 = load_dense(grads, "fc1.");
    const Matrix<Scalar> d_pooled = fc1_.backward(d, g1) / static_cast<Scalar>(steps_);
    write_dense(grads, "fc1.", g1);

    d = d_pooled.replicate(1, steps_);
    for (std::size_t l = head_.size(); l-- > 0;) {
      auto g = load_gru(grads, head_gru_prefix(l));
      d = head_[l].backward(d, g);
      write_gru(grads, head_gru_prefix(l), g);
    }

    auto gr = load_dense(grads, "recon.");
    const Matrix<Scalar> d_tap = recon_.backward(d_reconstruction, gr);
    write_dense(grads, "recon.", gr);

    for (std::size_t l = stack_.size(); l-- > 0;) {
      if (l + 1 == cfg_.reconstruction_tap) d += d_tap;
      auto g = load_gru(grads, gru_prefix(l));
      d = stack_[l].backward(d, g);
      write_gru(grads, gru_prefix(l), g);
    }
    return grads;
  }

 private:
  static ClassifierConfig checked_config(const ParamStore<Scalar>& params, std::size_t tap) {
    detail::require_role(params, {Role::Classifier}, "classifier");
    return classifier_config_of(params, tap);
  }

  const ParamStore<Scalar>& params_;
  ClassifierConfig cfg_;
  std::vector<nn::GruLayer<Scalar>> stack_, head_;
  nn::DenseLayer<Scalar> recon_, fc1_, fc2_;
  Matrix<Scalar> pre_relu_;
  Index steps_ = 0;
  Index batch_ = 0;
  bool forwarded_ = false;
};

// ---------------------------------------------------------------------------
// Losses over whole networks

template <typename Scalar>
struct NetworkLoss {
  Scalar total{};
  Scalar reconstruction{};
  Scalar classification{};
  ParamStore<Scalar> grads;   // empty unless requested
  Matrix<Scalar> output;      // reconstruction (denoiser) or logits (classifier)
};

// Batch-mean reconstruction MSE of a denoiser.
template <typename Scalar>
NetworkLoss<Scalar> denoiser_loss(const ParamStore<Scalar>& params, const Matrix<Scalar>& noisy,
                                  const Matrix<Scalar>& clean, Index steps, Index batch,
                                  bool with_grads = true) {
  DenoiserGraph<Scalar> graph(params);
  const Matrix<Scalar> out = graph.forward(noisy, steps, batch);
  auto mse = nn::batch_mse(out, clean, steps, batch);
  NetworkLoss<Scalar> loss;
  loss.total = loss.reconstruction = mse.value;
  if (with_grads) loss.grads = graph.backward(mse.grad);
  loss.output = out;
  return loss;
}

// w_nr * reconstruction MSE + w_mc * cross-entropy, both batch means.
template <typename Scalar, typename Labels>
NetworkLoss<Scalar> joint_loss(const ParamStore<Scalar>& params, std::size_t reconstruction_tap,
                               const Matrix<Scalar>& noisy, const Matrix<Scalar>& clean,
                               const Labels& labels, Index steps, Index batch, double w_nr,
                               double w_mc, bool with_grads = true) {
  ClassifierGraph<Scalar> graph(params, reconstruction_tap);
  auto out = graph.forward(noisy, steps, batch);
  auto mse = nn::batch_mse(out.reconstruction, clean, steps, batch);
  auto ce = nn::batch_cross_entropy(out.logits, labels);
  const auto wn = static_cast<Scalar>(w_nr);
  const auto wm = static_cast<Scalar>(w_mc);
  NetworkLoss<Scalar> loss;
  loss.reconstruction = mse.value;
  loss.classification = ce.value;
  loss.total = wn * mse.value + wm * ce.value;
  if (with_grads) loss.grads = graph.backward(wn * mse.grad, wm * ce.grad);
  loss.output = std::move(out.logits);
  return loss;
}

// ---------------------------------------------------------------------------
// Single-frame inference

template <typename Scalar>
struct Prediction {
  Vector<double> probs;
  std::size_t predicted_class = 0;
  IQFrame<Scalar> reconstruction;
};

// First index of the maximum.
inline std::size_t argmax(const Vector<double>& v) {
  std::size_t best = 0;
  for (Index k = 1; k < v.size(); ++k) {
    if (v[k] > v[static_cast<Index>(best)]) best = static_cast<std::size_t>(k);
  }
  return best;
}

template <typename Scalar>
IQFrame<Scalar> denoise(const ParamStore<Scalar>& params, const IQFrame<Scalar>& noisy) {
  DenoiserGraph<Scalar> graph(params);
  if (noisy.cols() < 1) throw std::invalid_argument("denoise: empty frame");
  return graph.forward(noisy, noisy.cols(), 1);
}

template <typename Scalar>
Prediction<Scalar> classify(const ParamStore<Scalar>& params, const IQFrame<Scalar>& noisy,
                            std::size_t reconstruction_tap = 3) {
  ClassifierGraph<Scalar> graph(params, reconstruction_tap);
  if (noisy.cols() < 1) throw std::invalid_argument("classify: empty frame");
  auto out = graph.forward(noisy, noisy.cols(), 1);
  Prediction<Scalar> p;
  p.probs = nn::softmax<double>(out.logits.col(0).template cast<double>());
  p.predicted_class = argmax(p.probs);
  p.reconstruction = out.reconstruction;
  return p;
}

}  // namespace tnr::models
