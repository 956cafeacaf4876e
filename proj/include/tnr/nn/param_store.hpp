#pragma once

#include "tnr/common.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tnr::nn {

// Which network a store holds.
enum class Role : std::uint8_t { Pretrain = 0, NoiseReduction = 1, Classifier = 2 };

std::string_view to_string(Role role) noexcept;

// A named dense tensor of rank 1 or 2. Rank-1 tensors live in a single
// column.
template <typename Scalar>
struct Tensor {
  std::string name;
  Matrix<Scalar> value;
  std::uint8_t rank = 2;

  std::vector<std::uint32_t> shape() const {
    if (rank == 1) return {static_cast<std::uint32_t>(value.rows())};
    return {static_cast<std::uint32_t>(value.rows()), static_cast<std::uint32_t>(value.cols())};
  }
  bool same_shape(const Tensor& other) const {
    return rank == other.rank && value.rows() == other.value.rows() &&
           value.cols() == other.value.cols();
  }
};

// Ordered, uniquely named collection of tensors: all weights of one network,
// or gradients shaped like them.
template <typename Scalar>
class ParamStore {
 public:
  using TensorType = Tensor<Scalar>;

  ParamStore() = default;
  explicit ParamStore(Role role) : role_(role) {}

  std::optional<Role> role() const noexcept { return role_; }

  void set_role(Role role) {
    if (role_) throw InvalidState("parameter store role is already set");
    role_ = role;
  }

  Matrix<Scalar>& add(std::string name, Matrix<Scalar> value, std::uint8_t rank = 2) {
    if (rank != 1 && rank != 2) throw std::invalid_argument("tensor rank must be 1 or 2");
    if (rank == 1 && value.cols() != 1) {
      throw std::invalid_argument("rank-1 tensor '" + name + "' must be a single column");
    }
    if (index_.count(name) != 0) {
      throw std::invalid_argument("duplicate tensor name '" + name + "'");
    }
    index_.emplace(name, tensors_.size());
    tensors_.push_back(TensorType{std::move(name), std::move(value), rank});
    return tensors_.back().value;
  }

  bool contains(std::string_view name) const { return index_.find(name) != index_.end(); }

  const TensorType& tensor(std::string_view name) const { return tensors_[locate(name)]; }

  Matrix<Scalar>& operator[](std::string_view name) { return tensors_[locate(name)].value; }
  const Matrix<Scalar>& operator[](std::string_view name) const {
    return tensors_[locate(name)].value;
  }

  std::size_t size() const noexcept { return tensors_.size(); }
  TensorType& at(std::size_t i) { return tensors_.at(i); }
  const TensorType& at(std::size_t i) const { return tensors_.at(i); }

  auto begin() noexcept { return tensors_.begin(); }
  auto end() noexcept { return tensors_.end(); }
  auto begin() const noexcept { return tensors_.begin(); }
  auto end() const noexcept { return tensors_.end(); }

  std::size_t parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += static_cast<std::size_t>(t.value.size());
    return n;
  }

  // Same names, shapes and role; all values zero.
  ParamStore zeros_like() const {
    ParamStore out;
    out.role_ = role_;
    for (const auto& t : tensors_) {
      out.add(t.name, Matrix<Scalar>::Zero(t.value.rows(), t.value.cols()), t.rank);
    }
    return out;
  }

  template <typename Other>
  ParamStore<Other> cast() const {
    ParamStore<Other> out;
    if (role_) out.set_role(*role_);
    for (const auto& t : tensors_) out.add(t.name, t.value.template cast<Other>(), t.rank);
    return out;
  }

  bool structurally_equal(const ParamStore& other) const {
    if (size() != other.size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
      if (tensors_[i].name != other.tensors_[i].name ||
          !tensors_[i].same_shape(other.tensors_[i])) {
        return false;
      }
    }
    return true;
  }

  // Bitwise equality of role, names, shapes and values.
  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    if (a.role_ != b.role_ || !a.structurally_equal(b)) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a.tensors_[i].value != b.tensors_[i].value) return false;
    }
    return true;
  }

 private:
  std::size_t locate(std::string_view name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) {
      throw std::invalid_argument("no tensor named '" + std::string(name) + "'");
    }
    return it->second;
  }

  std::optional<Role> role_;
  std::vector<TensorType> tensors_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

inline std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::Pretrain: return "pretrain";
    case Role::NoiseReduction: return "noise-reduction";
    case Role::Classifier: return "classifier";
  }
  return "?";
}

}  // namespace tnr::nn
