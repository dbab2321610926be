#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "inf2vec/core.hpp"
#include "inf2vec/rng.hpp"

namespace inf2vec {

// Dense row-major tensor. Shapes are explicit everywhere; the only implied
// conversion anywhere in the library is scalar-against-tensor arithmetic.
template <typename R>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape)
      : shape_(std::move(shape)), data_(checked_numel(shape_), R(0)) {}

  Tensor(std::vector<int> shape, std::vector<R> values)
      : shape_(std::move(shape)), data_(std::move(values)) {
    require(static_cast<int64_t>(data_.size()) == checked_numel(shape_),
            cat("tensor value count ", data_.size(), " does not match shape ",
                shape_str(shape_)));
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<int> shape, R v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }

  static Tensor scalar(R v) { return Tensor({1}, {v}); }

  static Tensor row(std::vector<R> v) {
    int n = static_cast<int>(v.size());
    return Tensor({1, n}, std::move(v));
  }

  static Tensor uniform(std::vector<int> shape, R lo, R hi, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = static_cast<R>(rng.uniform(lo, hi));
    return t;
  }

  static Tensor gaussian(std::vector<int> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = static_cast<R>(rng.normal());
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool is_scalar() const { return numel() == 1; }

  R* data() { return data_.data(); }
  const R* data() const { return data_.data(); }

  R& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  R operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // 2-D accessors
  int rows() const {
    require(ndim() == 2, cat("expected 2-D tensor, got shape ", shape_str(shape_)));
    return shape_[0];
  }
  int cols() const {
    require(ndim() == 2, cat("expected 2-D tensor, got shape ", shape_str(shape_)));
    return shape_[1];
  }
  R& at(int r, int c) { return data_[static_cast<size_t>(r) * shape_[1] + c]; }
  R at(int r, int c) const { return data_[static_cast<size_t>(r) * shape_[1] + c]; }

  // 3-D accessor
  R& at(int i, int j, int k) {
    return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }
  R at(int i, int j, int k) const {
    return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (const R& x : data_)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  std::string shape_str() const { return shape_str(shape_); }

  static std::string shape_str(const std::vector<int>& s) {
    std::string out = "(";
    for (size_t i = 0; i < s.size(); ++i) {
      if (i) out += ", ";
      out += std::to_string(s[i]);
    }
    out += ")";
    return out;
  }

  static int64_t checked_numel(const std::vector<int>& shape) {
    require(!shape.empty(), "tensor shape must have at least one dimension");
    int64_t n = 1;
    for (int d : shape) {
      require(d > 0, cat("tensor dimensions must be positive, got ", shape_str(shape)));
      n *= d;
    }
    return n;
  }

 private:
  std::vector<int> shape_;
  std::vector<R> data_;
};

}  // namespace inf2vec
