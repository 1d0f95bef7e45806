//
// Project UniMoMo - Copyright 2026 UniMoMo Developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef UNIMOMO_TENSOR_HPP_
#define UNIMOMO_TENSOR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace unimomo {

namespace detail {
inline void require(bool cond, const std::string& msg) {
  if (!cond)
    throw std::invalid_argument(msg);
}
}  // namespace detail

// Dense row-major matrix of doubles. Vectors are (n,1) or (1,n); scalars are
// (1,1). All numeric state in the project flows through this type.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    detail::require(data_.size() == rows_ * cols_,
                    "Tensor: data size does not match shape");
  }

  static Tensor scalar(double v) { return Tensor(1, 1, {v}); }
  static Tensor row(std::vector<double> v) {
    const std::size_t n = v.size();
    return Tensor(1, n, std::move(v));
  }
  static Tensor column(std::vector<double> v) {
    const std::size_t n = v.size();
    return Tensor(n, 1, std::move(v));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Tensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }
  double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
  const double* row_ptr(std::size_t i) const {
    return data_.data() + i * cols_;
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& vec() const { return data_; }
  std::vector<double>& vec() { return data_; }

  // Single entry of a (1,1) tensor.
  double item() const {
    detail::require(rows_ == 1 && cols_ == 1, "Tensor::item: not a scalar");
    return data_[0];
  }

  void fill(double v) { data_.assign(data_.size(), v); }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

}  // namespace unimomo

#endif  // UNIMOMO_TENSOR_HPP_
