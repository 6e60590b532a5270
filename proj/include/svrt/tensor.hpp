#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "svrt/common.hpp"

namespace svrt::nn {

/// Raised when an operation produces NaN or Inf.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

using Shape = std::vector<int>;

std::string shape_string(const Shape& s);
std::int64_t shape_numel(const Shape& s);

/// Dense row-major tensor with an optional gradient buffer. NCHW for feature maps.
template <class S>
class Tensor {
 public:
  using Scalar = S;
  using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
  using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatMap = Eigen::Map<RowMat>;
  using ConstMatMap = Eigen::Map<const RowMat>;

  Tensor() = default;
  explicit Tensor(Shape shape, S fill = S(0));
  Tensor(Shape shape, Vec data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(i < 0 ? shape_.size() + i : i); }
  Eigen::Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Vec& data() { return data_; }
  const Vec& data() const { return data_; }
  S* ptr() { return data_.data(); }
  const S* ptr() const { return data_.data(); }
  S& operator[](Eigen::Index i) { return data_[i]; }
  S operator[](Eigen::Index i) const { return data_[i]; }

  bool has_grad() const { return grad_.size() == data_.size() && data_.size() > 0; }
  /// Allocates (zeroed) on first use.
  Vec& grad();
  const Vec& grad() const { return grad_; }
  void zero_grad();
  void drop_grad() { grad_.resize(0); }

  /// Row-major (rows x cols) view; rows * cols must equal size().
  MatMap matrix(Eigen::Index rows, Eigen::Index cols);
  ConstMatMap matrix(Eigen::Index rows, Eigen::Index cols) const;

  /// Same data under another shape with equal element count.
  Tensor reshaped(Shape shape) const;

  /// Throws NonFiniteError naming `op`.
  void check_finite(std::string_view op) const;

  template <class T>
  Tensor<T> cast() const {
    return Tensor<T>(shape_, data_.template cast<T>());
  }

 private:
  Shape shape_;
  Vec data_;
  Vec grad_;
};

/// Throws ShapeError unless `t` has exactly `expected` (entries of -1 match anything).
template <class S>
void expect_shape(const Tensor<S>& t, std::initializer_list<int> expected, std::string_view what);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace svrt::nn
