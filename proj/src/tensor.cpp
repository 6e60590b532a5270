#include "svrt/tensor.hpp"

#include <numeric>

namespace svrt::nn {

std::string shape_string(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (int d : s) {
    if (d < 0) throw ShapeError("negative dimension in " + shape_string(s));
    n *= d;
  }
  return n;
}

template <class S>
Tensor<S>::Tensor(Shape shape, S fill) : shape_(std::move(shape)) {
  data_ = Vec::Constant(shape_numel(shape_), fill);
}

template <class S>
Tensor<S>::Tensor(Shape shape, Vec data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != data_.size())
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_string(shape_));
}

template <class S>
typename Tensor<S>::Vec& Tensor<S>::grad() {
  if (grad_.size() != data_.size()) grad_ = Vec::Zero(data_.size());
  return grad_;
}

template <class S>
void Tensor<S>::zero_grad() {
  if (grad_.size() != data_.size())
    grad_ = Vec::Zero(data_.size());
  else
    grad_.setZero();
}

template <class S>
typename Tensor<S>::MatMap Tensor<S>::matrix(Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != data_.size())
    throw ShapeError("cannot view " + shape_string(shape_) + " as " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  return MatMap(data_.data(), rows, cols);
}

template <class S>
typename Tensor<S>::ConstMatMap Tensor<S>::matrix(Eigen::Index rows, Eigen::Index cols) const {
  if (rows * cols != data_.size())
    throw ShapeError("cannot view " + shape_string(shape_) + " as " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  return ConstMatMap(data_.data(), rows, cols);
}

template <class S>
Tensor<S> Tensor<S>::reshaped(Shape shape) const {
  if (shape_numel(shape) != data_.size())
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  return Tensor(std::move(shape), data_);
}

template <class S>
void Tensor<S>::check_finite(std::string_view op) const {
  if (!data_.allFinite()) throw NonFiniteError("non-finite value produced by " + std::string(op));
}

template <class S>
void expect_shape(const Tensor<S>& t, std::initializer_list<int> expected, std::string_view what) {
  bool ok = t.rank() == static_cast<int>(expected.size());
  int i = 0;
  for (int e : expected) {
    if (!ok) break;
    ok = e < 0 || t.dim(i) == e;
    ++i;
  }
  if (!ok) {
    std::string want = "[";
    i = 0;
    for (int e : expected) want += (i++ ? "," : "") + (e < 0 ? std::string("*") : std::to_string(e));
    throw ShapeError(std::string(what) + ": got shape " + shape_string(t.shape()) + ", expected " + want + "]");
  }
}

template class Tensor<float>;
template class Tensor<double>;
template void expect_shape(const Tensor<float>&, std::initializer_list<int>, std::string_view);
template void expect_shape(const Tensor<double>&, std::initializer_list<int>, std::string_view);

}  // namespace svrt::nn
