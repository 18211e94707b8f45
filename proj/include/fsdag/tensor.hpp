#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fsdag {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

inline Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

/// Dense row-major tensor. Rank 0 (empty shape) holds a single scalar.
template <typename Scalar>
class Tensor {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatrixMap = Eigen::Map<RowMatrix>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix>;

  Tensor() : values_(Array::Zero(1)) {}

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    for (Index d : shape_) {
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension in " + shape_string(shape_));
    }
    values_ = Array::Zero(shape_size(shape_));
  }

  Tensor(Shape shape, Array values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (shape_size(shape_) != values_.size()) {
      throw std::invalid_argument("Tensor: shape " + shape_string(shape_) + " does not match " +
                                  std::to_string(values_.size()) + " values");
    }
  }

  Tensor(Shape shape, std::initializer_list<Scalar> values) : shape_(std::move(shape)) {
    if (shape_size(shape_) != static_cast<Index>(values.size())) {
      throw std::invalid_argument("Tensor: shape " + shape_string(shape_) + " does not match " +
                                  std::to_string(values.size()) + " values");
    }
    values_.resize(static_cast<Index>(values.size()));
    std::copy(values.begin(), values.end(), values_.data());
  }

  static Tensor scalar(Scalar v) { return Tensor(Shape{}, {v}); }

  static Tensor filled(Shape shape, Scalar v) {
    Tensor t(std::move(shape));
    t.values_.setConstant(v);
    return t;
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  Index size() const { return values_.size(); }
  bool empty() const { return values_.size() == 0; }

  Array& values() { return values_; }
  const Array& values() const { return values_; }
  Scalar* data() { return values_.data(); }
  const Scalar* data() const { return values_.data(); }

  Scalar& operator[](Index i) { return values_[i]; }
  Scalar operator[](Index i) const { return values_[i]; }

  Scalar item() const {
    if (size() != 1) throw std::invalid_argument("Tensor::item on tensor of shape " + shape_string(shape_));
    return values_[0];
  }

  /// Row-major matrix view; `rows * cols` must equal size().
  MatrixMap matrix(Index rows, Index cols) { return MatrixMap(values_.data(), rows, cols); }
  ConstMatrixMap matrix(Index rows, Index cols) const { return ConstMatrixMap(values_.data(), rows, cols); }
  MatrixMap matrix() { return matrix(dim(0), size() / std::max<Index>(dim(0), 1)); }
  ConstMatrixMap matrix() const { return matrix(dim(0), size() / std::max<Index>(dim(0), 1)); }

  Tensor reshaped(Shape shape) const {
    if (shape_size(shape) != size()) {
      throw std::invalid_argument("reshape: " + shape_string(shape_) + " -> " + shape_string(shape));
    }
    return Tensor(std::move(shape), values_);
  }

  bool all_finite() const { return values_.isFinite().all(); }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, values_.template cast<Other>());
  }

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && (values_ == other.values_).all();
  }

 private:
  Shape shape_;
  Array values_;
};

}  // namespace fsdag
