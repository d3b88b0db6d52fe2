#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "footandball/errors.hpp"
#include "footandball/pool_allocator.hpp"

namespace fnb {

#ifdef FNB_TRAIN_DOUBLE
using Scalar = double;
#else
using Scalar = float;
#endif

/// NCHW extents.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense rank-4 array in row-major NCHW order. Value semantics; copies are deep.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  using Storage = std::vector<T, PoolAllocator<T>>;

  Tensor() : data_(1, T(0)) {}
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, Storage data);
  Tensor(Shape shape, const std::vector<T>& data);

  static Tensor scalar(T value) { return Tensor(Shape{1, 1, 1, 1}, value); }
  /// Storage left uninitialized; the caller overwrites every element.
  static Tensor empty(Shape shape) { return Tensor(shape, Storage(shape.numel())); }

  const Shape& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }

  std::span<const T> data() const { return data_; }
  std::span<T> data() { return data_; }
  const Storage& vec() const { return data_; }

  T* ptr() { return data_.data(); }
  const T* ptr() const { return data_.data(); }

  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  T& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  T at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

  T& operator[](std::size_t i) { return data_[i]; }
  T operator[](std::size_t i) const { return data_[i]; }

  /// Pointer to the (n, c) plane.
  T* plane(int n, int c) { return data_.data() + index(n, c, 0, 0); }
  const T* plane(int n, int c) const { return data_.data() + index(n, c, 0, 0); }

  void fill(T value);
  bool all_finite() const;

  template <typename U>
  Tensor<U> cast() const {
    typename Tensor<U>::Storage out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

 private:
  Shape shape_{1, 1, 1, 1};
  Storage data_;
};

/// Throws ShapeError naming both shapes when `a != b`.
void require_same_shape(const Shape& a, const Shape& b, const char* op);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace fnb
