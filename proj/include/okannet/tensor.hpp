#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "okannet/error.hpp"
#include "okannet/shape.hpp"

namespace okannet {

// Dense row-major tensor. Default-constructed tensors are empty and only
// valid as placeholders (layer caches before the first forward).
template <typename T>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(Shape shape, T fill = T(0))
      : shape_(std::move(shape)),
        data_(static_cast<size_t>(shape_.numel()), fill) {
    if (shape_.rank() == 0)
      throw ShapeError("tensor needs a non-empty shape");
  }

  const Shape& shape() const { return shape_; }
  int64_t size() const { return shape_.rank() == 0 ? 0 : shape_.numel(); }
  bool empty() const { return shape_.rank() == 0; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // Bounds-checked multi-index access.
  template <typename... Ix>
  T& at(Ix... ix) {
    return data_[static_cast<size_t>(flat_index(ix...))];
  }
  template <typename... Ix>
  const T& at(Ix... ix) const {
    return data_[static_cast<size_t>(flat_index(ix...))];
  }

  void fill(T v) {
    for (auto& x : data_) x = v;
  }

  bool all_finite() const {
    for (T x : data_)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  // Reinterprets the buffer under a new shape with the same element count.
  TensorT reshaped(Shape s) const {
    if (s.numel() != shape_.numel())
      throw ShapeError("reshape " + shape_.str() + " -> " + s.str() +
                       " changes element count");
    TensorT out;
    out.shape_ = std::move(s);
    out.data_ = data_;
    return out;
  }

  bool operator==(const TensorT&) const = default;

 private:
  template <typename... Ix>
  int64_t flat_index(Ix... ix) const {
    static_assert(sizeof...(Ix) > 0);
    constexpr int n = sizeof...(Ix);
    if (n != shape_.rank())
      throw ShapeError("index rank mismatch for shape " + shape_.str());
    const int64_t idx[n] = {static_cast<int64_t>(ix)...};
    int64_t flat = 0;
    for (int d = 0; d < n; ++d) {
      if (idx[d] < 0 || idx[d] >= shape_[d])
        throw ShapeError("index out of range for shape " + shape_.str());
      flat = flat * shape_[d] + idx[d];
    }
    return flat;
  }

  Shape shape_;
  std::vector<T> data_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

template <typename T>
TensorT<T> tensor_new(const Shape& shape, T fill = T(0)) {
  return TensorT<T>(shape, fill);
}

enum class ElemOp { add, sub, mul };

template <typename T>
TensorT<T> elementwise(const TensorT<T>& a, const TensorT<T>& b, ElemOp op) {
  if (a.shape() != b.shape())
    throw ShapeError("elementwise shape mismatch: " + a.shape().str() +
                     " vs " + b.shape().str());
  TensorT<T> out(a.shape());
  const int64_t n = a.size();
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  switch (op) {
    case ElemOp::add:
      for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
      break;
    case ElemOp::sub:
      for (int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
      break;
    case ElemOp::mul:
      for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
      break;
  }
  return out;
}

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  return elementwise(a, b, ElemOp::add);
}
template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
  return elementwise(a, b, ElemOp::sub);
}
template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
  return elementwise(a, b, ElemOp::mul);
}

// C[i,j] = sum_k A[i,k] * B[k,j], accumulated in k order.
template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.shape().rank() != 2 || b.shape().rank() != 2)
    throw ShapeError("matmul expects rank-2 operands");
  if (a.shape()[1] != b.shape()[0])
    throw ShapeError("matmul inner dim mismatch: " + a.shape().str() + " x " +
                     b.shape().str());
  const int64_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  TensorT<T> c(Shape{m, n});
  const T* pa = a.data();
  const T* pb = b.data();
  T* pc = c.data();
  for (int64_t i = 0; i < m; ++i) {
    T* crow = pc + i * n;
    for (int64_t kk = 0; kk < k; ++kk) {
      const T av = pa[i * k + kk];
      const T* brow = pb + kk * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

// Zero-pads the two innermost dims of a rank-3 or rank-4 tensor.
template <typename T>
TensorT<T> pad2d(const TensorT<T>& x, int64_t pad) {
  if (pad < 0) throw ShapeError("pad2d pad must be >= 0");
  const int r = x.shape().rank();
  if (r != 3 && r != 4) throw ShapeError("pad2d expects rank-3 or rank-4");
  const int64_t h = x.shape()[r - 2], w = x.shape()[r - 1];
  const int64_t outer = x.shape().numel() / (h * w);
  const int64_t hp = h + 2 * pad, wp = w + 2 * pad;
  std::vector<int64_t> dims = x.shape().dims();
  dims[static_cast<size_t>(r - 2)] = hp;
  dims[static_cast<size_t>(r - 1)] = wp;
  TensorT<T> out(Shape{dims});
  const T* px = x.data();
  T* po = out.data();
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t i = 0; i < h; ++i) {
      const T* src = px + (o * h + i) * w;
      T* dst = po + (o * hp + i + pad) * wp + pad;
      for (int64_t j = 0; j < w; ++j) dst[j] = src[j];
    }
  return out;
}

// Index of the max along `axis`; ties resolve to the lowest index.
// Results are in row-major order of the reduced shape.
template <typename T>
std::vector<int64_t> argmax_axis(const TensorT<T>& x, int axis) {
  const int r = x.shape().rank();
  if (axis < 0 || axis >= r) throw ShapeError("argmax axis out of range");
  int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= x.shape()[d];
  for (int d = axis + 1; d < r; ++d) inner *= x.shape()[d];
  const int64_t len = x.shape()[axis];
  std::vector<int64_t> out(static_cast<size_t>(outer * inner));
  const T* px = x.data();
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t in = 0; in < inner; ++in) {
      int64_t best = 0;
      T best_v = px[(o * len) * inner + in];
      for (int64_t i = 1; i < len; ++i) {
        const T v = px[(o * len + i) * inner + in];
        if (v > best_v) {
          best_v = v;
          best = i;
        }
      }
      out[static_cast<size_t>(o * inner + in)] = best;
    }
  return out;
}

}  // namespace okannet
