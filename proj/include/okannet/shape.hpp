#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "okannet/error.hpp"

namespace okannet {

class Shape {
 public:
  Shape() = default;

  Shape(std::initializer_list<int64_t> dims) : dims_(dims) { validate(); }

  explicit Shape(std::vector<int64_t> dims) : dims_(std::move(dims)) {
    validate();
  }

  int rank() const { return static_cast<int>(dims_.size()); }

  int64_t operator[](int i) const { return dims_[static_cast<size_t>(i)]; }

  const std::vector<int64_t>& dims() const { return dims_; }

  int64_t numel() const { return numel_; }

  bool operator==(const Shape&) const = default;

  std::string str() const {
    std::string s = "[";
    for (size_t i = 0; i < dims_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(dims_[i]);
    }
    s += "]";
    return s;
  }

 private:
  void validate() {
    if (dims_.empty()) throw ShapeError("shape must have at least one dim");
    numel_ = 1;
    for (int64_t d : dims_) {
      if (d < 1) throw ShapeError("shape dims must be positive, got " + str_of(d));
      if (__builtin_mul_overflow(numel_, d, &numel_))
        throw ShapeError("shape element count overflows");
    }
  }

  static std::string str_of(int64_t d) { return std::to_string(d); }

  std::vector<int64_t> dims_;
  int64_t numel_ = 0;
};

}  // namespace okannet
