#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "okannet/error.hpp"
#include "okannet/layers.hpp"
#include "okannet/tensor.hpp"

namespace okannet {

// Classical momentum: v <- momentum * v - lr * grad; param <- param + v.
// Velocities start at zero and are laid out to match the first parameter
// list passed to step; later calls must pass the same shapes in the same
// order.
template <typename T>
class SgdMomentum {
 public:
  explicit SgdMomentum(double lr, double momentum = 0.9)
      : lr_(lr), momentum_(momentum) {
    if (lr <= 0.0) throw ConfigError("learning rate must be > 0");
    if (momentum < 0.0 || momentum >= 1.0)
      throw ConfigError("momentum must be in [0,1)");
  }

  double lr() const { return lr_; }
  double momentum() const { return momentum_; }

  void step(std::span<ParamView<T>> params) {
    if (velocity_.empty()) {
      velocity_.reserve(params.size());
      for (const auto& p : params)
        velocity_.emplace_back(p.value->shape());
    }
    if (velocity_.size() != params.size())
      throw StateError("optimizer step with a different parameter list");
    for (size_t i = 0; i < params.size(); ++i) {
      ParamView<T>& p = params[i];
      TensorT<T>& v = velocity_[i];
      if (v.shape() != p.value->shape() ||
          p.grad->shape() != p.value->shape())
        throw ShapeError("optimizer shape mismatch for parameter " + p.name);
      T* pv = v.data();
      T* pw = p.value->data();
      const T* pg = p.grad->data();
      const int64_t n = v.size();
      const T mom = static_cast<T>(momentum_);
      const T lr = static_cast<T>(lr_);
      for (int64_t j = 0; j < n; ++j) {
        pv[j] = mom * pv[j] - lr * pg[j];
        pw[j] += pv[j];
      }
    }
  }

  const std::vector<TensorT<T>>& velocity() const { return velocity_; }

 private:
  double lr_, momentum_;
  std::vector<TensorT<T>> velocity_;
};

}  // namespace okannet
