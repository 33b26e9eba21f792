#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "okannet/error.hpp"
#include "okannet/tensor.hpp"

namespace okannet {

template <typename T>
struct LossValue {
  double mean_loss = 0.0;
  TensorT<T> grad_logits;
};

// Mean softmax cross-entropy over a batch of logits [N,K], fused with its
// gradient (softmax(logits) - onehot) / N. The per-row loss is computed
// through log-sum-exp with max subtraction.
template <typename T>
LossValue<T> cross_entropy(const TensorT<T>& logits,
                           std::span<const int32_t> labels) {
  if (logits.shape().rank() != 2)
    throw ShapeError("cross_entropy expects [N,K], got " +
                     logits.shape().str());
  const int64_t n = logits.shape()[0], k = logits.shape()[1];
  if (static_cast<int64_t>(labels.size()) != n)
    throw ShapeError("cross_entropy label count mismatch: " +
                     std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  for (int32_t y : labels)
    if (y < 0 || y >= k)
      throw DataError("cross_entropy label " + std::to_string(y) +
                      " out of range [0," + std::to_string(k) + ")");
  LossValue<T> out;
  out.grad_logits = TensorT<T>(logits.shape());
  const T* px = logits.data();
  T* pg = out.grad_logits.data();
  double loss_sum = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int64_t i = 0; i < n; ++i) {
    const T* row = px + i * k;
    T* grow = pg + i * k;
    double mx = static_cast<double>(row[0]);
    for (int64_t j = 1; j < k; ++j)
      mx = std::max(mx, static_cast<double>(row[j]));
    double sum = 0.0;
    for (int64_t j = 0; j < k; ++j)
      sum += std::exp(static_cast<double>(row[j]) - mx);
    const double lse = mx + std::log(sum);
    loss_sum += lse - static_cast<double>(row[labels[static_cast<size_t>(i)]]);
    for (int64_t j = 0; j < k; ++j) {
      const double p = std::exp(static_cast<double>(row[j]) - lse);
      const double onehot =
          j == static_cast<int64_t>(labels[static_cast<size_t>(i)]) ? 1.0
                                                                    : 0.0;
      grow[j] = static_cast<T>((p - onehot) * inv_n);
    }
  }
  out.mean_loss = loss_sum * inv_n;
  return out;
}

}  // namespace okannet
