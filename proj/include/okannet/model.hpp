#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "okannet/error.hpp"
#include "okannet/layers.hpp"
#include "okannet/rng.hpp"
#include "okannet/tensor.hpp"

namespace okannet {

enum class LayerKind : uint8_t {
  conv2d = 1,
  batchnorm = 2,
  relu = 3,
  maxpool2d = 4,
  flatten = 5,
  dense = 6,
  dropout = 7,
  softmax = 8,
};

// Serializable layer descriptor. a/b hold (in,out) channels or features;
// rate is the dropout rate.
struct LayerSpec {
  LayerKind kind;
  int64_t a = 0;
  int64_t b = 0;
  double rate = 0.0;
};

struct ModelSpec {
  int64_t num_classes = 0;
  int64_t image_size = 0;
  std::vector<LayerSpec> layers;
};

// Three conv/bn/relu/pool stages (16, 32, 64 filters) over [3,S,S] input,
// then dense 128, dropout 0.5 and a K-way softmax head.
inline ModelSpec okannet_spec(int64_t num_classes, int64_t image_size) {
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
  if (image_size < 8 || image_size % 8 != 0)
    throw ConfigError("image_size must be a positive multiple of 8");
  ModelSpec spec;
  spec.num_classes = num_classes;
  spec.image_size = image_size;
  int64_t channels = 3;
  for (int64_t filters : {16, 32, 64}) {
    spec.layers.push_back({LayerKind::conv2d, channels, filters, 0.0});
    spec.layers.push_back({LayerKind::batchnorm, filters, 0, 0.0});
    spec.layers.push_back({LayerKind::relu, 0, 0, 0.0});
    spec.layers.push_back({LayerKind::maxpool2d, 0, 0, 0.0});
    channels = filters;
  }
  const int64_t side = image_size / 8;
  const int64_t flat = 64 * side * side;
  spec.layers.push_back({LayerKind::flatten, 0, 0, 0.0});
  spec.layers.push_back({LayerKind::dense, flat, 128, 0.0});
  spec.layers.push_back({LayerKind::relu, 0, 0, 0.0});
  spec.layers.push_back({LayerKind::dropout, 0, 0, 0.5});
  spec.layers.push_back({LayerKind::dense, 128, num_classes, 0.0});
  spec.layers.push_back({LayerKind::softmax, 0, 0, 0.0});
  return spec;
}

template <typename T>
class Model {
 public:
  Model() = default;

  // Instantiates the spec with fan-in scaled Gaussian weights, zero biases
  // and unit batchnorm scale. Each weight tensor gets an independent
  // stream derived from (seed, layer index).
  static Model build(const ModelSpec& spec, uint64_t seed) {
    Model m;
    m.spec_ = spec;
    for (size_t i = 0; i < spec.layers.size(); ++i) {
      const LayerSpec& ls = spec.layers[i];
      switch (ls.kind) {
        case LayerKind::conv2d: {
          auto l = std::make_unique<Conv2dLayer<T>>(ls.a, ls.b);
          l->init_he(mix_seed(seed, i));
          m.layers_.push_back(std::move(l));
          break;
        }
        case LayerKind::batchnorm:
          m.layers_.push_back(std::make_unique<BatchNormLayer<T>>(ls.a));
          break;
        case LayerKind::relu:
          m.layers_.push_back(std::make_unique<ReluLayer<T>>());
          break;
        case LayerKind::maxpool2d:
          m.layers_.push_back(std::make_unique<MaxPool2dLayer<T>>());
          break;
        case LayerKind::flatten:
          m.layers_.push_back(std::make_unique<FlattenLayer<T>>());
          break;
        case LayerKind::dense: {
          auto l = std::make_unique<DenseLayer<T>>(ls.a, ls.b);
          l->init_he(mix_seed(seed, i));
          m.layers_.push_back(std::move(l));
          break;
        }
        case LayerKind::dropout:
          m.layers_.push_back(std::make_unique<DropoutLayer<T>>(ls.rate));
          break;
        case LayerKind::softmax:
          m.layers_.push_back(std::make_unique<SoftmaxLayer<T>>());
          break;
        default:
          throw ConfigError("unknown layer kind in model spec");
      }
    }
    return m;
  }

  const ModelSpec& spec() const { return spec_; }

  std::vector<Layer<T>*> layers() {
    std::vector<Layer<T>*> out;
    out.reserve(layers_.size());
    for (auto& l : layers_) out.push_back(l.get());
    return out;
  }

  TensorT<T> forward(const TensorT<T>& x, const ForwardContext& ctx) {
    TensorT<T> y = x;
    for (auto& l : layers_) y = l->forward(y, ctx);
    return y;
  }

  // Runs up to, but not including, a trailing softmax. Training pairs this
  // with the fused cross-entropy gradient.
  TensorT<T> forward_logits(const TensorT<T>& x, const ForwardContext& ctx) {
    TensorT<T> y = x;
    const size_t n = logits_depth();
    for (size_t i = 0; i < n; ++i) y = layers_[i]->forward(y, ctx);
    return y;
  }

  TensorT<T> backward_logits(const TensorT<T>& grad_logits) {
    TensorT<T> g = grad_logits;
    const size_t n = logits_depth();
    for (size_t i = n; i-- > 0;) g = layers_[i]->backward(g);
    return g;
  }

  std::vector<ParamView<T>> params() {
    std::vector<ParamView<T>> out;
    for (size_t i = 0; i < layers_.size(); ++i)
      for (auto& p : layers_[i]->params()) {
        p.name = "layer" + std::to_string(i) + "." + p.name;
        out.push_back(p);
      }
    return out;
  }

  std::vector<BufferView<T>> buffers() {
    std::vector<BufferView<T>> out;
    for (size_t i = 0; i < layers_.size(); ++i)
      for (auto& b : layers_[i]->buffers()) {
        b.name = "layer" + std::to_string(i) + "." + b.name;
        out.push_back(b);
      }
    return out;
  }

  int64_t parameter_count() {
    int64_t n = 0;
    for (const auto& p : params()) n += p.value->size();
    return n;
  }

 private:
  size_t logits_depth() {
    if (!layers_.empty() &&
        spec_.layers.back().kind == LayerKind::softmax)
      return layers_.size() - 1;
    return layers_.size();
  }

  ModelSpec spec_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

inline Model<float> build_okannet(int64_t num_classes, int64_t image_size,
                                  uint64_t seed) {
  return Model<float>::build(okannet_spec(num_classes, image_size), seed);
}

}  // namespace okannet
