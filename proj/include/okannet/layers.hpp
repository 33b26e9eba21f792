#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "okannet/error.hpp"
#include "okannet/parallel.hpp"
#include "okannet/rng.hpp"
#include "okannet/tensor.hpp"

namespace okannet {

enum class Mode { train, infer };

struct ForwardContext {
  Mode mode = Mode::infer;
  RandomEngine* rng = nullptr;
};

template <typename T>
struct ParamView {
  std::string name;
  TensorT<T>* value;
  TensorT<T>* grad;
};

template <typename T>
struct BufferView {
  std::string name;
  TensorT<T>* value;
};

// A differentiable stage. forward caches whatever backward needs; backward
// consumes the cache, fills parameter grads and returns the grad w.r.t.
// the forward input.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string name() const = 0;
  virtual TensorT<T> forward(const TensorT<T>& x, const ForwardContext& ctx) = 0;
  virtual TensorT<T> backward(const TensorT<T>& grad_out) = 0;
  virtual std::vector<ParamView<T>> params() { return {}; }
  virtual std::vector<BufferView<T>> buffers() { return {}; }
};

// Gaussian fan-in scaled init: std = sqrt(2 / fan_in).
template <typename T>
TensorT<T> he_init(const Shape& shape, int64_t fan_in, uint64_t seed) {
  if (fan_in < 1) throw ConfigError("he_init fan_in must be >= 1");
  TensorT<T> out(shape);
  RandomEngine rng(seed);
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  T* p = out.data();
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i)
    p[i] = static_cast<T>(rng.normal(0.0, stddev));
  return out;
}

namespace detail {

// C[M x N] = A[M x K] . B[K x N]; k accumulates in ascending order.
template <typename T>
void gemm(int64_t m, int64_t k, int64_t n, const T* a, const T* b, T* c) {
  for (int64_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    for (int64_t j = 0; j < n; ++j) crow[j] = T(0);
    for (int64_t kk = 0; kk < k; ++kk) {
      const T av = a[i * k + kk];
      const T* brow = b + kk * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[M x N] = A[M x K] . B[N x K]^T (row-dot-row).
template <typename T>
void gemm_abt(int64_t m, int64_t k, int64_t n, const T* a, const T* b, T* c) {
  for (int64_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    for (int64_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T acc = T(0);
      for (int64_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      c[i * n + j] = acc;
    }
  }
}

// C[M x N] = A[K x M]^T . B[K x N].
template <typename T>
void gemm_atb(int64_t m, int64_t k, int64_t n, const T* a, const T* b, T* c) {
  for (int64_t i = 0; i < m * n; ++i) c[i] = T(0);
  for (int64_t kk = 0; kk < k; ++kk) {
    const T* arow = a + kk * m;
    const T* brow = b + kk * n;
    for (int64_t i = 0; i < m; ++i) {
      const T av = arow[i];
      T* crow = c + i * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// col[(ci*9 + kh*3 + kw) x (H*W)] from one padded image [C x H+2 x W+2].
template <typename T>
void im2col3x3(const T* xp, int64_t c, int64_t h, int64_t w, T* col) {
  const int64_t wp = w + 2;
  for (int64_t ci = 0; ci < c; ++ci)
    for (int64_t kh = 0; kh < 3; ++kh)
      for (int64_t kw = 0; kw < 3; ++kw) {
        T* dst = col + ((ci * 9 + kh * 3 + kw) * h) * w;
        const T* src = xp + (ci * (h + 2) + kh) * wp + kw;
        for (int64_t i = 0; i < h; ++i) {
          const T* s = src + i * wp;
          T* d = dst + i * w;
          for (int64_t j = 0; j < w; ++j) d[j] = s[j];
        }
      }
}

// Scatter-add transpose of im2col3x3 into one padded image.
template <typename T>
void col2im3x3(const T* col, int64_t c, int64_t h, int64_t w, T* xp) {
  const int64_t wp = w + 2;
  for (int64_t ci = 0; ci < c; ++ci)
    for (int64_t kh = 0; kh < 3; ++kh)
      for (int64_t kw = 0; kw < 3; ++kw) {
        const T* src = col + ((ci * 9 + kh * 3 + kw) * h) * w;
        T* dst = xp + (ci * (h + 2) + kh) * wp + kw;
        for (int64_t i = 0; i < h; ++i) {
          const T* s = src + i * w;
          T* d = dst + i * wp;
          for (int64_t j = 0; j < w; ++j) d[j] += s[j];
        }
      }
}

}  // namespace detail

// 3x3 convolution, stride 1, zero padding 1 (shape preserving). The kernel
// is applied as written, without flipping.
template <typename T>
class Conv2dLayer : public Layer<T> {
 public:
  Conv2dLayer(int64_t in_channels, int64_t out_channels)
      : cin_(in_channels),
        cout_(out_channels),
        w_(Shape{out_channels, in_channels, 3, 3}),
        b_(Shape{out_channels}),
        gw_(Shape{out_channels, in_channels, 3, 3}),
        gb_(Shape{out_channels}) {}

  std::string name() const override { return "conv2d"; }

  void init_he(uint64_t seed) {
    w_ = he_init<T>(w_.shape(), cin_ * 9, seed);
    b_.fill(T(0));
  }

  TensorT<T>& weight() { return w_; }
  TensorT<T>& bias() { return b_; }

  TensorT<T> forward(const TensorT<T>& x, const ForwardContext&) override {
    check_input(x);
    const int64_t n = x.shape()[0], h = x.shape()[2], w = x.shape()[3];
    xp_ = pad2d(x, 1);
    TensorT<T> out(Shape{n, cout_, h, w});
    const int64_t kc = cin_ * 9;
    const int64_t img_in = cin_ * (h + 2) * (w + 2);
    const int64_t img_out = cout_ * h * w;
    const T* pxp = xp_.data();
    const T* pw = w_.data();
    const T* pb = b_.data();
    T* po = out.data();
    parallel_for(n, [&](int64_t nb, int64_t ne) {
      std::vector<T> col(static_cast<size_t>(kc * h * w));
      for (int64_t i = nb; i < ne; ++i) {
        detail::im2col3x3(pxp + i * img_in, cin_, h, w, col.data());
        detail::gemm(cout_, kc, h * w, pw, col.data(), po + i * img_out);
        for (int64_t c = 0; c < cout_; ++c) {
          T* row = po + i * img_out + c * h * w;
          const T bv = pb[c];
          for (int64_t j = 0; j < h * w; ++j) row[j] += bv;
        }
      }
    });
    return out;
  }

  TensorT<T> backward(const TensorT<T>& grad_out) override {
    if (xp_.empty()) throw StateError("conv2d backward before forward");
    const int64_t n = xp_.shape()[0];
    const int64_t h = xp_.shape()[2] - 2, w = xp_.shape()[3] - 2;
    if (grad_out.shape() != Shape{n, cout_, h, w})
      throw ShapeError("conv2d grad shape mismatch: " +
                       grad_out.shape().str());
    const int64_t kc = cin_ * 9;
    const int64_t img_in = cin_ * (h + 2) * (w + 2);
    const int64_t img_out = cout_ * h * w;
    TensorT<T> gx(Shape{n, cin_, h, w});
    const T* pxp = xp_.data();
    const T* pgo = grad_out.data();
    const T* pw = w_.data();
    T* pgx = gx.data();

    // Per-image weight grad slabs, reduced in image order afterwards so
    // the result is independent of the thread count.
    std::vector<T> gw_slabs(static_cast<size_t>(n * cout_ * kc));
    parallel_for(n, [&](int64_t nb, int64_t ne) {
      std::vector<T> col(static_cast<size_t>(kc * h * w));
      std::vector<T> dcol(static_cast<size_t>(kc * h * w));
      std::vector<T> dxp(static_cast<size_t>(img_in));
      for (int64_t i = nb; i < ne; ++i) {
        detail::im2col3x3(pxp + i * img_in, cin_, h, w, col.data());
        detail::gemm_abt(cout_, h * w, kc, pgo + i * img_out, col.data(),
                         gw_slabs.data() + i * cout_ * kc);
        detail::gemm_atb(kc, cout_, h * w, pw, pgo + i * img_out,
                         dcol.data());
        for (auto& v : dxp) v = T(0);
        detail::col2im3x3(dcol.data(), cin_, h, w, dxp.data());
        for (int64_t ci = 0; ci < cin_; ++ci)
          for (int64_t r = 0; r < h; ++r) {
            const T* s = dxp.data() + (ci * (h + 2) + r + 1) * (w + 2) + 1;
            T* d = pgx + ((i * cin_ + ci) * h + r) * w;
            for (int64_t j = 0; j < w; ++j) d[j] = s[j];
          }
      }
    });
    T* pgw = gw_.data();
    for (int64_t j = 0; j < cout_ * kc; ++j) pgw[j] = T(0);
    for (int64_t i = 0; i < n; ++i) {
      const T* slab = gw_slabs.data() + i * cout_ * kc;
      for (int64_t j = 0; j < cout_ * kc; ++j) pgw[j] += slab[j];
    }
    T* pgb = gb_.data();
    for (int64_t c = 0; c < cout_; ++c) pgb[c] = T(0);
    for (int64_t i = 0; i < n; ++i)
      for (int64_t c = 0; c < cout_; ++c) {
        const T* row = pgo + i * img_out + c * h * w;
        T acc = T(0);
        for (int64_t j = 0; j < h * w; ++j) acc += row[j];
        pgb[c] += acc;
      }
    return gx;
  }

  std::vector<ParamView<T>> params() override {
    return {{"weight", &w_, &gw_}, {"bias", &b_, &gb_}};
  }

 private:
  void check_input(const TensorT<T>& x) const {
    if (x.shape().rank() != 4)
      throw ShapeError("conv2d expects [N,C,H,W], got " + x.shape().str());
    if (x.shape()[1] != cin_)
      throw ShapeError("conv2d channel mismatch: expected " +
                       std::to_string(cin_) + ", got " +
                       std::to_string(x.shape()[1]));
  }

  int64_t cin_, cout_;
  TensorT<T> w_, b_, gw_, gb_;
  TensorT<T> xp_;
};

template <typename T>
class ReluLayer : public Layer<T> {
 public:
  std::string name() const override { return "relu"; }

  TensorT<T> forward(const TensorT<T>& x, const ForwardContext&) override {
    x_ = x;
    TensorT<T> out(x.shape());
    const T* px = x.data();
    T* po = out.data();
    const int64_t n = x.size();
    for (int64_t i = 0; i < n; ++i) po[i] = px[i] > T(0) ? px[i] : T(0);
    return out;
  }

  // Subgradient 0 at x == 0.
  TensorT<T> backward(const TensorT<T>& grad_out) override {
    if (x_.empty()) throw StateError("relu backward before forward");
    if (grad_out.shape() != x_.shape())
      throw ShapeError("relu grad shape mismatch");
    TensorT<T> gx(x_.shape());
    const T* px = x_.data();
    const T* pg = grad_out.data();
    T* po = gx.data();
    const int64_t n = x_.size();
    for (int64_t i = 0; i < n; ++i) po[i] = px[i] > T(0) ? pg[i] : T(0);
    return gx;
  }

 private:
  TensorT<T> x_;
};

// 2x2 window, stride 2. Odd trailing rows/cols are dropped. Ties take the
// first element in row-major window order.
template <typename T>
class MaxPool2dLayer : public Layer<T> {
 public:
  std::string name() const override { return "maxpool2d"; }

  TensorT<T> forward(const TensorT<T>& x, const ForwardContext&) override {
    if (x.shape().rank() != 4)
      throw ShapeError("maxpool2d expects [N,C,H,W], got " + x.shape().str());
    const int64_t h = x.shape()[2], w = x.shape()[3];
    if (h < 2 || w < 2)
      throw ShapeError("maxpool2d needs H,W >= 2, got " + x.shape().str());
    const int64_t n = x.shape()[0], c = x.shape()[1];
    const int64_t ho = h / 2, wo = w / 2;
    in_shape_ = x.shape();
    TensorT<T> out(Shape{n, c, ho, wo});
    argmax_.assign(static_cast<size_t>(out.size()), 0);
    const T* px = x.data();
    T* po = out.data();
    for (int64_t nc = 0; nc < n * c; ++nc) {
      const T* plane = px + nc * h * w;
      T* oplane = po + nc * ho * wo;
      int64_t* aplane = argmax_.data() + nc * ho * wo;
      for (int64_t i = 0; i < ho; ++i)
        for (int64_t j = 0; j < wo; ++j) {
          const int64_t base = (2 * i) * w + 2 * j;
          int64_t best = base;
          T best_v = plane[base];
          const int64_t cand[3] = {base + 1, base + w, base + w + 1};
          for (int64_t k : cand)
            if (plane[k] > best_v) {
              best_v = plane[k];
              best = k;
            }
          oplane[i * wo + j] = best_v;
          aplane[i * wo + j] = nc * h * w + best;
        }
    }
    return out;
  }

  TensorT<T> backward(const TensorT<T>& grad_out) override {
    if (in_shape_.rank() == 0)
      throw StateError("maxpool2d backward before forward");
    const int64_t ho = in_shape_[2] / 2, wo = in_shape_[3] / 2;
    if (grad_out.shape() != Shape{in_shape_[0], in_shape_[1], ho, wo})
      throw ShapeError("maxpool2d grad shape mismatch");
    TensorT<T> gx(in_shape_);
    T* pgx = gx.data();
    const T* pg = grad_out.data();
    const int64_t n = grad_out.size();
    for (int64_t i = 0; i < n; ++i)
      pgx[argmax_[static_cast<size_t>(i)]] += pg[i];
    return gx;
  }

 private:
  Shape in_shape_;
  std::vector<int64_t> argmax_;
};

// Per-channel batch normalization over [N,C,H,W] with biased batch
// variance. Train mode uses batch statistics and updates running stats
// via r <- (1 - momentum) * r + momentum * batch_stat; infer mode
// normalizes with the running stats.
template <typename T>
class BatchNormLayer : public Layer<T> {
 public:
  explicit BatchNormLayer(int64_t channels, double eps = 1e-5,
                          double momentum = 0.1)
      : c_(channels),
        eps_(eps),
        momentum_(momentum),
        gamma_(Shape{channels}, T(1)),
        beta_(Shape{channels}),
        ggamma_(Shape{channels}),
        gbeta_(Shape{channels}),
        running_mean_(Shape{channels}, T(0)),
        running_var_(Shape{channels}, T(1)) {
    if (eps <= 0.0) throw ConfigError("batchnorm eps must be > 0");
    if (momentum < 0.0 || momentum > 1.0)
      throw ConfigError("batchnorm momentum must be in [0,1]");
  }

  std::string name() const override { return "batchnorm"; }

  TensorT<T>& gamma() { return gamma_; }
  TensorT<T>& beta() { return beta_; }
  TensorT<T>& running_mean() { return running_mean_; }
  TensorT<T>& running_var() { return running_var_; }

  TensorT<T> forward(const TensorT<T>& x, const ForwardContext& ctx) override {
    check_input(x);
    const int64_t n = x.shape()[0], h = x.shape()[2], w = x.shape()[3];
    const int64_t m = n * h * w;
    TensorT<T> out(x.shape());
    if (ctx.mode == Mode::train) {
      if (m < 2)
        throw ShapeError(
            "batchnorm train mode needs at least 2 values per channel");
      xhat_ = TensorT<T>(x.shape());
      invstd_.assign(static_cast<size_t>(c_), 0.0);
      trained_ = true;
      const T* px = x.data();
      T* pxh = xhat_.data();
      T* po = out.data();
      parallel_for(c_, [&](int64_t cb, int64_t ce) {
        for (int64_t c = cb; c < ce; ++c) {
          double sum = 0.0;
          for_each_in_channel(px, c, n, h, w,
                              [&](const T* p, int64_t len) {
                                for (int64_t j = 0; j < len; ++j)
                                  sum += static_cast<double>(p[j]);
                              });
          const double mean = sum / static_cast<double>(m);
          double var_sum = 0.0;
          for_each_in_channel(px, c, n, h, w,
                              [&](const T* p, int64_t len) {
                                for (int64_t j = 0; j < len; ++j) {
                                  const double d =
                                      static_cast<double>(p[j]) - mean;
                                  var_sum += d * d;
                                }
                              });
          const double var = var_sum / static_cast<double>(m);
          const double invstd = 1.0 / std::sqrt(var + eps_);
          invstd_[static_cast<size_t>(c)] = invstd;
          const double g = static_cast<double>(gamma_[c]);
          const double be = static_cast<double>(beta_[c]);
          const int64_t hw = h * w;
          for (int64_t i = 0; i < n; ++i) {
            const T* p = px + (i * c_ + c) * hw;
            T* ph = pxh + (i * c_ + c) * hw;
            T* pp = po + (i * c_ + c) * hw;
            for (int64_t j = 0; j < hw; ++j) {
              const double xh = (static_cast<double>(p[j]) - mean) * invstd;
              ph[j] = static_cast<T>(xh);
              pp[j] = static_cast<T>(g * xh + be);
            }
          }
          running_mean_[c] = static_cast<T>(
              (1.0 - momentum_) * static_cast<double>(running_mean_[c]) +
              momentum_ * mean);
          running_var_[c] = static_cast<T>(
              (1.0 - momentum_) * static_cast<double>(running_var_[c]) +
              momentum_ * var);
        }
      });
    } else {
      trained_ = false;
      const T* px = x.data();
      T* po = out.data();
      const int64_t hw = h * w;
      for (int64_t i = 0; i < n; ++i)
        for (int64_t c = 0; c < c_; ++c) {
          const double mean = static_cast<double>(running_mean_[c]);
          const double invstd =
              1.0 / std::sqrt(static_cast<double>(running_var_[c]) + eps_);
          const double g = static_cast<double>(gamma_[c]);
          const double be = static_cast<double>(beta_[c]);
          const T* p = px + (i * c_ + c) * hw;
          T* pp = po + (i * c_ + c) * hw;
          for (int64_t j = 0; j < hw; ++j)
            pp[j] = static_cast<T>(
                g * ((static_cast<double>(p[j]) - mean) * invstd) + be);
        }
    }
    return out;
  }

  TensorT<T> backward(const TensorT<T>& grad_out) override {
    if (xhat_.empty() || !trained_)
      throw StateError("batchnorm backward requires a train-mode forward");
    if (grad_out.shape() != xhat_.shape())
      throw ShapeError("batchnorm grad shape mismatch");
    const int64_t n = xhat_.shape()[0], h = xhat_.shape()[2],
                  w = xhat_.shape()[3];
    const int64_t m = n * h * w;
    TensorT<T> gx(xhat_.shape());
    const T* pxh = xhat_.data();
    const T* pg = grad_out.data();
    T* pgx = gx.data();
    T* pgg = ggamma_.data();
    T* pgb = gbeta_.data();
    parallel_for(c_, [&](int64_t cb, int64_t ce) {
      for (int64_t c = cb; c < ce; ++c) {
        double sum_g = 0.0, sum_gxh = 0.0;
        const int64_t hw = h * w;
        for (int64_t i = 0; i < n; ++i) {
          const T* g = pg + (i * c_ + c) * hw;
          const T* xh = pxh + (i * c_ + c) * hw;
          for (int64_t j = 0; j < hw; ++j) {
            sum_g += static_cast<double>(g[j]);
            sum_gxh += static_cast<double>(g[j]) * static_cast<double>(xh[j]);
          }
        }
        pgb[c] = static_cast<T>(sum_g);
        pgg[c] = static_cast<T>(sum_gxh);
        const double gm = static_cast<double>(gamma_[c]);
        const double invstd = invstd_[static_cast<size_t>(c)];
        const double inv_m = 1.0 / static_cast<double>(m);
        for (int64_t i = 0; i < n; ++i) {
          const T* g = pg + (i * c_ + c) * hw;
          const T* xh = pxh + (i * c_ + c) * hw;
          T* out = pgx + (i * c_ + c) * hw;
          for (int64_t j = 0; j < hw; ++j) {
            const double gj = static_cast<double>(g[j]);
            const double xhj = static_cast<double>(xh[j]);
            out[j] = static_cast<T>(
                gm * invstd *
                (gj - inv_m * sum_g - xhj * inv_m * sum_gxh));
          }
        }
      }
    });
    return gx;
  }

  std::vector<ParamView<T>> params() override {
    return {{"gamma", &gamma_, &ggamma_}, {"beta", &beta_, &gbeta_}};
  }

  std::vector<BufferView<T>> buffers() override {
    return {{"running_mean", &running_mean_}, {"running_var", &running_var_}};
  }

 private:
  void check_input(const TensorT<T>& x) const {
    if (x.shape().rank() != 4)
      throw ShapeError("batchnorm expects [N,C,H,W], got " + x.shape().str());
    if (x.shape()[1] != c_)
      throw ShapeError("batchnorm channel mismatch: expected " +
                       std::to_string(c_) + ", got " +
                       std::to_string(x.shape()[1]));
  }

  template <typename F>
  void for_each_in_channel(const T* px, int64_t c, int64_t n, int64_t h,
                           int64_t w, F&& f) const {
    const int64_t hw = h * w;
    for (int64_t i = 0; i < n; ++i) f(px + (i * c_ + c) * hw, hw);
  }

  int64_t c_;
  double eps_, momentum_;
  TensorT<T> gamma_, beta_, ggamma_, gbeta_;
  TensorT<T> running_mean_, running_var_;
  TensorT<T> xhat_;
  std::vector<double> invstd_;
  bool trained_ = false;
};

template <typename T>
class FlattenLayer : public Layer<T> {
 public:
  std::string name() const override { return "flatten"; }

  TensorT<T> forward(const TensorT<T>& x, const ForwardContext&) override {
    if (x.shape().rank() < 2)
      throw ShapeError("flatten expects rank >= 2, got " + x.shape().str());
    in_shape_ = x.shape();
    return x.reshaped(Shape{x.shape()[0], x.shape().numel() / x.shape()[0]});
  }

  TensorT<T> backward(const TensorT<T>& grad_out) override {
    if (in_shape_.rank() == 0)
      throw StateError("flatten backward before forward");
    return grad_out.reshaped(in_shape_);
  }

 private:
  Shape in_shape_;
};

// Fully connected: out = x . W + b with W[din, dout].
template <typename T>
class DenseLayer : public Layer<T> {
 public:
  DenseLayer(int64_t in_features, int64_t out_features)
      : din_(in_features),
        dout_(out_features),
        w_(Shape{in_features, out_features}),
        b_(Shape{out_features}),
        gw_(Shape{in_features, out_features}),
        gb_(Shape{out_features}) {}

  std::string name() const override { return "dense"; }

  void init_he(uint64_t seed) {
    w_ = he_init<T>(w_.shape(), din_, seed);
    b_.fill(T(0));
  }

  TensorT<T>& weight() { return w_; }
  TensorT<T>& bias() { return b_; }

  TensorT<T> forward(const TensorT<T>& x, const ForwardContext&) override {
    if (x.shape().rank() != 2 || x.shape()[1] != din_)
      throw ShapeError("dense expects [N," + std::to_string(din_) +
                       "], got " + x.shape().str());
    x_ = x;
    const int64_t n = x.shape()[0];
    TensorT<T> out(Shape{n, dout_});
    detail::gemm(n, din_, dout_, x.data(), w_.data(), out.data());
    T* po = out.data();
    const T* pb = b_.data();
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < dout_; ++j) po[i * dout_ + j] += pb[j];
    return out;
  }

  TensorT<T> backward(const TensorT<T>& grad_out) override {
    if (x_.empty()) throw StateError("dense backward before forward");
    const int64_t n = x_.shape()[0];
    if (grad_out.shape() != Shape{n, dout_})
      throw ShapeError("dense grad shape mismatch");
    detail::gemm_atb(din_, n, dout_, x_.data(), grad_out.data(), gw_.data());
    T* pgb = gb_.data();
    const T* pg = grad_out.data();
    for (int64_t j = 0; j < dout_; ++j) pgb[j] = T(0);
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < dout_; ++j) pgb[j] += pg[i * dout_ + j];
    TensorT<T> gx(Shape{n, din_});
    detail::gemm_abt(n, dout_, din_, grad_out.data(), w_.data(), gx.data());
    return gx;
  }

  std::vector<ParamView<T>> params() override {
    return {{"weight", &w_, &gw_}, {"bias", &b_, &gb_}};
  }

 private:
  int64_t din_, dout_;
  TensorT<T> w_, b_, gw_, gb_;
  TensorT<T> x_;
};

// Inverted dropout: kept activations are scaled by 1/(1-rate) during
// training; inference is the identity.
template <typename T>
class DropoutLayer : public Layer<T> {
 public:
  explicit DropoutLayer(double rate) : rate_(rate) {
    if (rate < 0.0 || rate >= 1.0)
      throw ConfigError("dropout rate must be in [0,1)");
  }

  std::string name() const override { return "dropout"; }

  double rate() const { return rate_; }

  TensorT<T> forward(const TensorT<T>& x, const ForwardContext& ctx) override {
    if (ctx.mode != Mode::train || rate_ == 0.0) {
      identity_ = true;
      has_forward_ = true;
      return x;
    }
    if (!ctx.rng)
      throw StateError("dropout train-mode forward needs an rng");
    identity_ = false;
    has_forward_ = true;
    mask_ = TensorT<T>(x.shape());
    const T scale = static_cast<T>(1.0 / (1.0 - rate_));
    T* pm = mask_.data();
    const int64_t n = x.size();
    for (int64_t i = 0; i < n; ++i)
      pm[i] = ctx.rng->uniform01() >= rate_ ? scale : T(0);
    TensorT<T> out(x.shape());
    const T* px = x.data();
    T* po = out.data();
    for (int64_t i = 0; i < n; ++i) po[i] = px[i] * pm[i];
    return out;
  }

  TensorT<T> backward(const TensorT<T>& grad_out) override {
    if (!has_forward_) throw StateError("dropout backward before forward");
    if (identity_) return grad_out;
    if (grad_out.shape() != mask_.shape())
      throw ShapeError("dropout grad shape mismatch");
    return mul(grad_out, mask_);
  }

 private:
  double rate_;
  TensorT<T> mask_;
  bool identity_ = false;
  bool has_forward_ = false;
};

// Row-wise softmax over [N,K] with max subtraction.
template <typename T>
class SoftmaxLayer : public Layer<T> {
 public:
  std::string name() const override { return "softmax"; }

  TensorT<T> forward(const TensorT<T>& x, const ForwardContext&) override {
    if (x.shape().rank() != 2)
      throw ShapeError("softmax expects [N,K], got " + x.shape().str());
    const int64_t n = x.shape()[0], k = x.shape()[1];
    out_ = TensorT<T>(x.shape());
    const T* px = x.data();
    T* po = out_.data();
    for (int64_t i = 0; i < n; ++i) {
      const T* row = px + i * k;
      T* orow = po + i * k;
      double mx = static_cast<double>(row[0]);
      for (int64_t j = 1; j < k; ++j)
        mx = std::max(mx, static_cast<double>(row[j]));
      double sum = 0.0;
      for (int64_t j = 0; j < k; ++j) {
        const double e = std::exp(static_cast<double>(row[j]) - mx);
        orow[j] = static_cast<T>(e);
        sum += e;
      }
      for (int64_t j = 0; j < k; ++j)
        orow[j] = static_cast<T>(static_cast<double>(orow[j]) / sum);
    }
    return out_;
  }

  TensorT<T> backward(const TensorT<T>& grad_out) override {
    if (out_.empty()) throw StateError("softmax backward before forward");
    if (grad_out.shape() != out_.shape())
      throw ShapeError("softmax grad shape mismatch");
    const int64_t n = out_.shape()[0], k = out_.shape()[1];
    TensorT<T> gx(out_.shape());
    const T* pp = out_.data();
    const T* pg = grad_out.data();
    T* po = gx.data();
    for (int64_t i = 0; i < n; ++i) {
      const T* p = pp + i * k;
      const T* g = pg + i * k;
      T* o = po + i * k;
      double dot = 0.0;
      for (int64_t j = 0; j < k; ++j)
        dot += static_cast<double>(p[j]) * static_cast<double>(g[j]);
      for (int64_t j = 0; j < k; ++j)
        o[j] = static_cast<T>(static_cast<double>(p[j]) *
                              (static_cast<double>(g[j]) - dot));
    }
    return gx;
  }

 private:
  TensorT<T> out_;
};

// y = inner(x) + x. The inner chain must preserve shape.
template <typename T>
class ResidualBlock : public Layer<T> {
 public:
  explicit ResidualBlock(std::vector<std::unique_ptr<Layer<T>>> inner)
      : inner_(std::move(inner)) {
    if (inner_.empty())
      throw ConfigError("residual block needs at least one inner layer");
  }

  std::string name() const override { return "residual"; }

  TensorT<T> forward(const TensorT<T>& x, const ForwardContext& ctx) override {
    TensorT<T> y = x;
    for (auto& l : inner_) y = l->forward(y, ctx);
    if (y.shape() != x.shape())
      throw ShapeError("residual inner chain changed shape " +
                       x.shape().str() + " -> " + y.shape().str());
    has_forward_ = true;
    return add(y, x);
  }

  TensorT<T> backward(const TensorT<T>& grad_out) override {
    if (!has_forward_) throw StateError("residual backward before forward");
    TensorT<T> g = grad_out;
    for (auto it = inner_.rbegin(); it != inner_.rend(); ++it)
      g = (*it)->backward(g);
    return add(g, grad_out);
  }

  std::vector<ParamView<T>> params() override {
    std::vector<ParamView<T>> out;
    for (size_t i = 0; i < inner_.size(); ++i)
      for (auto& p : inner_[i]->params()) {
        p.name = "inner" + std::to_string(i) + "." + p.name;
        out.push_back(p);
      }
    return out;
  }

  std::vector<BufferView<T>> buffers() override {
    std::vector<BufferView<T>> out;
    for (size_t i = 0; i < inner_.size(); ++i)
      for (auto& b : inner_[i]->buffers()) {
        b.name = "inner" + std::to_string(i) + "." + b.name;
        out.push_back(b);
      }
    return out;
  }

  std::vector<std::unique_ptr<Layer<T>>>& inner() { return inner_; }

 private:
  std::vector<std::unique_ptr<Layer<T>>> inner_;
  bool has_forward_ = false;
};

}  // namespace okannet
