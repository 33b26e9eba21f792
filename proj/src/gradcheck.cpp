#include "okannet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "okannet/loss.hpp"
#include "okannet/model.hpp"
#include "okannet/rng.hpp"

namespace okannet {

namespace {

constexpr uint64_t kInputStream = 0x696e;
constexpr uint64_t kDirectionStream = 0x646972;
constexpr uint64_t kForwardStream = 0x6677;
constexpr uint64_t kParamStream = 0x7061;

TensorT<double> rand_tensor(const Shape& shape, uint64_t seed, double lo,
                            double hi) {
  TensorT<double> t(shape);
  RandomEngine rng(seed);
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// Uniform in [-1,-margin] u [margin,1]: keeps finite differences away
// from the relu kink.
TensorT<double> rand_tensor_margin(const Shape& shape, uint64_t seed,
                                   double margin) {
  TensorT<double> t(shape);
  RandomEngine rng(seed);
  for (int64_t i = 0; i < t.size(); ++i) {
    const double u = rng.uniform(-1.0, 1.0);
    t[i] = u >= 0.0 ? u + margin : u - margin;
  }
  return t;
}

// Redraws until every 2x2 pooling window has pairwise gaps >= 1e-3, so a
// +-h nudge cannot move an argmax.
TensorT<double> rand_tensor_pool(const Shape& shape, uint64_t seed) {
  for (uint64_t attempt = 0;; ++attempt) {
    TensorT<double> t =
        rand_tensor(shape, mix_seed(seed, attempt), -1.0, 1.0);
    const int64_t n = shape[0], c = shape[1], h = shape[2], w = shape[3];
    bool ok = true;
    const double* p = t.data();
    for (int64_t nc = 0; nc < n * c && ok; ++nc)
      for (int64_t i = 0; i + 1 < h && ok; i += 2)
        for (int64_t j = 0; j + 1 < w && ok; j += 2) {
          const double v[4] = {p[nc * h * w + i * w + j],
                               p[nc * h * w + i * w + j + 1],
                               p[nc * h * w + (i + 1) * w + j],
                               p[nc * h * w + (i + 1) * w + j + 1]};
          for (int a = 0; a < 4 && ok; ++a)
            for (int b = a + 1; b < 4; ++b)
              if (std::fabs(v[a] - v[b]) < 1e-3) {
                ok = false;
                break;
              }
        }
    if (ok) return t;
  }
}

double rel_err(double analytic, double numeric) {
  return std::fabs(analytic - numeric) /
         std::max(std::fabs(analytic) + std::fabs(numeric), 1e-6);
}

double dot_all(const TensorT<double>& a, const TensorT<double>& b) {
  double acc = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// sum(forward(x) * dir) with the forward rng stream rebuilt from seed, so
// dropout masks repeat across calls.
double objective(Layer<double>& layer, const TensorT<double>& x,
                 const TensorT<double>& dir, Mode mode, uint64_t rng_seed) {
  RandomEngine rng(rng_seed);
  ForwardContext ctx{mode, &rng};
  return dot_all(layer.forward(x, ctx), dir);
}

// Max rel err between `analytic` and central differences of `objective`
// taken by perturbing `subject` element-wise.
template <typename Objective>
double fd_max_err(TensorT<double>& subject, const TensorT<double>& analytic,
                  const GradCheckOptions& opts, Objective&& objective_fn) {
  double worst = 0.0;
  const double h = opts.step;
  for (int64_t i = 0; i < subject.size(); ++i) {
    const double orig = subject[i];
    subject[i] = orig + h;
    const double lp = objective_fn();
    subject[i] = orig - h;
    const double lm = objective_fn();
    subject[i] = orig;
    const double numeric = (lp - lm) / (2.0 * h);
    worst = std::max(worst, rel_err(analytic[i], numeric));
  }
  return worst;
}

}  // namespace

double gradcheck_layer(Layer<double>& layer, const TensorT<double>& input,
                       Mode mode, uint64_t seed,
                       const GradCheckOptions& opts) {
  const uint64_t fwd_seed = mix_seed(seed, kForwardStream);
  TensorT<double> x = input;
  {
    RandomEngine rng(fwd_seed);
    ForwardContext ctx{mode, &rng};
    const TensorT<double> probe = layer.forward(x, ctx);
    const TensorT<double> dir = rand_tensor(
        probe.shape(), mix_seed(seed, kDirectionStream), -1.0, 1.0);

    RandomEngine rng2(fwd_seed);
    ForwardContext ctx2{mode, &rng2};
    layer.forward(x, ctx2);
    const TensorT<double> grad_in = layer.backward(dir);

    double worst = fd_max_err(x, grad_in, opts, [&] {
      return objective(layer, x, dir, mode, fwd_seed);
    });
    for (auto& p : layer.params()) {
      const TensorT<double> analytic = *p.grad;
      worst = std::max(worst,
                       fd_max_err(*p.value, analytic, opts, [&] {
                         return objective(layer, x, dir, mode, fwd_seed);
                       }));
    }
    return worst;
  }
}

namespace {

double check_conv(uint64_t seed, const GradCheckOptions& opts) {
  Conv2dLayer<double> layer(2, 3);
  layer.init_he(mix_seed(seed, kParamStream));
  const auto x =
      rand_tensor(Shape{1, 2, 5, 5}, mix_seed(seed, kInputStream), -1.0, 1.0);
  return gradcheck_layer(layer, x, Mode::train, seed, opts);
}

double check_batchnorm(uint64_t seed, const GradCheckOptions& opts) {
  BatchNormLayer<double> layer(2);
  RandomEngine rng(mix_seed(seed, kParamStream));
  for (int64_t c = 0; c < 2; ++c) {
    layer.gamma()[c] = rng.uniform(0.5, 1.5);
    layer.beta()[c] = rng.uniform(-0.5, 0.5);
  }
  const auto x =
      rand_tensor(Shape{4, 2, 3, 3}, mix_seed(seed, kInputStream), -1.0, 1.0);
  return gradcheck_layer(layer, x, Mode::train, seed, opts);
}

double check_relu(uint64_t seed, const GradCheckOptions& opts) {
  ReluLayer<double> layer;
  const auto x =
      rand_tensor_margin(Shape{2, 7}, mix_seed(seed, kInputStream), 1e-2);
  return gradcheck_layer(layer, x, Mode::train, seed, opts);
}

double check_maxpool(uint64_t seed, const GradCheckOptions& opts) {
  MaxPool2dLayer<double> layer;
  const auto x = rand_tensor_pool(Shape{1, 2, 6, 6},
                                  mix_seed(seed, kInputStream));
  return gradcheck_layer(layer, x, Mode::train, seed, opts);
}

double check_dense(uint64_t seed, const GradCheckOptions& opts) {
  DenseLayer<double> layer(3, 4);
  layer.init_he(mix_seed(seed, kParamStream));
  const auto x =
      rand_tensor(Shape{2, 3}, mix_seed(seed, kInputStream), -1.0, 1.0);
  return gradcheck_layer(layer, x, Mode::train, seed, opts);
}

double check_dropout(uint64_t seed, const GradCheckOptions& opts) {
  DropoutLayer<double> layer(0.5);
  const auto x =
      rand_tensor(Shape{3, 4}, mix_seed(seed, kInputStream), -1.0, 1.0);
  return gradcheck_layer(layer, x, Mode::train, seed, opts);
}

double check_softmax(uint64_t seed, const GradCheckOptions& opts) {
  SoftmaxLayer<double> layer;
  const auto x =
      rand_tensor(Shape{2, 5}, mix_seed(seed, kInputStream), -1.0, 1.0);
  return gradcheck_layer(layer, x, Mode::train, seed, opts);
}

double check_residual(uint64_t seed, const GradCheckOptions& opts) {
  std::vector<std::unique_ptr<Layer<double>>> inner;
  auto conv = std::make_unique<Conv2dLayer<double>>(2, 2);
  conv->init_he(mix_seed(seed, kParamStream));
  inner.push_back(std::move(conv));
  ResidualBlock<double> layer(std::move(inner));
  const auto x =
      rand_tensor(Shape{1, 2, 4, 4}, mix_seed(seed, kInputStream), -1.0, 1.0);
  return gradcheck_layer(layer, x, Mode::train, seed, opts);
}

// Full stack through the fused cross-entropy: grad w.r.t. the input batch.
double check_network(uint64_t seed, const GradCheckOptions& opts) {
  Model<double> model =
      Model<double>::build(okannet_spec(4, 8), mix_seed(seed, kParamStream));
  TensorT<double> x =
      rand_tensor(Shape{2, 3, 8, 8}, mix_seed(seed, kInputStream), 0.0, 1.0);
  RandomEngine label_rng(mix_seed(seed, kDirectionStream));
  std::vector<int32_t> labels(2);
  for (auto& y : labels) y = static_cast<int32_t>(label_rng.uniform_int(4));
  const uint64_t fwd_seed = mix_seed(seed, kForwardStream);

  const auto loss_of = [&]() {
    RandomEngine rng(fwd_seed);
    ForwardContext ctx{Mode::train, &rng};
    return cross_entropy<double>(model.forward_logits(x, ctx), labels)
        .mean_loss;
  };

  RandomEngine rng(fwd_seed);
  ForwardContext ctx{Mode::train, &rng};
  const LossValue<double> lv =
      cross_entropy<double>(model.forward_logits(x, ctx), labels);
  const TensorT<double> grad_in = model.backward_logits(lv.grad_logits);

  double worst = 0.0;
  const double h = opts.step;
  for (int64_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double lp = loss_of();
    x[i] = orig - h;
    const double lm = loss_of();
    x[i] = orig;
    worst = std::max(worst, rel_err(grad_in[i], (lp - lm) / (2.0 * h)));
  }
  return worst;
}

}  // namespace

GradCheckReport gradcheck_suite(uint64_t base_seed, int seeds,
                                const GradCheckOptions& opts) {
  struct Check {
    const char* name;
    double (*fn)(uint64_t, const GradCheckOptions&);
  };
  const Check checks[] = {
      {"conv2d", check_conv},       {"batchnorm", check_batchnorm},
      {"relu", check_relu},         {"maxpool2d", check_maxpool},
      {"dense", check_dense},       {"dropout", check_dropout},
      {"softmax", check_softmax},   {"residual", check_residual},
      {"network", check_network},
  };
  GradCheckReport report;
  report.tolerance = opts.tolerance;
  for (const Check& c : checks) {
    GradCheckEntry entry;
    entry.name = c.name;
    for (int s = 0; s < seeds; ++s)
      entry.max_rel_err = std::max(
          entry.max_rel_err,
          c.fn(mix_seed(base_seed, static_cast<uint64_t>(s)), opts));
    entry.pass = entry.max_rel_err < opts.tolerance;
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace okannet
