#include "okannet/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "okannet/error.hpp"

namespace okannet {

namespace {

// Catmull-Rom kernel, the a = -0.5 case of the cubic convolution family.
double cubic_weight(double x) {
  constexpr double a = -0.5;
  x = std::fabs(x);
  if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

struct TapTable {
  // For each output coordinate: 4 clamped source indices and weights
  // normalized to sum 1.
  std::vector<int64_t> idx;  // [out * 4]
  std::vector<double> w;     // [out * 4]
};

TapTable make_taps(int64_t in, int64_t out) {
  TapTable t;
  t.idx.resize(static_cast<size_t>(out * 4));
  t.w.resize(static_cast<size_t>(out * 4));
  const double scale =
      static_cast<double>(in) / static_cast<double>(out);
  for (int64_t o = 0; o < out; ++o) {
    const double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
    const int64_t base = static_cast<int64_t>(std::floor(src)) - 1;
    double sum = 0.0;
    for (int64_t k = 0; k < 4; ++k) {
      const double wk = cubic_weight(src - static_cast<double>(base + k));
      t.w[static_cast<size_t>(o * 4 + k)] = wk;
      t.idx[static_cast<size_t>(o * 4 + k)] =
          std::clamp<int64_t>(base + k, 0, in - 1);
      sum += wk;
    }
    for (int64_t k = 0; k < 4; ++k)
      t.w[static_cast<size_t>(o * 4 + k)] /= sum;
  }
  return t;
}

}  // namespace

Tensor resize_bicubic(const Tensor& img, int64_t out_h, int64_t out_w) {
  if (img.shape().rank() != 3)
    throw ShapeError("resize expects [C,H,W], got " + img.shape().str());
  if (out_h < 1 || out_w < 1)
    throw ShapeError("resize target must be positive");
  const int64_t c = img.shape()[0], h = img.shape()[1], w = img.shape()[2];
  const TapTable tx = make_taps(w, out_w);
  const TapTable ty = make_taps(h, out_h);

  // Horizontal pass into a double intermediate, then vertical.
  std::vector<double> mid(static_cast<size_t>(c * h * out_w));
  const float* src = img.data();
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t row = 0; row < h; ++row) {
      const float* srow = src + (ch * h + row) * w;
      double* drow = mid.data() + (ch * h + row) * out_w;
      for (int64_t o = 0; o < out_w; ++o) {
        double acc = 0.0;
        for (int64_t k = 0; k < 4; ++k)
          acc += tx.w[static_cast<size_t>(o * 4 + k)] *
                 static_cast<double>(
                     srow[tx.idx[static_cast<size_t>(o * 4 + k)]]);
        drow[o] = acc;
      }
    }
  Tensor out(Shape{c, out_h, out_w});
  float* dst = out.data();
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t o = 0; o < out_h; ++o) {
      float* drow = dst + (ch * out_h + o) * out_w;
      for (int64_t col = 0; col < out_w; ++col) {
        double acc = 0.0;
        for (int64_t k = 0; k < 4; ++k)
          acc += ty.w[static_cast<size_t>(o * 4 + k)] *
                 mid[static_cast<size_t>(
                     (ch * h + ty.idx[static_cast<size_t>(o * 4 + k)]) *
                         out_w +
                     col)];
        drow[col] = static_cast<float>(acc);
      }
    }
  return out;
}

Tensor gray_to_rgb(const Tensor& img) {
  if (img.shape().rank() != 3)
    throw ShapeError("gray_to_rgb expects [C,H,W], got " + img.shape().str());
  const int64_t c = img.shape()[0];
  if (c == 3) return img;
  if (c != 1)
    throw ShapeError("gray_to_rgb expects 1 or 3 channels, got " +
                     std::to_string(c));
  const int64_t h = img.shape()[1], w = img.shape()[2];
  Tensor out(Shape{3, h, w});
  const float* p = img.data();
  float* po = out.data();
  for (int64_t ch = 0; ch < 3; ++ch)
    for (int64_t i = 0; i < h * w; ++i) po[ch * h * w + i] = p[i];
  return out;
}

Tensor preprocess_image(const Tensor& decoded, int64_t size) {
  Tensor rgb = gray_to_rgb(decoded);
  Tensor resized = rgb.shape()[1] == size && rgb.shape()[2] == size
                       ? rgb
                       : resize_bicubic(rgb, size, size);
  float* p = resized.data();
  const int64_t n = resized.size();
  for (int64_t i = 0; i < n; ++i)
    p[i] = std::clamp(p[i], 0.0f, 1.0f);
  return resized;
}

}  // namespace okannet
