#include "okannet/augment.hpp"

#include <cmath>
#include <numbers>

#include "okannet/error.hpp"

namespace okannet {

namespace {

void check_chw(const Tensor& img, const char* op) {
  if (img.shape().rank() != 3)
    throw ShapeError(std::string(op) + " expects [C,H,W], got " +
                     img.shape().str());
}

// Bilinear read with zero outside the image.
float sample_bilinear(const float* plane, int64_t h, int64_t w, double y,
                      double x) {
  const int64_t x0 = static_cast<int64_t>(std::floor(x));
  const int64_t y0 = static_cast<int64_t>(std::floor(y));
  const double fx = x - static_cast<double>(x0);
  const double fy = y - static_cast<double>(y0);
  double acc = 0.0;
  for (int64_t dy = 0; dy < 2; ++dy)
    for (int64_t dx = 0; dx < 2; ++dx) {
      const int64_t yi = y0 + dy, xi = x0 + dx;
      if (yi < 0 || yi >= h || xi < 0 || xi >= w) continue;
      const double wy = dy ? fy : 1.0 - fy;
      const double wx = dx ? fx : 1.0 - fx;
      acc += wy * wx * static_cast<double>(plane[yi * w + xi]);
    }
  return static_cast<float>(acc);
}

Tensor warp(const Tensor& img, double cos_t, double sin_t, double dx,
            double dy) {
  const int64_t c = img.shape()[0], h = img.shape()[1], w = img.shape()[2];
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  Tensor out(img.shape());
  const float* src = img.data();
  float* dst = out.data();
  for (int64_t ch = 0; ch < c; ++ch) {
    const float* plane = src + ch * h * w;
    float* oplane = dst + ch * h * w;
    for (int64_t i = 0; i < h; ++i)
      for (int64_t j = 0; j < w; ++j) {
        // Inverse map: undo the translation, then the rotation.
        const double ux = static_cast<double>(j) - dx - cx;
        const double uy = static_cast<double>(i) - dy - cy;
        const double sx = cos_t * ux + sin_t * uy + cx;
        const double sy = -sin_t * ux + cos_t * uy + cy;
        oplane[i * w + j] = sample_bilinear(plane, h, w, sy, sx);
      }
  }
  return out;
}

}  // namespace

Tensor flip_horizontal(const Tensor& img) {
  check_chw(img, "flip_horizontal");
  const int64_t c = img.shape()[0], h = img.shape()[1], w = img.shape()[2];
  Tensor out(img.shape());
  const float* src = img.data();
  float* dst = out.data();
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t i = 0; i < h; ++i) {
      const float* srow = src + (ch * h + i) * w;
      float* drow = dst + (ch * h + i) * w;
      for (int64_t j = 0; j < w; ++j) drow[j] = srow[w - 1 - j];
    }
  return out;
}

Tensor rotate(const Tensor& img, double degrees) {
  check_chw(img, "rotate");
  const double rad = degrees * std::numbers::pi / 180.0;
  return warp(img, std::cos(rad), std::sin(rad), 0.0, 0.0);
}

Tensor translate(const Tensor& img, double dx, double dy) {
  check_chw(img, "translate");
  return warp(img, 1.0, 0.0, dx, dy);
}

ImageSample augment(const ImageSample& sample, const AugmentationConfig& cfg,
                    RandomEngine& rng) {
  if (!cfg.enabled) return sample;
  check_chw(sample.pixels, "augment");
  ImageSample out;
  out.label = sample.label;
  const bool flip = rng.uniform01() < cfg.hflip_prob;
  const double angle = rng.uniform(-cfg.rotation_deg, cfg.rotation_deg);
  const double side = static_cast<double>(sample.pixels.shape()[2]);
  const double dx =
      rng.uniform(-cfg.translate_frac, cfg.translate_frac) * side;
  const double dy =
      rng.uniform(-cfg.translate_frac, cfg.translate_frac) * side;
  Tensor img = flip ? flip_horizontal(sample.pixels) : sample.pixels;
  const double rad = angle * std::numbers::pi / 180.0;
  out.pixels = warp(img, std::cos(rad), std::sin(rad), dx, dy);
  return out;
}

}  // namespace okannet
