#pragma once

#include <cstdint>

#include "okannet/rng.hpp"
#include "okannet/tensor.hpp"

namespace okannet {

struct ImageSample {
  Tensor pixels;  // [3,S,S], values in [0,1]
  int32_t label = 0;
};

struct AugmentationConfig {
  bool enabled = false;
  double hflip_prob = 0.5;
  double rotation_deg = 15.0;
  double translate_frac = 0.10;
  // Base seed for the per-sample parameter draws. 0 means "derive from the
  // training seed" so default runs stay reproducible end to end.
  uint64_t rng_seed = 0;
};

// Mirrors the W axis.
Tensor flip_horizontal(const Tensor& img);

// Rotation about the image center, bilinear sampling, zero fill.
Tensor rotate(const Tensor& img, double degrees);

// Shift by (dx, dy) pixels (x rightward, y downward), bilinear sampling,
// zero fill.
Tensor translate(const Tensor& img, double dx, double dy);

// Applies flip, rotation and translation in that order, with parameters
// drawn from `rng` in a fixed sequence: flip draw, angle in
// [-rotation_deg, rotation_deg], then dx and dy in +-translate_frac of
// the image side. Rotation and translation compose into a single bilinear
// resample. Disabled config returns the sample unchanged without
// consuming randomness.
ImageSample augment(const ImageSample& sample, const AugmentationConfig& cfg,
                    RandomEngine& rng);

}  // namespace okannet
