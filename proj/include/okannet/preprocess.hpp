#pragma once

#include <cstdint>

#include "okannet/tensor.hpp"

namespace okannet {

// Catmull-Rom bicubic resample (a = -0.5) of a [C,H,W] image. Sample
// positions follow src = (dst + 0.5) * scale - 0.5; taps outside the
// image clamp to the nearest edge pixel and weights are renormalized.
// Accumulation is in double per output pixel. Output values can overshoot
// the input range slightly; callers that need [0,1] clamp afterwards.
Tensor resize_bicubic(const Tensor& img, int64_t out_h, int64_t out_w);

inline Tensor resize_bicubic(const Tensor& img, int64_t size) {
  return resize_bicubic(img, size, size);
}

// Replicates a single-channel image into three identical channels;
// three-channel input passes through unchanged.
Tensor gray_to_rgb(const Tensor& img);

// Full input conditioning: to 3 channels, bicubic resize to size x size,
// clamp to [0,1].
Tensor preprocess_image(const Tensor& decoded, int64_t size);

}  // namespace okannet
