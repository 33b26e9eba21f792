#pragma once

#include <filesystem>

#include "okannet/tensor.hpp"

namespace okannet {

// Decodes a PNG or JPEG (detected by content, not extension) into a
// [C,H,W] tensor with values in [0,1]. C is 1 for grayscale sources and
// 3 otherwise. Unreadable or unsupported files raise DecodeError naming
// the path.
Tensor decode_image(const std::filesystem::path& path);

// Writers for fixtures and tooling; values are clamped to [0,1] and
// quantized to 8 bits. C must be 1 or 3.
void write_png(const std::filesystem::path& path, const Tensor& img);
void write_jpeg(const std::filesystem::path& path, const Tensor& img,
                int quality = 95);

}  // namespace okannet
