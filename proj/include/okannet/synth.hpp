#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "okannet/rng.hpp"
#include "okannet/tensor.hpp"

namespace okannet {

// Generator for small labeled image corpora with one distinct geometric
// pattern per class: checkerboards, filled disks, horizontal stripes and
// vertical stripes, with randomized geometry, contrast and pixel noise.
// Used by tests and the fixture tool to exercise the full directory
// scanning / decoding / training path without external data.

inline constexpr int kSynthClasses = 4;

// Folder names, already in lexicographic (= label) order.
std::vector<std::string> synth_class_names();

// One grayscale [1,h,w] image of the given class, values in [0,1].
Tensor synth_image(int class_id, int64_t h, int64_t w, RandomEngine& rng);

struct SynthSplitConfig {
  int64_t per_class = 10;
  int64_t min_size = 96;
  int64_t max_size = 160;
  double noise = 0.05;
  double jpeg_fraction = 0.25;  // remainder written as PNG
  uint64_t seed = 0;
};

// Writes <dir>/<class>/NNNN.(png|jpg) for every class.
void write_synth_split(const std::filesystem::path& dir,
                       const SynthSplitConfig& cfg);

// Writes Training/ and Testing/ splits under root.
void write_synth_dataset(const std::filesystem::path& root,
                         const SynthSplitConfig& train_cfg,
                         const SynthSplitConfig& test_cfg);

}  // namespace okannet
