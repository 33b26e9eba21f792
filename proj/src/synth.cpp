#include "okannet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "okannet/error.hpp"
#include "okannet/image.hpp"

namespace okannet {

namespace fs = std::filesystem;

std::vector<std::string> synth_class_names() {
  return {"checker", "disk", "hstripes", "vstripes"};
}

Tensor synth_image(int class_id, int64_t h, int64_t w, RandomEngine& rng) {
  if (class_id < 0 || class_id >= kSynthClasses)
    throw ConfigError("synth class id out of range");
  if (h < 8 || w < 8) throw ConfigError("synth image too small");
  const double bg = rng.uniform(0.05, 0.25);
  const double fg = rng.uniform(0.70, 0.95);
  Tensor img(Shape{1, h, w}, static_cast<float>(bg));
  float* p = img.data();
  const auto set_fg = [&](int64_t i, int64_t j) {
    p[i * w + j] = static_cast<float>(fg);
  };
  switch (class_id) {
    case 0: {  // checkerboard
      const double blocks = rng.uniform(3.0, 6.0);
      const int64_t block =
          std::max<int64_t>(2, static_cast<int64_t>(
                                   static_cast<double>(std::min(h, w)) /
                                   (2.0 * blocks)));
      const int64_t phase = rng.uniform_int(2);
      for (int64_t i = 0; i < h; ++i)
        for (int64_t j = 0; j < w; ++j)
          if (((i / block + j / block) & 1) == phase) set_fg(i, j);
      break;
    }
    case 1: {  // filled disk
      const double cy = static_cast<double>(h) *
                        rng.uniform(0.40, 0.60);
      const double cx = static_cast<double>(w) *
                        rng.uniform(0.40, 0.60);
      const double r = static_cast<double>(std::min(h, w)) *
                       rng.uniform(0.22, 0.38);
      for (int64_t i = 0; i < h; ++i)
        for (int64_t j = 0; j < w; ++j) {
          const double dy = static_cast<double>(i) - cy;
          const double dx = static_cast<double>(j) - cx;
          if (dy * dy + dx * dx <= r * r) set_fg(i, j);
        }
      break;
    }
    case 2: {  // horizontal stripes
      const double bands = rng.uniform(3.0, 6.0);
      const int64_t period = std::max<int64_t>(
          4, static_cast<int64_t>(static_cast<double>(h) / bands));
      const int64_t phase = rng.uniform_int(period);
      for (int64_t i = 0; i < h; ++i)
        if (((i + phase) % period) * 2 < period)
          for (int64_t j = 0; j < w; ++j) set_fg(i, j);
      break;
    }
    case 3: {  // vertical stripes
      const double bands = rng.uniform(3.0, 6.0);
      const int64_t period = std::max<int64_t>(
          4, static_cast<int64_t>(static_cast<double>(w) / bands));
      const int64_t phase = rng.uniform_int(period);
      for (int64_t j = 0; j < w; ++j)
        if (((j + phase) % period) * 2 < period)
          for (int64_t i = 0; i < h; ++i) set_fg(i, j);
      break;
    }
  }
  return img;
}

void write_synth_split(const fs::path& dir, const SynthSplitConfig& cfg) {
  if (cfg.per_class < 1) throw ConfigError("synth per_class must be >= 1");
  if (cfg.min_size < 8 || cfg.max_size < cfg.min_size)
    throw ConfigError("synth size range invalid");
  const auto names = synth_class_names();
  for (int cls = 0; cls < kSynthClasses; ++cls) {
    const fs::path class_dir = dir / names[static_cast<size_t>(cls)];
    fs::create_directories(class_dir);
    for (int64_t i = 0; i < cfg.per_class; ++i) {
      RandomEngine rng(mix_seed(cfg.seed, static_cast<uint64_t>(cls),
                                static_cast<uint64_t>(i)));
      const int64_t h =
          cfg.min_size + rng.uniform_int(cfg.max_size - cfg.min_size + 1);
      const int64_t w =
          cfg.min_size + rng.uniform_int(cfg.max_size - cfg.min_size + 1);
      Tensor img = synth_image(cls, h, w, rng);
      if (cfg.noise > 0.0) {
        float* p = img.data();
        for (int64_t k = 0; k < img.size(); ++k)
          p[k] = std::clamp(
              p[k] + static_cast<float>(rng.normal(0.0, cfg.noise)), 0.0f,
              1.0f);
      }
      char name[32];
      const bool jpeg = rng.uniform01() < cfg.jpeg_fraction;
      std::snprintf(name, sizeof(name), "%04d.%s", static_cast<int>(i),
                    jpeg ? "jpg" : "png");
      if (jpeg)
        write_jpeg(class_dir / name, img, 92);
      else
        write_png(class_dir / name, img);
    }
  }
}

void write_synth_dataset(const fs::path& root,
                         const SynthSplitConfig& train_cfg,
                         const SynthSplitConfig& test_cfg) {
  write_synth_split(root / "Training", train_cfg);
  write_synth_split(root / "Testing", test_cfg);
}

}  // namespace okannet
