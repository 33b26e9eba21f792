// Writes a synthetic Training/Testing image tree for demos and smoke runs.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "okannet/error.hpp"
#include "okannet/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic 4-class image dataset"};
  std::string out_dir;
  okannet::SynthSplitConfig train_cfg, test_cfg;
  train_cfg.per_class = 50;
  test_cfg.per_class = 10;
  uint64_t seed = 42;
  app.add_option("--out", out_dir)->required();
  app.add_option("--train-per-class", train_cfg.per_class);
  app.add_option("--test-per-class", test_cfg.per_class);
  app.add_option("--min-size", train_cfg.min_size);
  app.add_option("--max-size", train_cfg.max_size);
  app.add_option("--noise", train_cfg.noise);
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);

  test_cfg.min_size = train_cfg.min_size;
  test_cfg.max_size = train_cfg.max_size;
  test_cfg.noise = train_cfg.noise;
  train_cfg.seed = seed;
  test_cfg.seed = seed + 1;
  try {
    okannet::write_synth_dataset(out_dir, train_cfg, test_cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return okannet::exit_io;
  }
  std::printf("wrote %lld train / %lld test images per class under %s\n",
              static_cast<long long>(train_cfg.per_class),
              static_cast<long long>(test_cfg.per_class), out_dir.c_str());
  return okannet::exit_ok;
}
