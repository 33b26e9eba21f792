#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "okannet/metrics.hpp"
#include "okannet/model.hpp"
#include "okannet/trainer.hpp"

namespace okannet {

struct CheckpointMeta {
  TrainConfig config;
  std::vector<std::string> class_names;
  MetricsRecord final_metrics;
  double wall_seconds = 0.0;
};

// Binary container: "OKNT" magic, u32 format version, the model spec,
// little-endian f32 tensors with shape headers (all parameters, then the
// batchnorm running stats), and a length-prefixed JSON metadata block.
void save_checkpoint(Model<float>& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path);

struct Checkpoint {
  Model<float> model;
  CheckpointMeta meta;
};

// Raises IoError with distinct messages for a wrong magic, an unsupported
// version and a truncated file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace okannet
