#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "okannet/augment.hpp"
#include "okannet/dataset.hpp"
#include "okannet/metrics.hpp"
#include "okannet/model.hpp"

namespace okannet {

struct TrainConfig {
  int64_t epochs = 8;
  int64_t batch_size = 32;
  double learning_rate = 1e-4;
  int64_t validation_frequency = 50;  // iterations; 0 disables validation
  uint64_t seed = 42;
  int64_t image_size = 224;
  AugmentationConfig augmentation;
};

void validate(const TrainConfig& cfg);

struct TrainResult {
  TrainingHistory history;
  double wall_seconds = 0.0;
};

// Minibatch SGD with momentum 0.9 over shuffled epochs. Records batch
// accuracy and loss every iteration and, every validation_frequency
// iterations, full infer-mode metrics on `val` (when given). The model
// trains in place.
TrainResult train(Model<float>& model, const LoadedDataset& train_data,
                  const LoadedDataset* val_data, const TrainConfig& cfg);

struct EvalResult {
  ConfusionMatrix confusion;
  MetricsRecord metrics;  // training_time_s left 0
};

// Infer-mode pass over the dataset; predictions by argmax, ties to the
// lowest class index.
EvalResult evaluate(Model<float>& model, const LoadedDataset& data,
                    int64_t batch_size = 32);

struct Prediction {
  std::string class_name;
  std::vector<double> probabilities;
};

Prediction predict(Model<float>& model,
                   const std::vector<std::string>& class_names,
                   const std::filesystem::path& image_path);

}  // namespace okannet
