#include "okannet/trainer.hpp"

#include <chrono>
#include <cmath>

#include "okannet/error.hpp"
#include "okannet/image.hpp"
#include "okannet/loss.hpp"
#include "okannet/optimizer.hpp"
#include "okannet/preprocess.hpp"

namespace okannet {

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (cfg.learning_rate <= 0.0) throw ConfigError("learning rate must be > 0");
  if (cfg.validation_frequency < 0)
    throw ConfigError("validation frequency must be >= 0");
  if (cfg.image_size < 8 || cfg.image_size % 8 != 0)
    throw ConfigError("image_size must be a positive multiple of 8");
}

namespace {

double batch_accuracy(const Tensor& logits, std::span<const int32_t> labels) {
  const std::vector<int64_t> pred = argmax_axis(logits, 1);
  int64_t correct = 0;
  for (size_t i = 0; i < labels.size(); ++i)
    if (pred[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

// Mean infer-mode loss and accuracy over a full dataset.
std::pair<double, double> infer_loss_acc(Model<float>& model,
                                         const LoadedDataset& data,
                                         int64_t batch_size) {
  ForwardContext ctx{Mode::infer, nullptr};
  BatchIterator it(data.size(), batch_size, /*shuffle=*/false, 0);
  const std::vector<int64_t> order = it.order(0);
  double loss_sum = 0.0;
  int64_t correct = 0;
  for (int64_t b = 0; b < data.size(); b += batch_size) {
    const int64_t e = std::min<int64_t>(b + batch_size, data.size());
    const Batch batch = assemble_batch(
        data, std::span<const int64_t>(order.data() + b, order.data() + e),
        AugmentationConfig{}, 0, 0);
    const Tensor logits = model.forward_logits(batch.images, ctx);
    const LossValue<float> lv = cross_entropy<float>(logits, batch.labels);
    loss_sum += lv.mean_loss * static_cast<double>(e - b);
    const std::vector<int64_t> pred = argmax_axis(logits, 1);
    for (size_t i = 0; i < batch.labels.size(); ++i)
      if (pred[i] == batch.labels[i]) ++correct;
  }
  return {loss_sum / static_cast<double>(data.size()),
          static_cast<double>(correct) / static_cast<double>(data.size())};
}

void check_dataset(const Model<float>& model, const LoadedDataset& data,
                   const char* which) {
  if (data.size() == 0)
    throw DataError(std::string(which) + " dataset is empty");
  if (data.image_size != model.spec().image_size)
    throw ConfigError(std::string(which) + " dataset image size " +
                      std::to_string(data.image_size) +
                      " does not match model image size " +
                      std::to_string(model.spec().image_size));
  for (int32_t y : data.labels)
    if (y < 0 || y >= model.spec().num_classes)
      throw DataError(std::string(which) + " dataset has label " +
                      std::to_string(y) + " outside the model's " +
                      std::to_string(model.spec().num_classes) + " classes");
}

}  // namespace

TrainResult train(Model<float>& model, const LoadedDataset& train_data,
                  const LoadedDataset* val_data, const TrainConfig& cfg) {
  validate(cfg);
  check_dataset(model, train_data, "training");
  if (val_data) check_dataset(model, *val_data, "validation");

  SgdMomentum<float> opt(cfg.learning_rate, 0.9);
  std::vector<ParamView<float>> params = model.params();
  RandomEngine dropout_rng(mix_seed(cfg.seed, 0x6472706fULL));
  const uint64_t aug_seed = cfg.augmentation.rng_seed != 0
                                ? cfg.augmentation.rng_seed
                                : cfg.seed;
  BatchIterator it(train_data.size(), cfg.batch_size, /*shuffle=*/true,
                   cfg.seed);
  TrainResult result;
  int64_t iteration = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<int64_t> order = it.order(epoch);
    for (int64_t b = 0; b < train_data.size(); b += cfg.batch_size) {
      const int64_t e = std::min<int64_t>(b + cfg.batch_size,
                                          train_data.size());
      const Batch batch = assemble_batch(
          train_data,
          std::span<const int64_t>(order.data() + b, order.data() + e),
          cfg.augmentation, aug_seed, epoch);
      ++iteration;
      ForwardContext ctx{Mode::train, &dropout_rng};
      const Tensor logits = model.forward_logits(batch.images, ctx);
      const LossValue<float> lv = cross_entropy<float>(logits, batch.labels);
      model.backward_logits(lv.grad_logits);
      opt.step(params);
      HistoryPoint point;
      point.iteration = iteration;
      point.train_acc = batch_accuracy(logits, batch.labels);
      point.train_loss = lv.mean_loss;
      if (val_data && cfg.validation_frequency > 0 &&
          iteration % cfg.validation_frequency == 0) {
        const auto [vloss, vacc] =
            infer_loss_acc(model, *val_data, cfg.batch_size);
        point.val_acc = vacc;
        point.val_loss = vloss;
      }
      result.history.points.push_back(point);
    }
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

EvalResult evaluate(Model<float>& model, const LoadedDataset& data,
                    int64_t batch_size) {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  check_dataset(model, data, "evaluation");
  ForwardContext ctx{Mode::infer, nullptr};
  std::vector<int32_t> preds;
  preds.reserve(static_cast<size_t>(data.size()));
  BatchIterator it(data.size(), batch_size, /*shuffle=*/false, 0);
  const std::vector<int64_t> order = it.order(0);
  for (int64_t b = 0; b < data.size(); b += batch_size) {
    const int64_t e = std::min<int64_t>(b + batch_size, data.size());
    const Batch batch = assemble_batch(
        data, std::span<const int64_t>(order.data() + b, order.data() + e),
        AugmentationConfig{}, 0, 0);
    const Tensor logits = model.forward_logits(batch.images, ctx);
    for (int64_t p : argmax_axis(logits, 1))
      preds.push_back(static_cast<int32_t>(p));
  }
  EvalResult out;
  out.confusion = confusion(data.labels, preds, model.spec().num_classes);
  out.confusion.class_names = data.class_names;
  out.metrics = compute_metrics(out.confusion, 0.0);
  return out;
}

Prediction predict(Model<float>& model,
                   const std::vector<std::string>& class_names,
                   const std::filesystem::path& image_path) {
  if (static_cast<int64_t>(class_names.size()) != model.spec().num_classes)
    throw ConfigError("class name count does not match the model");
  const Tensor img =
      preprocess_image(decode_image(image_path), model.spec().image_size);
  Tensor batch(Shape{1, 3, model.spec().image_size, model.spec().image_size});
  std::copy(img.data(), img.data() + img.size(), batch.data());
  ForwardContext ctx{Mode::infer, nullptr};
  const Tensor probs = model.forward(batch, ctx);
  Prediction out;
  out.probabilities.resize(static_cast<size_t>(probs.size()));
  for (int64_t i = 0; i < probs.size(); ++i)
    out.probabilities[static_cast<size_t>(i)] =
        static_cast<double>(probs[i]);
  const int64_t best = argmax_axis(probs, 1)[0];
  out.class_name = class_names[static_cast<size_t>(best)];
  return out;
}

}  // namespace okannet
