#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "okannet/checkpoint.hpp"
#include "okannet/dataset.hpp"
#include "okannet/error.hpp"
#include "okannet/gradcheck.hpp"
#include "okannet/metrics.hpp"
#include "okannet/model.hpp"
#include "okannet/parallel.hpp"
#include "okannet/trainer.hpp"

namespace fs = std::filesystem;

namespace {

constexpr const char* kModelName = "OkanNet";

struct TrainArgs {
  std::string data_dir;
  std::string out_dir;
  okannet::TrainConfig cfg;
};

int run_train(const TrainArgs& args) {
  using namespace okannet;
  const fs::path root(args.data_dir);
  const fs::path out_dir(args.out_dir);
  fs::create_directories(out_dir);

  std::printf("loading %s\n", (root / "Training").string().c_str());
  LoadedDataset train_data =
      load_dataset(root / "Training", args.cfg.image_size);
  std::printf("loading %s\n", (root / "Testing").string().c_str());
  LoadedDataset val_data = load_dataset(root / "Testing", args.cfg.image_size);
  std::printf("%lld training / %lld validation images, %zu classes\n",
              static_cast<long long>(train_data.size()),
              static_cast<long long>(val_data.size()),
              train_data.class_names.size());

  Model<float> model =
      build_okannet(static_cast<int64_t>(train_data.class_names.size()),
                    args.cfg.image_size, args.cfg.seed);
  const TrainResult result = train(model, train_data, &val_data, args.cfg);
  std::printf("training finished in %.1fs\n", result.wall_seconds);

  const EvalResult eval_result = evaluate(model, val_data, args.cfg.batch_size);
  MetricsRecord metrics = eval_result.metrics;
  metrics.training_time_s = result.wall_seconds;

  CheckpointMeta meta;
  meta.config = args.cfg;
  meta.class_names = train_data.class_names;
  meta.final_metrics = metrics;
  // Wall time is the one run-dependent value; deterministic mode zeroes
  // it so identical runs serialize identically.
  meta.wall_seconds = deterministic_mode() ? 0.0 : result.wall_seconds;
  if (deterministic_mode()) meta.final_metrics.training_time_s = 0.0;
  save_checkpoint(model, meta, out_dir / "checkpoint.oknt");
  write_metrics_csv({kModelName}, {metrics}, out_dir / "metrics.csv");
  write_history_csv(result.history, out_dir / "history.csv");

  std::printf("accuracy %.6f  precision %.6f  recall %.6f  f1 %.6f\n",
              metrics.accuracy, metrics.macro_precision, metrics.macro_recall,
              metrics.f1);
  std::printf("wrote %s\n", (out_dir / "checkpoint.oknt").string().c_str());
  return exit_ok;
}

int run_eval(const std::string& model_path, const std::string& data_dir,
             const std::string& out_csv) {
  using namespace okannet;
  Checkpoint ckpt = load_checkpoint(model_path);
  LoadedDataset data =
      load_dataset(fs::path(data_dir), ckpt.model.spec().image_size);
  if (data.class_names != ckpt.meta.class_names)
    throw DataError("dataset classes do not match the checkpoint");
  const EvalResult result = evaluate(ckpt.model, data);
  MetricsRecord metrics = result.metrics;
  metrics.training_time_s = ckpt.meta.final_metrics.training_time_s;

  std::printf("confusion (rows = true, cols = predicted):\n");
  for (int64_t t = 0; t < result.confusion.num_classes; ++t) {
    for (int64_t p = 0; p < result.confusion.num_classes; ++p)
      std::printf("%8lld", static_cast<long long>(result.confusion.at(t, p)));
    std::printf("  %s\n",
                data.class_names[static_cast<size_t>(t)].c_str());
  }
  std::printf("accuracy %.6f  precision %.6f  recall %.6f  f1 %.6f\n",
              metrics.accuracy, metrics.macro_precision, metrics.macro_recall,
              metrics.f1);
  write_metrics_csv({kModelName}, {metrics}, out_csv);
  std::printf("wrote %s\n", out_csv.c_str());
  return exit_ok;
}

int run_predict(const std::string& model_path, const std::string& image) {
  using namespace okannet;
  Checkpoint ckpt = load_checkpoint(model_path);
  const Prediction pred =
      predict(ckpt.model, ckpt.meta.class_names, image);
  std::printf("%s\n", pred.class_name.c_str());
  for (size_t k = 0; k < pred.probabilities.size(); ++k)
    std::printf("  %-16s %.6f\n", ckpt.meta.class_names[k].c_str(),
                pred.probabilities[k]);
  return exit_ok;
}

int run_gradcheck(uint64_t seed) {
  using namespace okannet;
  const GradCheckReport report = gradcheck_suite(seed);
  for (const auto& e : report.entries)
    std::printf("%-12s max rel err %.3e  %s\n", e.name.c_str(),
                e.max_rel_err, e.pass ? "ok" : "FAIL");
  if (!report.all_pass()) {
    std::fprintf(stderr, "gradient check failed (tolerance %.1e)\n",
                 report.tolerance);
    return exit_failure;
  }
  std::printf("all gradients within %.1e\n", report.tolerance);
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small CNN training and inference kit for image folders"};
  app.require_subcommand(1);

  TrainArgs train_args;
  bool augment_flag = false;
  CLI::App* train_cmd =
      app.add_subcommand("train", "Train on <data-dir>/{Training,Testing}");
  train_cmd->add_option("--data-dir", train_args.data_dir)->required();
  train_cmd->add_option("--out-dir", train_args.out_dir)->required();
  train_cmd->add_option("--epochs", train_args.cfg.epochs);
  train_cmd->add_option("--batch-size", train_args.cfg.batch_size);
  train_cmd->add_option("--lr", train_args.cfg.learning_rate);
  train_cmd->add_option("--image-size", train_args.cfg.image_size);
  train_cmd->add_option("--seed", train_args.cfg.seed);
  train_cmd->add_option("--val-freq", train_args.cfg.validation_frequency);
  train_cmd->add_flag("--augment", augment_flag,
                      "Enable flip/rotation/translation augmentation");

  std::string model_path, data_dir, image_path;
  std::string eval_out = "metrics.csv";
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Evaluate a checkpoint on an image folder");
  eval_cmd->add_option("--model", model_path)->required();
  eval_cmd->add_option("--data-dir", data_dir)->required();
  eval_cmd->add_option("--out", eval_out, "Metrics CSV path");

  CLI::App* predict_cmd =
      app.add_subcommand("predict", "Classify a single image");
  predict_cmd->add_option("--model", model_path)->required();
  predict_cmd->add_option("--image", image_path)->required();

  uint64_t gradcheck_seed = 7;
  CLI::App* gradcheck_cmd = app.add_subcommand(
      "gradcheck", "Verify layer gradients against finite differences");
  gradcheck_cmd->add_option("--seed", gradcheck_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? okannet::exit_ok : okannet::exit_config;
  }

  try {
    if (train_cmd->parsed()) {
      train_args.cfg.augmentation.enabled = augment_flag;
      okannet::validate(train_args.cfg);
      return run_train(train_args);
    }
    if (eval_cmd->parsed()) return run_eval(model_path, data_dir, eval_out);
    if (predict_cmd->parsed()) return run_predict(model_path, image_path);
    if (gradcheck_cmd->parsed()) return run_gradcheck(gradcheck_seed);
  } catch (const okannet::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return okannet::exit_config;
  } catch (const okannet::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return okannet::exit_data;
  } catch (const okannet::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return okannet::exit_io;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return okannet::exit_failure;
  }
  return okannet::exit_ok;
}
