#include "okannet/metrics.hpp"

#include <cstdio>
#include <fstream>

namespace okannet {

int64_t ConfusionMatrix::total() const {
  int64_t t = 0;
  for (int64_t c : counts) t += c;
  return t;
}

ConfusionMatrix confusion(std::span<const int32_t> true_labels,
                          std::span<const int32_t> pred_labels,
                          int64_t num_classes) {
  if (num_classes < 1) throw ConfigError("confusion needs num_classes >= 1");
  if (true_labels.size() != pred_labels.size())
    throw ShapeError("confusion label count mismatch: " +
                     std::to_string(true_labels.size()) + " vs " +
                     std::to_string(pred_labels.size()));
  ConfusionMatrix cm;
  cm.num_classes = num_classes;
  cm.counts.assign(static_cast<size_t>(num_classes * num_classes), 0);
  for (size_t i = 0; i < true_labels.size(); ++i) {
    const int32_t t = true_labels[i], p = pred_labels[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes)
      throw DataError("confusion label out of range at index " +
                      std::to_string(i));
    ++cm.at(t, p);
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  const int64_t total = cm.total();
  if (total == 0) throw StateError("accuracy of an empty confusion matrix");
  int64_t correct = 0;
  for (int64_t k = 0; k < cm.num_classes; ++k) correct += cm.at(k, k);
  return static_cast<double>(correct) / static_cast<double>(total);
}

namespace {

// Averages TP_k / denom_k over classes; denom is a column sum for
// precision, a row sum for recall.
double macro_mean(const ConfusionMatrix& cm, bool column_denominator,
                  MacroMode mode) {
  double sum = 0.0;
  int64_t defined = 0;
  for (int64_t k = 0; k < cm.num_classes; ++k) {
    int64_t denom = 0;
    for (int64_t i = 0; i < cm.num_classes; ++i)
      denom += column_denominator ? cm.at(i, k) : cm.at(k, i);
    if (denom == 0) {
      if (mode == MacroMode::strict)
        throw StateError("macro average undefined for class " +
                         std::to_string(k));
      continue;
    }
    sum += static_cast<double>(cm.at(k, k)) / static_cast<double>(denom);
    ++defined;
  }
  if (defined == 0)
    throw StateError("macro average undefined: no class has support");
  return sum / static_cast<double>(defined);
}

}  // namespace

double macro_precision(const ConfusionMatrix& cm, MacroMode mode) {
  return macro_mean(cm, /*column_denominator=*/true, mode);
}

double macro_recall(const ConfusionMatrix& cm, MacroMode mode) {
  return macro_mean(cm, /*column_denominator=*/false, mode);
}

double f1_from_macro(double precision, double recall) {
  if (precision < 0.0 || recall < 0.0)
    throw ConfigError("f1_from_macro needs non-negative inputs");
  if (precision == 0.0 && recall == 0.0) {
    std::fprintf(stderr,
                 "warning: precision and recall are both 0; F1 set to 0\n");
    return 0.0;
  }
  return 2.0 * precision * recall / (precision + recall);
}

MetricsRecord compute_metrics(const ConfusionMatrix& cm,
                              double training_time_s) {
  MetricsRecord r;
  r.accuracy = accuracy(cm);
  r.macro_precision = macro_precision(cm);
  r.macro_recall = macro_recall(cm);
  r.f1 = f1_from_macro(r.macro_precision, r.macro_recall);
  r.training_time_s = training_time_s;
  return r;
}

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string metrics_csv_text(const std::vector<std::string>& names,
                             const std::vector<MetricsRecord>& records) {
  if (names.size() != records.size())
    throw ConfigError("metrics csv needs one name per record");
  if (names.empty()) throw ConfigError("metrics csv needs at least one record");
  std::string out = "Metric";
  for (const auto& n : names) out += "," + n;
  out += "\n";
  const char* row_names[5] = {"Accuracy", "Precision", "Recall", "F1-Score",
                              "Training Time"};
  for (int row = 0; row < 5; ++row) {
    out += row_names[row];
    for (const auto& r : records) {
      double v = 0.0;
      switch (row) {
        case 0: v = r.accuracy; break;
        case 1: v = r.macro_precision; break;
        case 2: v = r.macro_recall; break;
        case 3: v = r.f1; break;
        case 4: v = r.training_time_s; break;
      }
      out += "," + fixed6(v);
    }
    out += "\n";
  }
  return out;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

}  // namespace

void write_metrics_csv(const std::vector<std::string>& names,
                       const std::vector<MetricsRecord>& records,
                       const std::filesystem::path& path) {
  write_text(path, metrics_csv_text(names, records));
}

std::string history_csv_text(const TrainingHistory& history) {
  std::string out = "iteration,train_acc,train_loss,val_acc,val_loss\n";
  for (const auto& p : history.points) {
    out += std::to_string(p.iteration);
    out += "," + fixed6(p.train_acc);
    out += "," + fixed6(p.train_loss);
    out += ",";
    if (p.val_acc) out += fixed6(*p.val_acc);
    out += ",";
    if (p.val_loss) out += fixed6(*p.val_loss);
    out += "\n";
  }
  return out;
}

void write_history_csv(const TrainingHistory& history,
                       const std::filesystem::path& path) {
  write_text(path, history_csv_text(history));
}

}  // namespace okannet
