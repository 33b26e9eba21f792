#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "okannet/error.hpp"

namespace okannet {

// Square count matrix, rows = true class, cols = predicted class.
struct ConfusionMatrix {
  int64_t num_classes = 0;
  std::vector<int64_t> counts;  // row-major [num_classes x num_classes]
  std::vector<std::string> class_names;

  int64_t& at(int64_t t, int64_t p) {
    return counts[static_cast<size_t>(t * num_classes + p)];
  }
  int64_t at(int64_t t, int64_t p) const {
    return counts[static_cast<size_t>(t * num_classes + p)];
  }
  int64_t total() const;

  // Binary one-vs-rest views per class.
  int64_t tp(int64_t k) const { return at(k, k); }
  int64_t fp(int64_t k) const {
    int64_t col = 0;
    for (int64_t i = 0; i < num_classes; ++i) col += at(i, k);
    return col - tp(k);
  }
  int64_t fn(int64_t k) const {
    int64_t row = 0;
    for (int64_t i = 0; i < num_classes; ++i) row += at(k, i);
    return row - tp(k);
  }
  int64_t tn(int64_t k) const { return total() - tp(k) - fp(k) - fn(k); }
};

ConfusionMatrix confusion(std::span<const int32_t> true_labels,
                          std::span<const int32_t> pred_labels,
                          int64_t num_classes);

// trace / total.
double accuracy(const ConfusionMatrix& cm);

// How macro averages treat classes whose denominator is zero: skip them,
// or refuse to produce a number.
enum class MacroMode { omit_undefined, strict };

// Per-class TP / column sum, averaged over classes.
double macro_precision(const ConfusionMatrix& cm,
                       MacroMode mode = MacroMode::omit_undefined);

// Per-class TP / row sum, averaged over classes.
double macro_recall(const ConfusionMatrix& cm,
                    MacroMode mode = MacroMode::omit_undefined);

// Harmonic mean of the already-macro-averaged precision and recall.
// Both zero yields 0 with a warning on stderr.
double f1_from_macro(double precision, double recall);

struct MetricsRecord {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double f1 = 0.0;
  double training_time_s = 0.0;
};

MetricsRecord compute_metrics(const ConfusionMatrix& cm,
                              double training_time_s);

// CSV with header "Metric,<name>..." and fixed rows Accuracy, Precision,
// Recall, F1-Score, Training Time; values with 6 decimals, LF endings.
void write_metrics_csv(const std::vector<std::string>& names,
                       const std::vector<MetricsRecord>& records,
                       const std::filesystem::path& path);

std::string metrics_csv_text(const std::vector<std::string>& names,
                             const std::vector<MetricsRecord>& records);

struct HistoryPoint {
  int64_t iteration = 0;
  double train_acc = 0.0;
  double train_loss = 0.0;
  std::optional<double> val_acc;
  std::optional<double> val_loss;
};

struct TrainingHistory {
  std::vector<HistoryPoint> points;
};

// CSV "iteration,train_acc,train_loss,val_acc,val_loss"; validation
// columns are empty off validation points.
void write_history_csv(const TrainingHistory& history,
                       const std::filesystem::path& path);

std::string history_csv_text(const TrainingHistory& history);

}  // namespace okannet
