#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <doctest.h>
#include "okannet/metrics.hpp"
#include "okannet/rng.hpp"
#include "support/testutil.hpp"

using namespace okannet;
using testutil::TempDir;
using testutil::read_text;
using testutil::split_csv;
using testutil::split_lines;

namespace {

// Per-sample counting, no matrix algebra shared with the implementation.
struct BruteForceMetrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
};

BruteForceMetrics brute_force(const std::vector<int32_t>& truth,
                              const std::vector<int32_t>& pred, int64_t k) {
  BruteForceMetrics out;
  int64_t hits = 0;
  for (size_t i = 0; i < truth.size(); ++i)
    if (truth[i] == pred[i]) ++hits;
  out.accuracy = static_cast<double>(hits) / static_cast<double>(truth.size());

  double psum = 0.0, rsum = 0.0;
  int64_t pcls = 0, rcls = 0;
  for (int64_t c = 0; c < k; ++c) {
    int64_t tp = 0, predicted = 0, actual = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
      if (pred[i] == c) ++predicted;
      if (truth[i] == c) ++actual;
      if (pred[i] == c && truth[i] == c) ++tp;
    }
    if (predicted > 0) {
      psum += static_cast<double>(tp) / static_cast<double>(predicted);
      ++pcls;
    }
    if (actual > 0) {
      rsum += static_cast<double>(tp) / static_cast<double>(actual);
      ++rcls;
    }
  }
  out.macro_precision = psum / static_cast<double>(pcls);
  out.macro_recall = rsum / static_cast<double>(rcls);
  return out;
}

}  // namespace

TEST_CASE("confusion counts by hand") {
  const std::vector<int32_t> truth{0, 0, 1, 1};
  const std::vector<int32_t> pred{0, 1, 1, 1};
  const ConfusionMatrix cm = confusion(truth, pred, 2);
  CHECK(cm.at(0, 0) == 1);
  CHECK(cm.at(0, 1) == 1);
  CHECK(cm.at(1, 0) == 0);
  CHECK(cm.at(1, 1) == 2);
  CHECK(cm.total() == 4);
  CHECK(accuracy(cm) == doctest::Approx(0.75));

  const std::vector<int32_t> perfect{0, 1, 2, 1};
  const ConfusionMatrix diag = confusion(perfect, perfect, 3);
  CHECK(accuracy(diag) == 1.0);
  for (int64_t t = 0; t < 3; ++t)
    for (int64_t p = 0; p < 3; ++p)
      if (t != p) CHECK(diag.at(t, p) == 0);
}

TEST_CASE("confusion row sums equal per class true counts") {
  RandomEngine rng(200);
  std::vector<int32_t> truth(300), pred(300);
  for (auto& v : truth) v = static_cast<int32_t>(rng.uniform_int(4));
  for (auto& v : pred) v = static_cast<int32_t>(rng.uniform_int(4));
  const ConfusionMatrix cm = confusion(truth, pred, 4);
  for (int64_t c = 0; c < 4; ++c) {
    int64_t row = 0;
    for (int64_t p = 0; p < 4; ++p) row += cm.at(c, p);
    const int64_t expect = std::count(truth.begin(), truth.end(),
                                      static_cast<int32_t>(c));
    CHECK(row == expect);
    CHECK(cm.tp(c) + cm.fp(c) + cm.fn(c) + cm.tn(c) == cm.total());
  }
}

TEST_CASE("confusion rejects bad input") {
  const std::vector<int32_t> a{0, 1};
  const std::vector<int32_t> b{0};
  CHECK_THROWS_AS(confusion(a, b, 2), ShapeError);
  const std::vector<int32_t> out_of_range{0, 2};
  CHECK_THROWS_AS(confusion(a, out_of_range, 2), DataError);
  CHECK_THROWS_AS(accuracy(ConfusionMatrix{}), StateError);
}

TEST_CASE("macro averages by per class hand arithmetic") {
  ConfusionMatrix cm;
  cm.num_classes = 2;
  cm.counts = {2, 0, 1, 1};
  CHECK(macro_precision(cm) == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(macro_recall(cm) == doctest::Approx(3.0 / 4.0).epsilon(1e-12));
}

TEST_CASE("macro precision omits never predicted classes") {
  ConfusionMatrix cm;
  cm.num_classes = 3;
  // Class 2 never predicted: its precision denominator is zero.
  cm.counts = {3, 1, 0, 0, 4, 0, 1, 1, 0};
  const double p0 = 3.0 / 4.0, p1 = 4.0 / 6.0;
  CHECK(macro_precision(cm) ==
        doctest::Approx((p0 + p1) / 2.0).epsilon(1e-12));
  const double r0 = 3.0 / 4.0, r1 = 4.0 / 4.0, r2 = 0.0 / 2.0;
  CHECK(macro_recall(cm) ==
        doctest::Approx((r0 + r1 + r2) / 3.0).epsilon(1e-12));
  CHECK_THROWS_AS(macro_precision(cm, MacroMode::strict), StateError);
  CHECK_NOTHROW(macro_recall(cm, MacroMode::strict));

  ConfusionMatrix empty;
  empty.num_classes = 2;
  empty.counts = {0, 0, 0, 0};
  CHECK_THROWS_AS(macro_precision(empty), StateError);
}

TEST_CASE("f1 is the harmonic mean of the macro averages") {
  CHECK(f1_from_macro(0.5, 0.5) == 0.5);
  CHECK(f1_from_macro(0.93, 0.93) == doctest::Approx(0.93).epsilon(1e-15));
  CHECK(f1_from_macro(1.0, 0.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(f1_from_macro(0.0, 0.0) == 0.0);
  CHECK_THROWS_AS(f1_from_macro(-0.1, 0.5), ConfigError);

  RandomEngine rng(201);
  for (int i = 0; i < 100; ++i) {
    const double p = rng.uniform(0.01, 1.0);
    const double r = rng.uniform(0.01, 1.0);
    const double f = f1_from_macro(p, r);
    CHECK(f >= std::min(p, r) - 1e-12);
    CHECK(f <= std::max(p, r) + 1e-12);
    CHECK(f == doctest::Approx(2.0 * p * r / (p + r)).epsilon(1e-15));
  }
}

TEST_CASE("metrics agree with a brute force counting oracle") {
  RandomEngine rng(202);
  for (int trial = 0; trial < 200; ++trial) {
    const int64_t n = 1 + static_cast<int64_t>(rng.uniform_int(1000));
    std::vector<int32_t> truth(static_cast<size_t>(n)),
        pred(static_cast<size_t>(n));
    for (auto& v : truth) v = static_cast<int32_t>(rng.uniform_int(4));
    for (auto& v : pred) v = static_cast<int32_t>(rng.uniform_int(4));
    const ConfusionMatrix cm = confusion(truth, pred, 4);
    const BruteForceMetrics ref = brute_force(truth, pred, 4);
    CHECK(std::abs(accuracy(cm) - ref.accuracy) < 1e-12);
    CHECK(std::abs(macro_precision(cm) - ref.macro_precision) < 1e-12);
    CHECK(std::abs(macro_recall(cm) - ref.macro_recall) < 1e-12);
  }
}

TEST_CASE("label permutation permutes the matrix and keeps accuracy") {
  RandomEngine rng(203);
  std::vector<int32_t> truth(240), pred(240);
  for (auto& v : truth) v = static_cast<int32_t>(rng.uniform_int(4));
  for (auto& v : pred) v = static_cast<int32_t>(rng.uniform_int(4));
  const int32_t perm[4] = {2, 0, 3, 1};
  std::vector<int32_t> ptruth(truth.size()), ppred(pred.size());
  for (size_t i = 0; i < truth.size(); ++i) {
    ptruth[i] = perm[truth[i]];
    ppred[i] = perm[pred[i]];
  }
  const ConfusionMatrix a = confusion(truth, pred, 4);
  const ConfusionMatrix b = confusion(ptruth, ppred, 4);
  for (int64_t t = 0; t < 4; ++t)
    for (int64_t p = 0; p < 4; ++p)
      CHECK(b.at(perm[t], perm[p]) == a.at(t, p));
  CHECK(accuracy(a) == doctest::Approx(accuracy(b)).epsilon(1e-15));
}

TEST_CASE("metrics csv has the fixed header and row order") {
  MetricsRecord rec;
  rec.accuracy = 1.0;
  rec.macro_precision = 1.0;
  rec.macro_recall = 1.0;
  rec.f1 = 1.0;
  rec.training_time_s = 0.0;
  const std::string text = metrics_csv_text({"Model"}, {rec});
  const std::vector<std::string> lines = split_lines(text);
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "Metric,Model");
  CHECK(lines[1] == "Accuracy,1.000000");
  CHECK(lines[2] == "Precision,1.000000");
  CHECK(lines[3] == "Recall,1.000000");
  CHECK(lines[4] == "F1-Score,1.000000");
  CHECK(lines[5] == "Training Time,0.000000");
  CHECK(text.find('\r') == std::string::npos);
}

TEST_CASE("metrics csv round trips through a parser") {
  MetricsRecord a;
  a.accuracy = 0.881;
  a.macro_precision = 0.877;
  a.macro_recall = 0.872;
  a.f1 = 0.8745;
  a.training_time_s = 5329.0;
  MetricsRecord b;
  b.accuracy = 0.9649;
  b.macro_precision = 0.963;
  b.macro_recall = 0.962;
  b.f1 = 0.9625;
  b.training_time_s = 16226.0;

  TempDir dir("metrics");
  const auto path = dir.path() / "metrics.csv";
  write_metrics_csv({"A", "B"}, {a, b}, path);
  const std::vector<std::string> lines = split_lines(read_text(path));
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "Metric,A,B");
  const std::vector<std::string> accs = split_csv(lines[1]);
  REQUIRE(accs.size() == 3);
  CHECK(std::stod(accs[1]) == doctest::Approx(a.accuracy).epsilon(1e-6));
  CHECK(std::stod(accs[2]) == doctest::Approx(b.accuracy).epsilon(1e-6));
  const std::vector<std::string> times = split_csv(lines[5]);
  CHECK(std::stod(times[1]) == doctest::Approx(5329.0));
  CHECK(std::stod(times[2]) == doctest::Approx(16226.0));

  CHECK_THROWS_AS(write_metrics_csv({}, {}, path), ConfigError);
  CHECK_THROWS_AS(
      write_metrics_csv({"A"}, {a}, dir.path() / "missing" / "x.csv"),
      IoError);
}

TEST_CASE("history csv marks validation points only") {
  TrainingHistory h;
  for (int64_t i = 1; i <= 3; ++i) {
    HistoryPoint p;
    p.iteration = i;
    p.train_acc = 0.5 + 0.1 * static_cast<double>(i);
    p.train_loss = 1.0 / static_cast<double>(i);
    if (i == 2) {
      p.val_acc = 0.625;
      p.val_loss = 0.875;
    }
    h.points.push_back(p);
  }
  const std::string text = history_csv_text(h);
  const std::vector<std::string> lines = split_lines(text);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "iteration,train_acc,train_loss,val_acc,val_loss");
  CHECK(split_csv(lines[1])[3].empty());
  CHECK(split_csv(lines[1])[4].empty());
  const std::vector<std::string> second = split_csv(lines[2]);
  CHECK(second[0] == "2");
  CHECK(std::stod(second[3]) == doctest::Approx(0.625));
  CHECK(std::stod(second[4]) == doctest::Approx(0.875));

  for (size_t i = 1; i < lines.size(); ++i) {
    const std::vector<std::string> row = split_csv(lines[i]);
    CHECK(std::stoll(row[0]) == static_cast<int64_t>(i));
    CHECK(std::stod(row[1]) ==
          doctest::Approx(h.points[i - 1].train_acc).epsilon(1e-6));
    CHECK(std::stod(row[2]) ==
          doctest::Approx(h.points[i - 1].train_loss).epsilon(1e-6));
  }

  TempDir dir("history");
  CHECK_THROWS_AS(write_history_csv(h, dir.path() / "nope" / "h.csv"),
                  IoError);
}
