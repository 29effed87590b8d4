#include "idslab/metrics.hpp"

#include <cstdio>

#include "idslab/error.hpp"

namespace idslab {

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.k() != k()) throw ArgumentError("confusion matrix size mismatch");
  counts += other.counts;
  return *this;
}

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> truth, int k) {
  if (k <= 0) throw ArgumentError("k must be positive");
  if (pred.size() != truth.size()) throw ArgumentError("pred/truth length mismatch");
  ConfusionMatrix cm;
  cm.counts.setZero(k, k);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= k || truth[i] < 0 || truth[i] >= k)
      throw ArgumentError("label out of range at index " + std::to_string(i));
    ++cm.counts(truth[i], pred[i]);
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  auto total = cm.total();
  if (total <= 0) throw UndefinedMetricError("accuracy of an empty confusion matrix");
  return static_cast<double>(cm.counts.trace()) / static_cast<double>(total);
}

ClassScore per_class_prf(const ConfusionMatrix& cm, int c) {
  if (c < 0 || c >= cm.k()) throw ArgumentError("class index out of range");
  const double tp = static_cast<double>(cm.counts(c, c));
  const double predicted = static_cast<double>(cm.counts.col(c).sum());
  const double actual = static_cast<double>(cm.counts.row(c).sum());
  ClassScore s;
  s.precision = predicted > 0 ? tp / predicted : 0.0;
  s.recall = actual > 0 ? tp / actual : 0.0;
  s.f1 = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

double aggregate_f1(const ConfusionMatrix& cm, F1Weighting weighting) {
  const auto total = cm.total();
  if (total <= 0) throw UndefinedMetricError("F1 of an empty confusion matrix");
  double acc = 0.0;
  for (int c = 0; c < cm.k(); ++c) {
    double f1 = per_class_prf(cm, c).f1;
    if (weighting == F1Weighting::macro) {
      acc += f1;
    } else {
      acc += f1 * static_cast<double>(cm.counts.row(c).sum());
    }
  }
  return weighting == F1Weighting::macro ? acc / cm.k() : acc / static_cast<double>(total);
}

PerformanceSummary summarize(const ConfusionMatrix& cm) {
  PerformanceSummary s;
  s.accuracy = accuracy(cm);
  s.f1_macro = aggregate_f1(cm, F1Weighting::macro);
  s.f1_weighted = aggregate_f1(cm, F1Weighting::weighted);
  for (int c = 0; c < cm.k(); ++c) s.f1_per_class.push_back(per_class_prf(cm, c).f1);
  return s;
}

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace idslab
