#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace idslab {

/// k x k counts, rows = true class, columns = predicted class.
struct ConfusionMatrix {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;

  int k() const { return static_cast<int>(counts.rows()); }
  std::int64_t total() const { return counts.sum(); }
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
};

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

enum class F1Weighting { macro, weighted };

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> truth, int k);

double accuracy(const ConfusionMatrix& cm);

/// One-vs-rest scores for class c. Any zero denominator yields 0.
ClassScore per_class_prf(const ConfusionMatrix& cm, int c);

double aggregate_f1(const ConfusionMatrix& cm, F1Weighting weighting);

/// Everything a report row needs, computed once.
struct PerformanceSummary {
  double accuracy = 0.0;
  double f1_macro = 0.0;
  double f1_weighted = 0.0;
  std::vector<double> f1_per_class;
};

PerformanceSummary summarize(const ConfusionMatrix& cm);

/// Fixed 4-decimal rendering used in every report table.
std::string format_metric(double v);

}  // namespace idslab
