#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "idslab/dataset.hpp"

namespace idslab {

struct FidelityReport {
  double cstest = 0.0;
  double kstest = 0.0;
  double kstest_extended = 0.0;
  double detection = 0.0;
};

/// Regularized upper incomplete gamma Q(a, x): power series for x < a + 1,
/// Lentz continued fraction otherwise.
double regularized_gamma_q(double a, double x);

/// Upper-tail probability of a chi-squared statistic.
double chi2_pvalue(double statistic, double dof);

struct ChiSquaredResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Two-sample chi-squared test on a 2 x m table of category counts. Columns
/// whose smaller expected count falls below 5 are pooled into one "other"
/// column before the statistic is formed.
ChiSquaredResult chi2_two_sample(std::span<const std::int64_t> a, std::span<const std::int64_t> b);

/// Two-sample Kolmogorov-Smirnov D (sup distance between empirical CDFs).
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Mean chi-squared p-value over categorical columns.
double cs_test(const Table& real, const Table& synth);

/// Mean (1 - D) over continuous columns.
double ks_test(const Table& real, const Table& synth);

/// ks_test after mapping every categorical column to ordinal ranks:
/// descending frequency in `real` (ties lexical), synth-only categories
/// appended in lexical order.
double ks_test_extended(const Table& real, const Table& synth);

/// Converts categorical columns of both tables to the ordinal ranks used by
/// ks_test_extended; returns all-continuous tables.
std::pair<Table, Table> rank_encode(const Table& real, const Table& synth);

/// Mann-Whitney AUC with midranks for tied scores.
double roc_auc(std::span<const double> scores, std::span<const int> flags);

struct DetectionOptions {
  int folds = 5;
  std::uint64_t seed = 0;
  double l2 = 1e-4;
  int epochs = 300;
  double learning_rate = 1e-2;
};

/// 1 - mean held-out ROC AUC of a logistic-regression real/synthetic flag
/// predictor under stratified k-fold cross-validation. Rows are put in a
/// canonical order before the seeded shuffle, so the score does not depend on
/// the input row order.
double detection_score(const Table& real, const Table& synth, const DetectionOptions& opts = {});

FidelityReport evaluate_fidelity(const Table& real, const Table& synth, const DetectionOptions& opts = {});

}  // namespace idslab
