#include "idslab/synth_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "idslab/baselines.hpp"
#include "idslab/error.hpp"

namespace idslab {

namespace {

constexpr double kGammaEps = 1e-16;
constexpr int kGammaMaxIter = 100000;
constexpr double kMinExpected = 5.0;

double gamma_prefactor(double a, double x) { return std::exp(-x + a * std::log(x) - std::lgamma(a)); }

double gamma_p_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int n = 0; n < kGammaMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * kGammaEps) break;
  }
  return sum * gamma_prefactor(a, x);
}

double gamma_q_continued_fraction(double a, double x) {
  constexpr double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kGammaMaxIter; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kGammaEps) break;
  }
  return gamma_prefactor(a, x) * h;
}

void check_same_schema(const Table& real, const Table& synth) {
  if (!real.schema.same_columns(synth.schema)) throw ArgumentError("real and synthetic schemas differ");
  if (real.rows.empty() || synth.rows.empty()) throw ArgumentError("fidelity metrics need nonempty tables");
}

std::vector<double> numeric_column(const Table& t, std::size_t slot) {
  std::vector<double> out;
  out.reserve(t.rows.size());
  for (const auto& r : t.rows) out.push_back(r.numeric.at(slot));
  return out;
}

}  // namespace

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0)) throw ArgumentError("regularized_gamma_q: a must be positive");
  if (x < 0.0) throw ArgumentError("regularized_gamma_q: x must be non-negative");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return std::clamp(1.0 - gamma_p_series(a, x), 0.0, 1.0);
  return std::clamp(gamma_q_continued_fraction(a, x), 0.0, 1.0);
}

double chi2_pvalue(double statistic, double dof) {
  if (dof <= 0) return 1.0;
  return regularized_gamma_q(dof / 2.0, std::max(statistic, 0.0) / 2.0);
}

ChiSquaredResult chi2_two_sample(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
  if (a.size() != b.size()) throw ArgumentError("chi2_two_sample: count vectors differ in length");
  const double na = static_cast<double>(std::accumulate(a.begin(), a.end(), std::int64_t{0}));
  const double nb = static_cast<double>(std::accumulate(b.begin(), b.end(), std::int64_t{0}));
  if (na <= 0 || nb <= 0) throw ArgumentError("chi2_two_sample: empty sample");
  const double n = na + nb;

  std::vector<std::pair<double, double>> cells;
  std::pair<double, double> other{0.0, 0.0};
  bool pooled = false;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double ca = static_cast<double>(a[j]);
    const double cb = static_cast<double>(b[j]);
    const double col = ca + cb;
    if (col == 0) continue;
    if (std::min(na, nb) * col / n < kMinExpected) {
      other.first += ca;
      other.second += cb;
      pooled = true;
    } else {
      cells.emplace_back(ca, cb);
    }
  }
  if (pooled) cells.push_back(other);

  ChiSquaredResult res;
  res.dof = static_cast<int>(cells.size()) - 1;
  if (res.dof <= 0) return res;
  for (auto [ca, cb] : cells) {
    const double col = ca + cb;
    const double ea = na * col / n;
    const double eb = nb * col / n;
    res.statistic += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
  }
  res.p_value = chi2_pvalue(res.statistic, res.dof);
  return res;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ArgumentError("ks_statistic: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

double cs_test(const Table& real, const Table& synth) {
  check_same_schema(real, synth);
  const auto& schema = real.schema;
  if (schema.categorical_count() == 0) throw UndefinedMetricError("cs_test: no categorical columns");
  double total = 0.0;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    if (schema[f].kind != FeatureKind::categorical) continue;
    const std::size_t slot = schema.slot(f);
    std::map<std::string, std::pair<std::int64_t, std::int64_t>> counts;
    for (const auto& r : real.rows) ++counts[r.categorical[slot]].first;
    for (const auto& r : synth.rows) ++counts[r.categorical[slot]].second;
    std::vector<std::int64_t> ca, cb;
    for (const auto& [_, c] : counts) {
      ca.push_back(c.first);
      cb.push_back(c.second);
    }
    total += chi2_two_sample(ca, cb).p_value;
  }
  return total / static_cast<double>(schema.categorical_count());
}

double ks_test(const Table& real, const Table& synth) {
  check_same_schema(real, synth);
  const auto& schema = real.schema;
  if (schema.continuous_count() == 0) throw UndefinedMetricError("ks_test: no continuous columns");
  double total = 0.0;
  for (std::size_t slot = 0; slot < schema.continuous_count(); ++slot) {
    total += 1.0 - ks_statistic(numeric_column(real, slot), numeric_column(synth, slot));
  }
  return total / static_cast<double>(schema.continuous_count());
}

std::pair<Table, Table> rank_encode(const Table& real, const Table& synth) {
  check_same_schema(real, synth);
  const auto& schema = real.schema;
  std::vector<FeatureSpec> specs;
  std::vector<std::map<std::string, double>> ranks(schema.categorical_count());
  for (std::size_t f = 0; f < schema.size(); ++f) {
    FeatureSpec spec;
    spec.name = schema[f].name;
    spec.kind = FeatureKind::continuous;
    specs.push_back(spec);
    if (schema[f].kind != FeatureKind::categorical) continue;
    const std::size_t slot = schema.slot(f);
    std::map<std::string, std::int64_t> freq;
    for (const auto& r : real.rows) ++freq[r.categorical[slot]];
    std::vector<std::pair<std::string, std::int64_t>> order(freq.begin(), freq.end());
    std::stable_sort(order.begin(), order.end(), [](const auto& l, const auto& r) { return l.second > r.second; });
    auto& rank = ranks[slot];
    for (const auto& [name, _] : order) rank.emplace(name, static_cast<double>(rank.size()));
    std::set<std::string> extra;
    for (const auto& r : synth.rows)
      if (!rank.count(r.categorical[slot])) extra.insert(r.categorical[slot]);
    for (const auto& name : extra) rank.emplace(name, static_cast<double>(rank.size()));
  }

  auto convert = [&](const Table& t) {
    Table out;
    out.schema = Schema(specs);
    out.rows.reserve(t.rows.size());
    for (const auto& r : t.rows) {
      Row row;
      row.numeric.reserve(schema.size());
      for (std::size_t f = 0; f < schema.size(); ++f) {
        const std::size_t slot = schema.slot(f);
        if (schema[f].kind == FeatureKind::continuous) {
          row.numeric.push_back(r.numeric[slot]);
        } else {
          row.numeric.push_back(ranks[slot].at(r.categorical[slot]));
        }
      }
      out.rows.push_back(std::move(row));
    }
    return out;
  };
  return {convert(real), convert(synth)};
}

double ks_test_extended(const Table& real, const Table& synth) {
  auto [r, s] = rank_encode(real, synth);
  return ks_test(r, s);
}

double roc_auc(std::span<const double> scores, std::span<const int> flags) {
  if (scores.size() != flags.size()) throw ArgumentError("roc_auc: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double positives = 0, negatives = 0, rank_sum = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) {
      int f = flags[order[t]];
      if (f != 0 && f != 1) throw ArgumentError("roc_auc: flags must be 0 or 1");
      if (f == 1) {
        positives += 1;
        rank_sum += midrank;
      } else {
        negatives += 1;
      }
    }
    i = j;
  }
  if (positives == 0 || negatives == 0) throw UndefinedMetricError("roc_auc: both classes required");
  return (rank_sum - positives * (positives + 1) / 2.0) / (positives * negatives);
}

double detection_score(const Table& real, const Table& synth, const DetectionOptions& opts) {
  check_same_schema(real, synth);
  if (opts.folds < 2) throw ArgumentError("detection_score: need at least 2 folds");
  if (real.size() < static_cast<std::size_t>(opts.folds) || synth.size() < static_cast<std::size_t>(opts.folds))
    throw ArgumentError("detection_score: fewer rows than folds");

  std::vector<Row> all;
  all.reserve(real.size() + synth.size());
  all.insert(all.end(), real.rows.begin(), real.rows.end());
  all.insert(all.end(), synth.rows.begin(), synth.rows.end());
  const Transformer tf = Transformer::fit(real.schema, all);
  const Eigen::MatrixXd enc = tf.encode_all(all);
  const auto n = static_cast<Eigen::Index>(all.size());
  const auto n_real = static_cast<Eigen::Index>(real.size());

  auto row_less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < enc.cols(); ++c) {
      if (enc(a, c) < enc(b, c)) return true;
      if (enc(b, c) < enc(a, c)) return false;
    }
    return false;
  };
  std::vector<Eigen::Index> real_idx(n_real), synth_idx(n - n_real);
  std::iota(real_idx.begin(), real_idx.end(), 0);
  std::iota(synth_idx.begin(), synth_idx.end(), n_real);
  std::stable_sort(real_idx.begin(), real_idx.end(), row_less);
  std::stable_sort(synth_idx.begin(), synth_idx.end(), row_less);

  std::mt19937_64 rng(opts.seed);
  std::shuffle(real_idx.begin(), real_idx.end(), rng);
  std::shuffle(synth_idx.begin(), synth_idx.end(), rng);
  // Identical encoded rows go to one fold, otherwise a held-out row's twin
  // with the other label leaks into training.
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), row_less);
  std::vector<Eigen::Index> group(n);
  for (Eigen::Index i = 0; i < n; ++i)
    group[order[i]] = i > 0 && !row_less(order[i - 1], order[i]) ? group[order[i - 1]] : i;

  std::vector<int> group_fold(n, -1);
  std::vector<std::vector<Eigen::Index>> folds(opts.folds);
  auto assign = [&](const std::vector<Eigen::Index>& idx) {
    std::size_t next = 0;
    for (auto r : idx) {
      int& f = group_fold[group[r]];
      if (f < 0) f = static_cast<int>(next++ % opts.folds);
      folds[f].push_back(r);
    }
  };
  assign(real_idx);
  assign(synth_idx);
  for (const auto& fold : folds) {
    bool has_real = false, has_synth = false;
    for (auto r : fold) (r < n_real ? has_real : has_synth) = true;
    if (!has_real || !has_synth)
      throw ArgumentError("detection_score: too many duplicate rows to form folds with both tables");
  }

  LogRegOptions lr;
  lr.l2 = opts.l2;
  lr.epochs = opts.epochs;
  lr.learning_rate = opts.learning_rate;
  lr.seed = opts.seed;
  lr.num_classes = 2;

  double auc_sum = 0.0;
  for (int f = 0; f < opts.folds; ++f) {
    std::vector<Eigen::Index> train_rows;
    for (int g = 0; g < opts.folds; ++g)
      if (g != f) train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
    const auto& test_rows = folds[f];

    Eigen::MatrixXd xtr = enc(train_rows, Eigen::all);
    Eigen::MatrixXd xte = enc(test_rows, Eigen::all);
    Eigen::RowVectorXd mean = xtr.colwise().mean();
    Eigen::RowVectorXd sd =
        ((xtr.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(xtr.rows())).sqrt();
    for (Eigen::Index c = 0; c < sd.size(); ++c)
      if (sd[c] < 1e-12) sd[c] = 1.0;
    xtr = (xtr.rowwise() - mean).array().rowwise() / sd.array();
    xte = (xte.rowwise() - mean).array().rowwise() / sd.array();

    std::vector<int> ytr, yte;
    for (auto r : train_rows) ytr.push_back(r >= n_real ? 1 : 0);
    for (auto r : test_rows) yte.push_back(r >= n_real ? 1 : 0);
    auto clf = train_logreg(xtr, ytr, lr);
    Eigen::VectorXd p = clf.predict_proba(xte).col(1);
    auc_sum += roc_auc(std::span<const double>(p.data(), p.size()), yte);
  }
  return std::clamp(1.0 - auc_sum / opts.folds, 0.0, 1.0);
}

FidelityReport evaluate_fidelity(const Table& real, const Table& synth, const DetectionOptions& opts) {
  FidelityReport r;
  r.cstest = cs_test(real, synth);
  r.kstest = ks_test(real, synth);
  r.kstest_extended = ks_test_extended(real, synth);
  r.detection = detection_score(real, synth, opts);
  return r;
}

}  // namespace idslab
