#include "latefuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace latefuse {

namespace {

double ratio(long num, long den, bool& flag) {
  if (den == 0) {
    flag = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

TTestResult ttest_impl(std::span<const double> a, std::span<const double> b, double correction) {
  if (a.size() != b.size()) throw std::invalid_argument("t-test: score vectors differ in length");
  const std::size_t J = a.size();
  if (J < 2) throw std::invalid_argument("t-test: need at least 2 paired scores");
  std::vector<double> d(J);
  for (std::size_t j = 0; j < J; ++j) d[j] = a[j] - b[j];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(J);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(J - 1);

  TTestResult res;
  res.mean_difference = mean;
  if (!(var > 0.0)) {
    res.degenerate = true;
    if (mean == 0.0) {
      res.t = 0.0;
      res.p = 1.0;
    } else {
      res.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      res.p = 0.0;
    }
    return res;
  }
  res.t = mean / std::sqrt(correction * var);
  const boost::math::students_t dist(static_cast<double>(J - 1));
  res.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(res.t))));
  return res;
}

}  // namespace

double rank_sum_auc(std::span<const double> scores, const std::vector<bool>& positive) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (positive[order[k]]) {
        rank_sum += avg_rank;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::numeric_limits<double>::quiet_NaN();
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

AucResult roc_auc_ovr(const Matrix& probabilities, std::span<const int> truth) {
  if (probabilities.rows() != truth.size()) throw std::invalid_argument("roc_auc_ovr: length mismatch");
  const std::size_t K = probabilities.cols();
  AucResult res;
  res.per_class.assign(K, 0.0);
  res.defined.assign(K, false);
  std::vector<bool> pos(truth.size());
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < truth.size(); ++i) pos[i] = truth[i] == static_cast<int>(k);
    const auto col = probabilities.column(k);
    const double auc = rank_sum_auc(col, pos);
    if (std::isnan(auc)) {
      ++res.skipped;
      continue;
    }
    res.per_class[k] = auc;
    res.defined[k] = true;
    sum += auc;
    ++used;
  }
  res.macro = used ? sum / static_cast<double>(used) : 0.0;
  return res;
}

MetricSet compute_metrics(const PredictionSet& predictions, std::span<const int> truth, std::size_t n_classes) {
  if (predictions.labels.size() != truth.size()) throw std::invalid_argument("compute_metrics: length mismatch");
  for (int t : truth)
    if (t < 0 || static_cast<std::size_t>(t) >= n_classes) throw std::invalid_argument("compute_metrics: invalid truth label");
  MetricSet m;
  m.n_samples = truth.size();
  m.per_class.resize(n_classes);
  const long n = static_cast<long>(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int pred = predictions.labels[i];
    if (pred == kUnknownLabel) ++m.n_unknown;
    if (pred == truth[i]) ++m.n_correct;
  }
  for (std::size_t k = 0; k < n_classes; ++k) {
    auto& c = m.per_class[k];
    const int cls = static_cast<int>(k);
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool is_pos = truth[i] == cls, said_pos = predictions.labels[i] == cls;
      if (is_pos && said_pos) ++c.tp;
      else if (!is_pos && said_pos) ++c.fp;
      else if (is_pos) ++c.fn;
      else ++c.tn;
    }
    bool flag = false;
    c.accuracy = ratio(c.tp + c.tn, n, flag);
    c.sensitivity = ratio(c.tp, c.tp + c.fn, flag);
    c.specificity = ratio(c.tn, c.tn + c.fp, flag);
    c.precision = ratio(c.tp, c.tp + c.fp, flag);
    c.recall = c.sensitivity;
    if (c.precision + c.recall > 0.0) {
      c.f1 = 2.0 * c.precision * c.recall / (c.precision + c.recall);
    } else {
      c.f1 = 0.0;
      flag = true;
    }
    c.zero_division = flag;
  }

  if (predictions.probabilities.rows() == truth.size() && predictions.probabilities.cols() == n_classes) {
    const auto auc = roc_auc_ovr(predictions.probabilities, truth);
    for (std::size_t k = 0; k < n_classes; ++k) {
      m.per_class[k].auc = auc.per_class[k];
      m.per_class[k].auc_defined = auc.defined[k];
    }
    m.auc = auc.macro;
    m.auc_skipped_classes = auc.skipped;
  } else {
    m.auc_skipped_classes = n_classes;
  }

  for (const auto& c : m.per_class) {
    m.accuracy += c.accuracy;
    m.sensitivity += c.sensitivity;
    m.specificity += c.specificity;
    m.precision += c.precision;
    m.recall += c.recall;
    m.f1 += c.f1;
  }
  const double K = static_cast<double>(n_classes);
  for (double* v : {&m.accuracy, &m.sensitivity, &m.specificity, &m.precision, &m.recall, &m.f1}) *v /= K;
  m.overall_accuracy = n ? static_cast<double>(m.n_correct) / static_cast<double>(n) : 0.0;
  return m;
}

TTestResult corrected_ttest(std::span<const double> a, std::span<const double> b, double n_train, double n_test) {
  if (!(n_train > 0.0) || n_test < 0.0) throw std::invalid_argument("corrected_ttest: invalid train/test sizes");
  const double J = static_cast<double>(a.size());
  return ttest_impl(a, b, 1.0 / J + n_test / n_train);
}

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
  return ttest_impl(a, b, 1.0 / static_cast<double>(a.size()));
}

}  // namespace latefuse
