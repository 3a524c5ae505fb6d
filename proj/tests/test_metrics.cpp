#include <cmath>
#include <random>

#include "doctest.h"
#include "latefuse/metrics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace latefuse;

namespace {

PredictionSet labels_only(std::vector<int> labels, std::size_t k) {
  PredictionSet p;
  p.probabilities = Matrix(labels.size(), k, 1.0 / static_cast<double>(k));
  p.labels = std::move(labels);
  return p;
}

}  // namespace

TEST_CASE("per-class arithmetic for tp=3 fp=1 tn=5 fn=1") {
  // binary: class 0 has 4 true members, 3 caught, one false alarm
  const std::vector<int> truth{0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
  const auto m = compute_metrics(labels_only({0, 0, 0, 1, 0, 1, 1, 1, 1, 1}, 2), truth, 2);
  const auto& c = m.per_class[0];
  CHECK(c.tp == 3);
  CHECK(c.fp == 1);
  CHECK(c.tn == 5);
  CHECK(c.fn == 1);
  CHECK(c.precision == doctest::Approx(0.75));
  CHECK(c.recall == doctest::Approx(0.75));
  CHECK(c.f1 == doctest::Approx(0.75));
  CHECK(c.accuracy == doctest::Approx(0.8));
  CHECK(c.specificity == doctest::Approx(5.0 / 6.0));
  CHECK(c.recall == c.sensitivity);
  CHECK_FALSE(c.zero_division);
}

TEST_CASE("perfect predictions score 1 everywhere") {
  const auto y = testsupport::cyclic_labels(12, 3);
  PredictionSet p;
  p.labels = y;
  p.probabilities = Matrix(12, 3, 0.0);
  for (std::size_t i = 0; i < 12; ++i) p.probabilities(i, y[i]) = 1.0;
  const auto m = compute_metrics(p, y, 3);
  for (double v : {m.accuracy, m.overall_accuracy, m.sensitivity, m.specificity, m.precision, m.recall, m.f1, m.auc})
    CHECK(v == 1.0);
}

TEST_CASE("predicting one class on balanced 4-class data") {
  const auto y = testsupport::cyclic_labels(20, 4);
  const auto m = compute_metrics(labels_only(std::vector<int>(20, 0), 4), y, 4);
  CHECK(m.overall_accuracy == doctest::Approx(0.25));
  int flagged = 0;
  for (const auto& c : m.per_class) flagged += c.zero_division && c.tp + c.fp == 0;
  CHECK(flagged == 3);
  CHECK(m.precision == doctest::Approx(0.25 / 4));
  // one-vs-rest accuracy per class is (tp+tn)/n
  CHECK(m.per_class[0].accuracy == doctest::Approx(0.25));
  CHECK(m.per_class[1].accuracy == doctest::Approx(0.75));
  CHECK(m.accuracy == doctest::Approx((0.25 + 3 * 0.75) / 4));
}

TEST_CASE("unknown predictions are wrong for every class") {
  const std::vector<int> y{0, 1, 2, 0};
  const auto m = compute_metrics(labels_only({kUnknownLabel, 1, 2, 0}, 3), y, 3);
  CHECK(m.n_unknown == 1);
  CHECK(m.unknown_rate() == doctest::Approx(0.25));
  CHECK(m.n_correct == 3);
  CHECK(m.per_class[0].fn == 1);
  CHECK(m.per_class[0].fp == 0);
}

TEST_CASE("metric input errors") {
  const std::vector<int> y{0, 1};
  CHECK_THROWS_AS(compute_metrics(labels_only({0}, 2), y, 2), std::invalid_argument);
  const std::vector<int> bad{0, 5};
  CHECK_THROWS_AS(compute_metrics(labels_only({0, 1}, 2), bad, 2), std::invalid_argument);
}

TEST_CASE("property: metrics agree with the confusion-table oracle") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 2 + rng() % 49, k = 4;
    std::vector<int> truth(n), pred(n);
    for (auto& t : truth) t = static_cast<int>(rng() % k);
    for (auto& p : pred) p = static_cast<int>(rng() % (k + 1)) - 1;  // -1 plays UNKNOWN
    const auto got = compute_metrics(labels_only(pred, k), truth, k);
    const auto want = oracle::confusion_metrics(pred, truth, k);
    for (std::size_t c = 0; c < k; ++c) {
      CHECK(got.per_class[c].tp == want.tp[c]);
      CHECK(got.per_class[c].fp == want.fp[c]);
      CHECK(got.per_class[c].tn == want.tn[c]);
      CHECK(got.per_class[c].fn == want.fn[c]);
      CHECK(got.per_class[c].tp + got.per_class[c].fp + got.per_class[c].tn + got.per_class[c].fn == static_cast<long>(n));
    }
    CHECK(got.accuracy == want.accuracy);
    CHECK(got.overall_accuracy == want.overall_accuracy);
    CHECK(got.precision == want.precision);
    CHECK(got.recall == want.recall);
    CHECK(got.specificity == want.specificity);
    CHECK(got.f1 == want.f1);
  }
}

// ------------------------------------------------------------------- AUC

TEST_CASE("six-sample binary toy gives 8/9") {
  const std::vector<double> s{.9, .8, .7, .4, .3, .2};
  const std::vector<bool> pos{true, true, false, true, false, false};
  CHECK(rank_sum_auc(s, pos) == doctest::Approx(8.0 / 9.0).epsilon(1e-15));
  CHECK(oracle::pair_auc(s, pos) == doctest::Approx(8.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("constant scores give 0.5 and missing classes are skipped") {
  const std::vector<int> y{0, 1, 0, 1};
  const auto r = roc_auc_ovr(Matrix(4, 3, 1.0 / 3), y);
  CHECK(r.per_class[0] == 0.5);
  CHECK(r.per_class[1] == 0.5);
  CHECK_FALSE(r.defined[2]);
  CHECK(r.skipped == 1);
  CHECK(r.macro == 0.5);
}

TEST_CASE("property: rank-sum AUC equals pair counting") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 2 + rng() % 49;
    auto truth = testsupport::random_labels(n, 4, seed + 7);
    Matrix p = testsupport::random_matrix(n, 4, seed, 0.0, 1.0);
    // coarse grid so ties actually happen
    for (double& v : p.data()) v = std::round(v * 5.0) / 5.0;
    const auto r = roc_auc_ovr(p, truth);
    CHECK(std::fabs(r.macro - oracle::pair_auc_ovr(p, truth)) <= 1e-12);
  }
}

TEST_CASE("property: AUC ignores strictly monotone score transforms") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto truth = testsupport::random_labels(40, 3, seed);
    Matrix p = testsupport::random_matrix(40, 3, seed + 100, 0.0, 1.0);
    Matrix q = p;
    for (double& v : q.data()) v = std::exp(3.0 * v) - 7.0;
    CHECK(roc_auc_ovr(p, truth).macro == doctest::Approx(roc_auc_ovr(q, truth).macro).epsilon(1e-14));
  }
}

// --------------------------------------------------------------- t-tests

TEST_CASE("identical score vectors give t=0 and p=1") {
  const std::vector<double> a{0.7, 0.8, 0.75, 0.9};
  const auto r = corrected_ttest(a, a, 80, 20);
  CHECK(r.t == 0.0);
  CHECK(r.p == 1.0);
}

TEST_CASE("constant difference takes the degenerate branch") {
  const std::vector<double> a(4, 0.8), b(4, 0.6);
  const auto r = corrected_ttest(a, b, 80, 20);
  CHECK(r.degenerate);
  CHECK(r.p == 0.0);
}

TEST_CASE("5x5 folds at 80/20 shrink t by about 0.371") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.02, 0.05);
  std::vector<double> a(25), b(25, 0.0);
  for (double& v : a) v = g(rng);
  const auto corrected = corrected_ttest(a, b, 80, 20);
  const auto naive = paired_ttest(a, b);
  CHECK(std::fabs(corrected.t / naive.t - std::sqrt(0.04 / 0.29)) < 1e-12);
  CHECK(std::fabs(corrected.t / naive.t - 0.371) < 1e-3);
  CHECK(corrected.p > naive.p);
}

TEST_CASE("property: corrected |t| never exceeds the naive |t|") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t J = 2 + rng() % 30;
    std::vector<double> a(J), b(J);
    for (std::size_t j = 0; j < J; ++j) {
      a[j] = u(rng);
      b[j] = u(rng);
    }
    const double ratio = 0.01 + u(rng);
    const auto c = corrected_ttest(a, b, 100.0, 100.0 * ratio);
    const auto n = paired_ttest(a, b);
    CHECK(std::fabs(c.t) <= std::fabs(n.t));
    CHECK(c.p >= 0.0);
    CHECK(c.p <= 1.0);
  }
}

TEST_CASE("two-sided p against a hand-checked value") {
  // d = (1, 2, 3): mean 2, sd 1, naive t = 2 / (1/sqrt 3) = 3.4641, df 2
  const std::vector<double> a{1, 2, 3}, b{0, 0, 0};
  const auto r = paired_ttest(a, b);
  CHECK(r.t == doctest::Approx(std::sqrt(12.0)));
  // P(|T_2| > t) = 1 - t / sqrt(2 + t^2) for 2 degrees of freedom
  CHECK(r.p == doctest::Approx(1.0 - r.t / std::sqrt(2.0 + r.t * r.t)).epsilon(1e-10));
}

TEST_CASE("t-test input errors") {
  const std::vector<double> one{1.0}, two{1.0, 2.0};
  CHECK_THROWS_AS(paired_ttest(one, one), std::invalid_argument);
  CHECK_THROWS_AS(paired_ttest(one, two), std::invalid_argument);
  CHECK_THROWS_AS(corrected_ttest(two, two, 0.0, 1.0), std::invalid_argument);
}
