#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "latefuse/integrators.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace latefuse;

namespace {

PredictionSet hard(std::vector<int> labels, std::size_t k) {
  PredictionSet p;
  p.probabilities = Matrix(labels.size(), k, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) p.probabilities(i, labels[i]) = 1.0;
  p.labels = std::move(labels);
  return p;
}

PredictionSet soft(std::vector<std::vector<double>> rows) {
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(i, k) = rows[i][k];
  return from_probabilities(std::move(m));
}

View view(const std::string& name, Matrix x) {
  return {name, testsupport::names(name + "_f", x.cols()), std::move(x)};
}

TrainingData data_of(std::vector<View> views, std::vector<int> y, std::size_t k) {
  TrainingData d;
  d.views = std::move(views);
  d.labels = std::move(y);
  d.n_classes = k;
  return d;
}

IntegratorSpec small_spec(IntegratorKind kind, int gbm_rounds = 10) {
  IntegratorSpec s;
  s.kind = kind;
  s.base.n_rounds = gbm_rounds;
  s.base.max_depth = 2;
  s.boosting_rounds = 5;
  s.meta.n_trees = 50;
  s.inner_folds = 3;
  return s;
}

double training_accuracy(const TrainedIntegrator& model, const TrainingData& d) {
  const auto p = model.predict(d.views);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.labels.size(); ++i) ok += p.labels[i] == d.labels[i];
  return static_cast<double>(ok) / static_cast<double>(d.labels.size());
}

}  // namespace

// ----------------------------------------------------------------- voting

TEST_CASE("hard vote: majority and first-modality tie") {
  const std::vector<PredictionSet> abb{hard({0}, 2), hard({1}, 2), hard({1}, 2)};
  CHECK(vote_hard(abb).labels[0] == 1);
  const std::vector<PredictionSet> ab{hard({0}, 2), hard({1}, 2)};
  CHECK(vote_hard(ab).labels[0] == 0);
  const std::vector<PredictionSet> ba{hard({1}, 2), hard({0}, 2)};
  CHECK(vote_hard(ba).labels[0] == 1);
  // tie between the two leading classes; the earliest of those voters wins
  const std::vector<PredictionSet> cabab{hard({2}, 3), hard({0}, 3), hard({1}, 3), hard({0}, 3), hard({1}, 3)};
  CHECK(vote_hard(cabab).labels[0] == 0);
  CHECK(vote_hard(cabab).probabilities(0, 0) == doctest::Approx(0.4));
}

TEST_CASE("hard vote of a single modality is the identity") {
  const std::vector<PredictionSet> one{hard({2, 0, 1, 1}, 3)};
  CHECK(vote_hard(one).labels == std::vector<int>{2, 0, 1, 1});
  CHECK_THROWS_AS(vote_hard(std::vector<PredictionSet>{}), std::invalid_argument);
}

TEST_CASE("soft vote arithmetic") {
  const std::vector<PredictionSet> two{soft({{0.6, 0.4}}), soft({{0.3, 0.7}})};
  const auto r = vote_soft(two);
  CHECK(r.probabilities(0, 0) == doctest::Approx(0.45));
  CHECK(r.probabilities(0, 1) == doctest::Approx(0.55));
  CHECK(r.labels[0] == 1);

  const std::vector<PredictionSet> same{soft({{0.1, 0.2, 0.7}}), soft({{0.1, 0.2, 0.7}})};
  CHECK(vote_soft(same).probabilities(0, 2) == doctest::Approx(0.7));

  // hand-computed: means (0.3, 0.3, 0.2, 0.2) -> tie goes to class 0
  const std::vector<PredictionSet> three{soft({{0.5, 0.1, 0.2, 0.2}}), soft({{0.1, 0.5, 0.2, 0.2}}),
                                         soft({{0.3, 0.3, 0.2, 0.2}})};
  const auto t = vote_soft(three);
  CHECK(t.probabilities(0, 0) == doctest::Approx(0.3));
  CHECK(t.probabilities(0, 1) == doctest::Approx(0.3));
  CHECK(t.labels[0] == 0);

  const std::vector<PredictionSet> bad{soft({{0.6, 0.6}})};
  CHECK_THROWS_AS(vote_soft(bad), std::invalid_argument);
}

TEST_CASE("property: soft vote ignores modality order") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PredictionSet> mods;
    for (int m = 0; m < 4; ++m) {
      Matrix p = testsupport::random_matrix(10, 3, rng(), 0.01, 1.0);
      normalize_rows(p);
      mods.push_back(from_probabilities(std::move(p)));
    }
    auto shuffled = mods;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto a = vote_soft(mods), b = vote_soft(shuffled);
    CHECK(a.labels == b.labels);
    for (std::size_t i = 0; i < a.probabilities.data().size(); ++i)
      CHECK(a.probabilities.data()[i] == doctest::Approx(b.probabilities.data()[i]).epsilon(1e-14));
  }
}

// ------------------------------------------------------ high confidence

TEST_CASE("high confidence: half the modalities agreeing is enough") {
  const std::vector<PredictionSet> mods{hard({0}, 3), hard({0}, 3), hard({1}, 3), hard({2}, 3)};
  const std::vector<int> truth{0};
  CHECK(adaboost_high_confidence(mods, truth, Aggregator::Hard, 2.0)[0]);
  // 2 of 5 falls short of ceil(5/2) = 3
  const std::vector<PredictionSet> five{hard({0}, 3), hard({0}, 3), hard({1}, 3), hard({2}, 3), hard({1}, 3)};
  CHECK_FALSE(adaboost_high_confidence(five, truth, Aggregator::Hard, 2.0)[0]);
}

TEST_CASE("high confidence: soft needs twice the runner-up") {
  const std::vector<PredictionSet> mods{soft({{0.5, 0.3, 0.2}})};
  const std::vector<int> truth{0};
  CHECK_FALSE(adaboost_high_confidence(mods, truth, Aggregator::Soft, 2.0)[0]);
  const std::vector<PredictionSet> sure{soft({{0.6, 0.3, 0.1}})};
  CHECK(adaboost_high_confidence(sure, truth, Aggregator::Soft, 2.0)[0]);
}

TEST_CASE("high confidence: unanimous and right is correct for every aggregator") {
  const std::vector<PredictionSet> mods{soft({{0.9, 0.1}}), soft({{0.8, 0.2}}), soft({{0.95, 0.05}})};
  const std::vector<int> truth{0};
  for (auto agg : {Aggregator::Hard, Aggregator::Soft, Aggregator::Meta}) {
    const auto aggregated = agg == Aggregator::Hard ? vote_hard(mods) : vote_soft(mods);
    CHECK(adaboost_high_confidence(mods, aggregated, truth, agg, 2.0)[0]);
  }
  const std::vector<int> wrong{1};
  CHECK_FALSE(adaboost_high_confidence(mods, wrong, Aggregator::Hard, 2.0)[0]);
}

// ------------------------------------------------------------------ SAMME

TEST_CASE("SAMME weight ratio after one round is 9 for eps=0.25, K=4") {
  const double alpha = samme_alpha(0.25, 4);
  CHECK(alpha == doctest::Approx(2.0 * std::log(3.0)));
  std::vector<double> w(4, 0.25);
  samme_reweight(w, {false, true, true, true}, alpha);
  CHECK(w[0] / w[1] == doctest::Approx(9.0));
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0));
  CHECK(std::isfinite(samme_alpha(0.0, 4)));
  CHECK(samme_alpha(0.0, 4) > samme_alpha(1e-6, 4));
}

// ------------------------------------------------------------------- gate

TEST_CASE("gate rules") {
  const std::vector<ExpertVote> sole{{0.8, true}, {0.9, false}, {0.7, false}};
  CHECK(moe_gate(sole).label == 0);
  const std::vector<ExpertVote> two{{0.2, false}, {0.9, true}, {0.4, false}, {0.7, true}};
  const auto d = moe_gate(two);
  CHECK(d.label == 1);
  CHECK(d.confidence == doctest::Approx(0.9));
  const std::vector<ExpertVote> none{{0.2, false}, {0.3, false}};
  CHECK(moe_gate(none).label == kUnknownLabel);
  const std::vector<ExpertVote> tied{{0.1, false}, {0.6, true}, {0.6, true}};
  CHECK(moe_gate(tied).label == 1);
}

// ----------------------------------------------------------------- CONCAT

TEST_CASE("concat fits one model over every column") {
  const auto y = testsupport::cyclic_labels(30, 3);
  auto d = data_of({view("a", testsupport::planted_signal(y, 3, 1, 2.0, 1)), view("b", testsupport::gaussian_matrix(30, 4, 2))},
                   y, 3);
  const auto model = fit_integrator(small_spec(IntegratorKind::Concat), d, 5);
  const auto& cm = dynamic_cast<const ConcatModel&>(*model);
  CHECK(cm.model().n_features() == 7);
  CHECK(cm.provenance()[3] == FeatureKey{"b", "b_f0"});
  CHECK(model->feature_scores().size() == 7);
}

TEST_CASE("concat of one modality is a plain GBM fit") {
  const auto y = testsupport::cyclic_labels(30, 3);
  const auto x = testsupport::planted_signal(y, 4, 2, 1.0, 3);
  auto d = data_of({view("a", x)}, y, 3);
  const auto spec = small_spec(IntegratorKind::Concat);
  const auto model = fit_integrator(spec, d, 9);
  GbmParams p = spec.base;
  p.seed = derive_seed(9, {0});
  const auto plain = fit_gbm(x, y, 3, {}, p).predict_proba(x);
  const auto got = model->predict(d.views);
  CHECK(got.labels == plain.labels);
  CHECK(got.probabilities == plain.probabilities);
}

TEST_CASE("concat learns XOR split across modalities") {
  std::mt19937_64 rng(12);
  const std::size_t n = 80;
  Matrix a(n, 1), b(n, 1);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int u = static_cast<int>(i % 2), v = static_cast<int>((i / 2) % 2);
    a(i, 0) = u;
    b(i, 0) = v;
    y[i] = u ^ v;
  }
  auto d = data_of({view("a", a), view("b", b)}, y, 2);
  auto spec = small_spec(IntegratorKind::Concat, 30);
  CHECK(training_accuracy(*fit_integrator(spec, d, 1), d) == 1.0);
  for (const auto& v : {"a", "b"}) {
    auto one = spec;
    one.modalities = {v};
    CHECK(training_accuracy(*fit_integrator(one, d, 1), d) <= 0.6);
  }
}

TEST_CASE("concat rejects duplicate provenance and unknown modalities") {
  const auto y = testsupport::cyclic_labels(20, 2);
  auto d = data_of({view("a", testsupport::gaussian_matrix(20, 2, 1)), view("a", testsupport::gaussian_matrix(20, 2, 2))}, y, 2);
  CHECK_THROWS(fit_integrator(small_spec(IntegratorKind::Concat), d, 0));
  auto ok = data_of({view("a", testsupport::gaussian_matrix(20, 2, 1))}, y, 2);
  auto spec = small_spec(IntegratorKind::EnsSoft);
  spec.modalities = {"zzz"};
  CHECK_THROWS_AS(fit_integrator(spec, ok, 0), std::invalid_argument);
}

// --------------------------------------------------------------- ensembles

TEST_CASE("ensemble predictions are the votes of the per-modality models") {
  const auto y = testsupport::cyclic_labels(36, 3);
  auto d = data_of({view("a", testsupport::planted_signal(y, 3, 1, 1.0, 1)), view("b", testsupport::planted_signal(y, 3, 1, 1.0, 2)),
                    view("c", testsupport::gaussian_matrix(36, 3, 3))},
                   y, 3);
  for (auto kind : {IntegratorKind::EnsHard, IntegratorKind::EnsSoft}) {
    const auto model = fit_integrator(small_spec(kind), d, 4);
    const auto& vm = dynamic_cast<const VotingModel&>(*model);
    const auto each = vm.predict_each(d.views);
    const auto want = kind == IntegratorKind::EnsHard ? vote_hard(each) : vote_soft(each);
    CHECK(model->predict(d.views).labels == want.labels);
    CHECK(model->modalities() == std::vector<std::string>{"a", "b", "c"});
  }
}

TEST_CASE("fits are deterministic under a fixed seed") {
  const auto y = testsupport::cyclic_labels(30, 3);
  auto d = data_of({view("a", testsupport::planted_signal(y, 3, 1, 1.0, 1)), view("b", testsupport::gaussian_matrix(30, 3, 2))}, y, 3);
  for (auto kind : {IntegratorKind::Concat, IntegratorKind::EnsHard, IntegratorKind::EnsSoft, IntegratorKind::MetaLearner,
                    IntegratorKind::AdaHard, IntegratorKind::AdaSoft, IntegratorKind::AdaMeta, IntegratorKind::Pbmv,
                    IntegratorKind::MoeCombn}) {
    auto spec = small_spec(kind, 30);
    spec.base.subsample = 0.8;
    spec.boosting_rounds = 3;
    const auto a = fit_integrator(spec, d, 17)->predict(d.views);
    const auto b = fit_integrator(spec, d, 17)->predict(d.views);
    CHECK(a.labels == b.labels);
    CHECK(a.probabilities == b.probabilities);
  }
}

// ------------------------------------------------------------ meta-learner

TEST_CASE("meta-learner puts its importance on the predictive modality") {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto y = testsupport::cyclic_labels(60, 3);
    auto d = data_of({view("signal", testsupport::planted_signal(y, 4, 4, 10.0, seed)),
                      view("noise", testsupport::gaussian_matrix(60, 4, seed + 50))},
                     y, 3);
    const auto model = fit_integrator(small_spec(IntegratorKind::MetaLearner), d, seed);
    const auto rel = dynamic_cast<const MetaLearnerModel&>(*model).modality_relevance();
    CHECK(rel[0] + rel[1] == doctest::Approx(1.0));
    ok += rel[0] > 0.7;
  }
  CHECK(ok == 10);
}

TEST_CASE("meta-learner on constant inputs predicts the class prior") {
  std::vector<int> y{0, 0, 0, 0, 0, 0, 1, 1, 1, 2, 2, 2};
  auto d = data_of({view("flat", Matrix(12, 2, 1.0))}, y, 3);
  auto spec = small_spec(IntegratorKind::MetaLearner);
  spec.meta.bootstrap = false;
  const auto p = fit_integrator(spec, d, 0)->predict(d.views);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(p.probabilities(i, 0) == doctest::Approx(0.5));
    CHECK(p.probabilities(i, 1) == doctest::Approx(0.25));
  }
  auto tiny = small_spec(IntegratorKind::MetaLearner);
  tiny.inner_folds = 4;
  CHECK_THROWS_WITH(fit_integrator(tiny, d, 0), doctest::Contains("inner fold"));
}

TEST_CASE("meta-learner stacked on one modality stays close to that modality") {
  // accuracies averaged over several generator draws; single draws vary by ~0.03
  const std::size_t n = 300, draws = 6;
  const auto y = testsupport::cyclic_labels(n, 3);
  auto spec = small_spec(IntegratorKind::MetaLearner);
  spec.meta.n_trees = 100;
  double inner = 0, meta = 0;
  for (std::uint64_t g = 0; g < draws; ++g) {
    const auto x = testsupport::planted_signal(y, 5, 2, 1.0, 77 + 2 * g);
    const auto oof = out_of_fold_probabilities(x, y, 3, spec.base, spec.inner_folds, {}, 5);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < n; ++i) ok += argmax(oof.row(i)) == y[i];
    inner += static_cast<double>(ok) / static_cast<double>(n * draws);
    auto d = data_of({view("a", x)}, y, 3);
    const auto test = data_of({view("a", testsupport::planted_signal(y, 5, 2, 1.0, 78 + 2 * g))}, y, 3);
    meta += training_accuracy(*fit_integrator(spec, d, 5), test) / static_cast<double>(draws);
  }
  CHECK(meta >= inner - 0.05);
}

// --------------------------------------------------------------- adaboost


TEST_CASE("single-modality ADA-H matches reference SAMME on a 40-sample toy") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto y = testsupport::random_labels(40, 3, seed);
    const auto x = testsupport::planted_signal(y, 3, 2, 0.6, seed + 10);
    auto spec = small_spec(IntegratorKind::AdaHard, 2);
    spec.base.max_depth = 1;
    spec.boosting_rounds = 8;
    auto d = data_of({view("a", x)}, y, 3);
    const auto model = fit_integrator(spec, d, seed);
    CHECK(model->predict(d.views).labels == oracle::reference_samme(x, y, 3, spec.base, 8, seed));
  }
}

TEST_CASE("ADA-S with one round equals the soft vote of its models") {
  const auto y = testsupport::cyclic_labels(45, 3);
  auto d = data_of({view("a", testsupport::planted_signal(y, 3, 1, 1.5, 1)), view("b", testsupport::planted_signal(y, 3, 1, 1.5, 2))},
                   y, 3);
  auto spec = small_spec(IntegratorKind::AdaSoft, 40);
  spec.boosting_rounds = 1;
  const auto model = fit_integrator(spec, d, 3);
  const auto& ada = dynamic_cast<const AdaboostModel&>(*model);
  REQUIRE(ada.rounds().size() == 1);
  std::vector<PredictionSet> each;
  for (const auto& m : ada.rounds()[0].models) each.push_back(m.model.predict_proba(d.views[m.modality == "a" ? 0 : 1].x));
  const auto want = vote_soft(each);
  const auto got = model->predict(d.views);
  CHECK(got.labels == want.labels);
  for (std::size_t i = 0; i < got.probabilities.data().size(); ++i)
    CHECK(got.probabilities.data()[i] == doctest::Approx(want.probabilities.data()[i]).epsilon(1e-12));
}

TEST_CASE("a perfect first round stops boosting") {
  const auto y = testsupport::cyclic_labels(30, 3);
  auto d = data_of({view("a", testsupport::planted_signal(y, 2, 2, 10.0, 1)), view("b", testsupport::planted_signal(y, 2, 2, 10.0, 2))},
                   y, 3);
  const auto model = fit_integrator(small_spec(IntegratorKind::AdaHard, 20), d, 0);
  CHECK(dynamic_cast<const AdaboostModel&>(*model).rounds().size() == 1);
  CHECK(training_accuracy(*model, d) == 1.0);
}

TEST_CASE("ADA-M keeps a meta model per round and weights are finite") {
  const auto y = testsupport::cyclic_labels(45, 3);
  auto d = data_of({view("a", testsupport::planted_signal(y, 3, 1, 0.8, 1)), view("b", testsupport::gaussian_matrix(45, 3, 2))}, y, 3);
  auto spec = small_spec(IntegratorKind::AdaMeta, 5);
  spec.boosting_rounds = 3;
  const auto model = fit_integrator(spec, d, 2);
  const auto& ada = dynamic_cast<const AdaboostModel&>(*model);
  for (const auto& r : ada.rounds()) {
    CHECK(r.meta.has_value());
    CHECK(std::isfinite(r.alpha));
    CHECK(r.alpha >= 0.0);
  }
  CHECK(ada.aggregator() == Aggregator::Meta);
}

// -------------------------------------------------------------------- PBMV

TEST_CASE("simplex projection") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng() % 6);
    for (double& x : v) x = g(rng);
    const auto p = project_to_simplex(v);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double x : p) CHECK(x >= 0.0);
    // optimality: no other simplex point from a few random draws is closer
    double best = 0;
    for (std::size_t i = 0; i < v.size(); ++i) best += (v[i] - p[i]) * (v[i] - p[i]);
    for (int k = 0; k < 20; ++k) {
      std::vector<double> q(v.size());
      for (double& x : q) x = std::fabs(g(rng));
      const double s = std::accumulate(q.begin(), q.end(), 0.0);
      double d = 0;
      for (std::size_t i = 0; i < v.size(); ++i) d += (v[i] - q[i] / s) * (v[i] - q[i] / s);
      CHECK(d >= best - 1e-12);
    }
  }
}

TEST_CASE("C-bound minimizer prefers the more reliable view") {
  // view 0 correct on 90% of samples, view 1 on 60%
  std::vector<std::vector<double>> b(2, std::vector<double>(100));
  for (int i = 0; i < 100; ++i) {
    b[0][i] = i < 90 ? 1.0 : -1.0;
    b[1][i] = i % 10 < 6 ? 1.0 : -1.0;
  }
  const std::vector<double> w(100, 0.01);
  const auto sol = minimize_view_cbound(b, w, 200, 1e-6);
  CHECK(sol.converged);
  CHECK(sol.rho[0] > sol.rho[1]);
  CHECK(sol.rho[0] + sol.rho[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("PBMV on two identical views splits weight evenly and matches single-view boosting") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto y = testsupport::random_labels(40, 3, seed + 20);
    const auto x = testsupport::planted_signal(y, 3, 2, 0.6, seed);
    auto spec = small_spec(IntegratorKind::Pbmv, 2);
    spec.base.max_depth = 1;
    spec.boosting_rounds = 6;
    auto d = data_of({view("a", x), view("b", x)}, y, 3);
    d.views[1].feature_names = d.views[0].feature_names;
    const auto model = fit_integrator(spec, d, seed);
    const auto& pb = dynamic_cast<const PbmvModel&>(*model);
    CHECK(std::fabs(pb.view_weights()[0] - 0.5) <= 0.05);
    bool discarded = false;
    for (const auto& q : pb.classifier_weights()) discarded = discarded || q[0] == 0.0;
    if (!discarded) CHECK(model->predict(d.views).labels == oracle::reference_samme(x, y, 3, spec.base, 6, seed));
  }
}

TEST_CASE("PBMV weights the signal view above the noise view") {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto y = testsupport::cyclic_labels(60, 3);
    auto d = data_of({view("signal", testsupport::planted_signal(y, 4, 2, 1.0, seed)),
                      view("noise", testsupport::gaussian_matrix(60, 4, seed + 100))},
                     y, 3);
    auto spec = small_spec(IntegratorKind::Pbmv, 3);
    spec.base.max_depth = 1;
    const auto model = fit_integrator(spec, d, seed);
    const auto& pb = dynamic_cast<const PbmvModel&>(*model);
    for (const auto& rho : pb.view_weight_trace()) CHECK(std::fabs(rho[0] + rho[1] - 1.0) <= 1e-9);
    for (const auto& q : pb.classifier_weights())
      for (double v : q) CHECK(v >= 0.0);
    ok += pb.view_weights()[0] > pb.view_weights()[1];
  }
  CHECK(ok >= 9);
}

TEST_CASE("PBMV needs two views") {
  const auto y = testsupport::cyclic_labels(20, 2);
  auto d = data_of({view("a", testsupport::gaussian_matrix(20, 2, 1))}, y, 2);
  CHECK_THROWS_AS(fit_integrator(small_spec(IntegratorKind::Pbmv), d, 0), std::invalid_argument);
}

// -------------------------------------------------------------------- MoE

TEST_CASE("mixture of experts has one binary expert per class") {
  const auto y = testsupport::cyclic_labels(48, 4);
  auto d = data_of({view("a", testsupport::planted_signal(y, 3, 3, 4.0, 1)), view("b", testsupport::planted_signal(y, 3, 3, 4.0, 2))},
                   y, 4);
  const auto model = fit_integrator(small_spec(IntegratorKind::MoeCombn), d, 1);
  const auto& moe = dynamic_cast<const MoeModel&>(*model);
  CHECK(moe.n_experts() == 4);
  const auto votes = moe.expert_votes(d.views);
  std::vector<int> own(4, 0), claimed(4, 0);
  for (std::size_t i = 0; i < 48; ++i) {
    ++own[y[i]];
    claimed[y[i]] += votes[i][y[i]].claims;
  }
  for (int c = 0; c < 4; ++c) CHECK(claimed[c] >= 0.9 * own[c]);
  const auto p = model->predict(d.views);
  for (std::size_t i = 0; i < 48; ++i) {
    CHECK(p.labels[i] == moe_gate(votes[i]).label);
    CHECK(std::accumulate(p.probabilities.row(i).begin(), p.probabilities.row(i).end(), 0.0) == doctest::Approx(1.0));
  }
}

TEST_CASE("two-class mixture follows the more confident claimant") {
  const auto y = testsupport::cyclic_labels(20, 2);
  auto d = data_of({view("a", testsupport::planted_signal(y, 2, 1, 1.0, 4))}, y, 2);
  const auto model = fit_integrator(small_spec(IntegratorKind::MoeCombn), d, 3);
  const auto& moe = dynamic_cast<const MoeModel&>(*model);
  const auto votes = moe.expert_votes(d.views);
  const auto p = model->predict(d.views);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& v = votes[i];
    int want = kUnknownLabel;
    if (v[0].claims && v[1].claims) want = v[1].own_probability > v[0].own_probability ? 1 : 0;
    else if (v[0].claims) want = 0;
    else if (v[1].claims) want = 1;
    CHECK(p.labels[i] == want);
  }
}

TEST_CASE("mixture rejects a class missing from training") {
  const std::vector<int> y{0, 0, 1, 1, 0, 1};
  auto d = data_of({view("a", testsupport::gaussian_matrix(6, 2, 1))}, y, 3);
  CHECK_THROWS_AS(fit_integrator(small_spec(IntegratorKind::MoeCombn), d, 0), std::invalid_argument);
}

// ---------------------------------------------------------- incremental

TEST_CASE("incremental selection drops the harmful modality first") {
  // additive toy: each good modality adds 0.2, noise costs 0.15
  const auto score = [](const std::vector<std::string>& s) {
    double f = 0.3;
    for (const auto& m : s) f += m == "noise" ? -0.15 : 0.2;
    return f;
  };
  const auto r = incremental_select({"a", "noise", "b"}, score);
  REQUIRE(r.trace.size() == 2);
  CHECK(r.trace[0].removed == "None");
  CHECK(r.trace[0].f1_after == doctest::Approx(0.55));
  CHECK(r.trace[1].removed == "noise");
  CHECK(r.trace[1].f1_after == doctest::Approx(0.7));
  CHECK(r.best_subset == std::vector<std::string>{"a", "b"});
  CHECK(r.best_f1 == doctest::Approx(0.7));
}

TEST_CASE("two identical modalities stop after at most one removal") {
  const auto flat = [](const std::vector<std::string>&) { return 0.8; };
  const auto r = incremental_select({"x", "y"}, flat);
  CHECK(r.trace.size() <= 2);
  CHECK(r.best_subset.size() >= 1);
}

TEST_CASE("removal continues inside the margin and stops outside it") {
  const auto score = [](const std::vector<std::string>& s) {
    if (s.size() == 3) return 0.700;
    if (s.size() == 2) return std::find(s.begin(), s.end(), "c") == s.end() ? 0.695 : 0.60;
    return 0.5;
  };
  const auto r = incremental_select({"a", "b", "c"}, score);
  CHECK(r.trace.size() == 2);
  CHECK(r.trace[1].removed == "c");
  CHECK(r.best_subset == std::vector<std::string>{"a", "b"});
  CHECK(r.best_f1 == doctest::Approx(0.7));
}
