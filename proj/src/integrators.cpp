#include "latefuse/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "latefuse/folds.hpp"
#include "latefuse/parallel.hpp"
#include "latefuse/preprocess.hpp"
#include "latefuse/random.hpp"

namespace latefuse {

namespace {

constexpr const char* kKindNames[] = {"CONCAT", "ENS-H", "ENS-S", "ML", "ADA-H", "ADA-S", "ADA-M", "PBMV", "MOE-COMBN"};

std::vector<std::size_t> resolve_views(const IntegratorSpec& spec, const TrainingData& data) {
  std::vector<std::size_t> idx;
  if (spec.modalities.empty()) {
    idx.resize(data.views.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  } else {
    for (const auto& name : spec.modalities) {
      auto it = std::find_if(data.views.begin(), data.views.end(), [&](const View& v) { return v.name == name; });
      if (it == data.views.end()) throw std::invalid_argument("integrator: unknown modality '" + name + "'");
      idx.push_back(static_cast<std::size_t>(it - data.views.begin()));
    }
  }
  if (idx.empty()) throw std::invalid_argument("integrator: no modalities");
  return idx;
}

void check_data(const TrainingData& data) {
  if (data.n_classes < 2) throw std::invalid_argument("integrator: need at least 2 classes");
  for (int y : data.labels)
    if (y < 0 || static_cast<std::size_t>(y) >= data.n_classes) throw std::invalid_argument("integrator: invalid label");
  for (const auto& v : data.views) {
    if (v.x.rows() != data.labels.size()) throw std::invalid_argument("integrator: view '" + v.name + "' row count mismatch");
    if (v.feature_names.size() != v.x.cols())
      throw std::invalid_argument("integrator: view '" + v.name + "' feature names do not match its width");
  }
}

GbmParams seeded(const GbmParams& base, std::uint64_t seed) {
  GbmParams p = base;
  p.seed = seed;
  return p;
}

// Fits one GBM per selected view.
std::vector<ModalityModel> fit_per_modality(const IntegratorSpec& spec, const TrainingData& data,
                                            const std::vector<std::size_t>& views, std::span<const int> y,
                                            std::size_t n_classes, std::span<const double> weights, std::uint64_t seed) {
  std::vector<ModalityModel> out(views.size());
  parallel_for(views.size(), spec.threads, [&](std::size_t m) {
    const View& v = data.views[views[m]];
    out[m] = {v.name, v.feature_names,
              fit_gbm(v.x, y, n_classes, weights, seeded(spec.base_for(v.name), derive_seed(seed, {m})))};
  });
  return out;
}

const Matrix& find_view(std::span<const View> views, const std::string& name) {
  for (const auto& v : views)
    if (v.name == name) return v.x;
  throw std::invalid_argument("predict: missing modality '" + name + "'");
}

std::vector<PredictionSet> predict_models(const std::vector<ModalityModel>& models, std::span<const View> views) {
  std::vector<PredictionSet> out;
  out.reserve(models.size());
  for (const auto& m : models) out.push_back(m.model.predict_proba(find_view(views, m.modality)));
  return out;
}

std::vector<PredictionSet> predict_models(const std::vector<ModalityModel>& models, const TrainingData& data,
                                          const std::vector<std::size_t>& views) {
  std::vector<PredictionSet> out;
  out.reserve(models.size());
  for (std::size_t m = 0; m < models.size(); ++m) out.push_back(models[m].model.predict_proba(data.views[views[m]].x));
  return out;
}

void add_scores(FoldScores& out, const ModalityModel& m, double scale = 1.0) {
  const auto imp = m.model.feature_importances();
  for (std::size_t f = 0; f < imp.size(); ++f) out[{m.modality, m.feature_names[f]}] += scale * imp[f];
}

Matrix meta_features(std::span<const PredictionSet> preds) {
  std::vector<const Matrix*> blocks;
  for (const auto& p : preds) blocks.push_back(&p.probabilities);
  return hconcat(blocks);
}

std::string meta_feature_name(std::size_t k) { return "prob_" + std::to_string(k); }

PredictionSet weighted_label_vote(const std::vector<PredictionSet>& round_preds, const std::vector<double>& alpha,
                                  std::size_t K, bool soft) {
  const std::size_t n = round_preds.front().size();
  Matrix scores(n, K);
  for (std::size_t t = 0; t < round_preds.size(); ++t)
    for (std::size_t i = 0; i < n; ++i) {
      if (soft) {
        for (std::size_t k = 0; k < K; ++k) scores(i, k) += alpha[t] * round_preds[t].probabilities(i, k);
      } else {
        scores(i, static_cast<std::size_t>(round_preds[t].labels[i])) += alpha[t];
      }
    }
  normalize_rows(scores);
  return from_probabilities(std::move(scores));
}

}  // namespace

const char* to_string(IntegratorKind kind) { return kKindNames[static_cast<int>(kind)]; }

IntegratorKind parse_integrator_kind(const std::string& s) {
  for (int i = 0; i < 9; ++i)
    if (s == kKindNames[i]) return static_cast<IntegratorKind>(i);
  throw std::invalid_argument("unknown integrator kind '" + s + "'");
}

std::string IntegratorSpec::label() const { return name.empty() ? to_string(kind) : name; }

const GbmParams& IntegratorSpec::base_for(const std::string& modality) const {
  auto it = base_overrides.find(modality);
  return it == base_overrides.end() ? base : it->second;
}

void IntegratorSpec::validate() const {
  if (boosting_rounds < 1) throw std::invalid_argument("boosting_rounds must be >= 1");
  if (!(soft_confidence_ratio >= 1.0)) throw std::invalid_argument("soft_confidence_ratio must be >= 1");
  if (inner_folds < 2) throw std::invalid_argument("inner_folds must be >= 2");
  if (pbmv_max_steps < 1) throw std::invalid_argument("pbmv_max_steps must be >= 1");
  if (!(pbmv_tolerance > 0.0)) throw std::invalid_argument("pbmv_tolerance must be > 0");
  if (smote_k < 1) throw std::invalid_argument("smote_k must be >= 1");
  if (meta.n_trees < 1) throw std::invalid_argument("meta forest needs at least one tree");
  auto check = [](const GbmParams& p) {
    if (p.n_rounds < 1) throw std::invalid_argument("base learner n_rounds must be >= 1");
    if (!(p.learning_rate > 0.0)) throw std::invalid_argument("base learner learning_rate must be > 0");
    if (p.max_depth < 1) throw std::invalid_argument("base learner max_depth must be >= 1");
    if (p.min_leaf < 1) throw std::invalid_argument("base learner min_leaf must be >= 1");
    if (!(p.subsample > 0.0 && p.subsample <= 1.0)) throw std::invalid_argument("base learner subsample must be in (0, 1]");
  };
  check(base);
  for (const auto& [m, p] : base_overrides) check(p);
  std::set<std::string> seen;
  for (const auto& m : modalities)
    if (!seen.insert(m).second) throw std::invalid_argument("modality '" + m + "' listed twice");
}

const Matrix& TrainedIntegrator::view_matrix(std::span<const View> views, std::size_t modality) const {
  return find_view(views, modalities_.at(modality));
}

Matrix out_of_fold_probabilities(const Matrix& x, std::span<const int> y, std::size_t n_classes, const GbmParams& params,
                                 int inner_folds, std::span<const double> weights, std::uint64_t seed) {
  FoldPlan plan;
  try {
    plan = make_fold_plan(y, 1, inner_folds, seed);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("inner fold infeasible: a class has fewer than " + std::to_string(inner_folds) + " samples");
  }
  Matrix oof(x.rows(), n_classes);
  for (int f = 0; f < inner_folds; ++f) {
    const auto test = plan.test_indices(0, f);
    const auto train = plan.train_indices(0, f);
    std::vector<int> ytr(train.size());
    std::vector<double> wtr;
    for (std::size_t i = 0; i < train.size(); ++i) ytr[i] = y[train[i]];
    if (!weights.empty())
      for (std::size_t i : train) wtr.push_back(weights[i]);
    GbmParams p = params;
    p.seed = derive_seed(params.seed, {static_cast<std::uint64_t>(f)});
    const auto model = fit_gbm(x.select_rows(train), ytr, n_classes, wtr, p);
    const auto pred = model.predict_proba(x.select_rows(test));
    for (std::size_t i = 0; i < test.size(); ++i)
      for (std::size_t k = 0; k < n_classes; ++k) oof(test[i], k) = pred.probabilities(i, k);
  }
  return oof;
}

// ------------------------------------------------------------------ CONCAT

PredictionSet ConcatModel::predict(std::span<const View> views) const {
  std::vector<const Matrix*> blocks;
  for (std::size_t m = 0; m < modalities().size(); ++m) blocks.push_back(&view_matrix(views, m));
  return model_.predict_proba(hconcat(blocks));
}

FoldScores ConcatModel::feature_scores() const {
  FoldScores out;
  const auto imp = model_.feature_importances();
  for (std::size_t f = 0; f < imp.size(); ++f) out[provenance_[f]] = imp[f];
  return out;
}

// ------------------------------------------------------------------ voting

std::vector<PredictionSet> VotingModel::predict_each(std::span<const View> views) const {
  return predict_models(models_, views);
}

PredictionSet VotingModel::predict(std::span<const View> views) const {
  const auto each = predict_each(views);
  return kind() == IntegratorKind::EnsHard ? vote_hard(each) : vote_soft(each);
}

FoldScores VotingModel::feature_scores() const {
  FoldScores out;
  for (const auto& m : models_) add_scores(out, m);
  return out;
}

// ------------------------------------------------------------ meta learner

PredictionSet MetaLearnerModel::predict(std::span<const View> views) const {
  const auto each = predict_models(base_, views);
  return meta_.predict_proba(meta_features(each));
}

FoldScores MetaLearnerModel::feature_scores() const {
  FoldScores out;
  const auto imp = meta_.feature_importances();
  const std::size_t K = n_classes();
  for (std::size_t m = 0; m < base_.size(); ++m)
    for (std::size_t k = 0; k < K; ++k) out[{base_[m].modality, meta_feature_name(k)}] = imp[m * K + k];
  return out;
}

std::vector<double> MetaLearnerModel::modality_relevance() const {
  const auto imp = meta_.feature_importances();
  const std::size_t K = n_classes();
  std::vector<double> rel(base_.size(), 0.0);
  for (std::size_t m = 0; m < base_.size(); ++m)
    for (std::size_t k = 0; k < K; ++k) rel[m] += imp[m * K + k];
  return rel;
}

// ---------------------------------------------------------------- adaboost

Aggregator AdaboostModel::aggregator() const {
  switch (kind()) {
    case IntegratorKind::AdaHard:
      return Aggregator::Hard;
    case IntegratorKind::AdaSoft:
      return Aggregator::Soft;
    default:
      return Aggregator::Meta;
  }
}

PredictionSet AdaboostModel::predict_round(std::size_t round, std::span<const View> views) const {
  const auto& r = rounds_.at(round);
  const auto each = predict_models(r.models, views);
  switch (aggregator()) {
    case Aggregator::Hard:
      return vote_hard(each);
    case Aggregator::Soft:
      return vote_soft(each);
    default:
      return r.meta->predict_proba(meta_features(each));
  }
}

PredictionSet AdaboostModel::predict(std::span<const View> views) const {
  std::vector<PredictionSet> preds;
  std::vector<double> alpha;
  for (std::size_t t = 0; t < rounds_.size(); ++t) {
    preds.push_back(predict_round(t, views));
    alpha.push_back(rounds_[t].alpha);
  }
  return weighted_label_vote(preds, alpha, n_classes(), aggregator() == Aggregator::Soft);
}

FoldScores AdaboostModel::feature_scores() const {
  FoldScores out;
  for (std::size_t m = 0; m < modalities().size(); ++m) {
    std::vector<WeightedScores> per_round;
    for (const auto& r : rounds_) {
      const auto imp = r.models[m].model.feature_importances();
      per_round.push_back({r.alpha, {imp.begin(), imp.end()}});
    }
    const auto agg = aggregate_boosted_importance(per_round);
    const auto& names = rounds_.front().models[m].feature_names;
    for (std::size_t f = 0; f < agg.size(); ++f) out[{modalities()[m], names[f]}] = agg[f];
  }
  return out;
}

// -------------------------------------------------------------------- PBMV

PredictionSet PbmvModel::predict(std::span<const View> views) const {
  const std::size_t K = n_classes(), V = modalities().size();
  std::size_t n = 0;
  std::vector<std::vector<PredictionSet>> preds(voters_.size());
  for (std::size_t t = 0; t < voters_.size(); ++t) {
    preds[t] = predict_models(voters_[t], views);
    n = preds[t].front().size();
  }
  Matrix scores(n, K);
  for (std::size_t t = 0; t < voters_.size(); ++t)
    for (std::size_t v = 0; v < V; ++v) {
      const double w = rho_[v] * q_[t][v];
      if (w == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) scores(i, static_cast<std::size_t>(preds[t][v].labels[i])) += w;
    }
  normalize_rows(scores);
  return from_probabilities(std::move(scores));
}

FoldScores PbmvModel::feature_scores() const {
  FoldScores out;
  for (std::size_t v = 0; v < modalities().size(); ++v) {
    std::vector<WeightedScores> per_iter;
    double total = 0.0;
    for (std::size_t t = 0; t < voters_.size(); ++t) {
      const auto imp = voters_[t][v].model.feature_importances();
      per_iter.push_back({q_[t][v], {imp.begin(), imp.end()}});
      total += q_[t][v];
    }
    const auto& names = voters_.front()[v].feature_names;
    const std::vector<double> agg = total > 0.0 ? aggregate_boosted_importance(per_iter) : std::vector<double>(names.size(), 0.0);
    for (std::size_t f = 0; f < agg.size(); ++f) out[{modalities()[v], names[f]}] = agg[f];
  }
  return out;
}

std::vector<std::string> PbmvModel::warnings() const {
  if (!fallback_) return {};
  return {"view-weight optimization did not converge; uniform view weights used"};
}

// --------------------------------------------------------------------- MoE

std::vector<std::vector<ExpertVote>> MoeModel::expert_votes(std::span<const View> views) const {
  const std::size_t K = experts_.size();
  std::vector<std::vector<ExpertVote>> votes;
  for (std::size_t c = 0; c < K; ++c) {
    const auto soft = vote_soft(predict_models(experts_[c], views));
    if (votes.empty()) votes.assign(soft.size(), std::vector<ExpertVote>(K));
    for (std::size_t i = 0; i < soft.size(); ++i) votes[i][c] = {soft.probabilities(i, 0), soft.labels[i] == 0};
  }
  return votes;
}

PredictionSet MoeModel::predict(std::span<const View> views) const {
  const auto votes = expert_votes(views);
  const std::size_t K = experts_.size();
  PredictionSet out;
  out.labels.resize(votes.size());
  out.probabilities = Matrix(votes.size(), K);
  for (std::size_t i = 0; i < votes.size(); ++i) {
    out.labels[i] = moe_gate(votes[i]).label;
    for (std::size_t c = 0; c < K; ++c) out.probabilities(i, c) = votes[i][c].own_probability;
  }
  normalize_rows(out.probabilities);
  return out;
}

FoldScores MoeModel::expert_scores(std::size_t cls) const {
  FoldScores out;
  for (const auto& m : experts_.at(cls)) add_scores(out, m);
  return out;
}

FoldScores MoeModel::feature_scores() const {
  FoldScores out;
  const double scale = 1.0 / static_cast<double>(experts_.size());
  for (const auto& expert : experts_)
    for (const auto& m : expert) add_scores(out, m, scale);
  return out;
}

// ----------------------------------------------------------------- fitting

namespace {

std::unique_ptr<TrainedIntegrator> fit_concat(const IntegratorSpec& spec, const TrainingData& data,
                                              const std::vector<std::size_t>& views, std::uint64_t seed) {
  std::vector<const Matrix*> blocks;
  std::vector<FeatureKey> provenance;
  std::set<FeatureKey> seen;
  std::vector<std::string> names;
  for (std::size_t v : views) {
    const View& view = data.views[v];
    blocks.push_back(&view.x);
    names.push_back(view.name);
    for (const auto& f : view.feature_names) {
      FeatureKey key{view.name, f};
      if (!seen.insert(key).second) throw std::invalid_argument("concat: duplicate feature '" + view.name + ":" + f + "'");
      provenance.push_back(std::move(key));
    }
  }
  auto model = fit_gbm(hconcat(blocks), data.labels, data.n_classes, {}, seeded(spec.base, derive_seed(seed, {0})));
  return std::make_unique<ConcatModel>(data.n_classes, std::move(names), std::move(model), std::move(provenance));
}

std::vector<std::string> view_names(const TrainingData& data, const std::vector<std::size_t>& views) {
  std::vector<std::string> names;
  for (std::size_t v : views) names.push_back(data.views[v].name);
  return names;
}

RandomForestModel fit_meta(const IntegratorSpec& spec, const TrainingData& data, const std::vector<std::size_t>& views,
                           std::span<const double> weights, std::uint64_t seed) {
  std::vector<Matrix> oof(views.size());
  parallel_for(views.size(), spec.threads, [&](std::size_t m) {
    const View& v = data.views[views[m]];
    oof[m] = out_of_fold_probabilities(v.x, data.labels, data.n_classes, seeded(spec.base_for(v.name), derive_seed(seed, {m, 1})),
                                       spec.inner_folds, weights, derive_seed(seed, {m, 2}));
  });
  std::vector<const Matrix*> blocks;
  for (const auto& b : oof) blocks.push_back(&b);
  ForestParams fp = spec.meta;
  fp.seed = derive_seed(seed, {views.size(), 3});
  return fit_random_forest(hconcat(blocks), data.labels, data.n_classes, fp, weights);
}

std::unique_ptr<TrainedIntegrator> fit_meta_learner(const IntegratorSpec& spec, const TrainingData& data,
                                                    const std::vector<std::size_t>& views, std::uint64_t seed) {
  auto base = fit_per_modality(spec, data, views, data.labels, data.n_classes, {}, seed);
  auto meta = fit_meta(spec, data, views, {}, seed);
  return std::make_unique<MetaLearnerModel>(data.n_classes, view_names(data, views), std::move(base), std::move(meta));
}

std::unique_ptr<TrainedIntegrator> fit_adaboost(const IntegratorSpec& spec, const TrainingData& data,
                                                const std::vector<std::size_t>& views, std::uint64_t seed) {
  const Aggregator agg = spec.kind == IntegratorKind::AdaHard   ? Aggregator::Hard
                         : spec.kind == IntegratorKind::AdaSoft ? Aggregator::Soft
                                                                : Aggregator::Meta;
  const std::size_t n = data.n_samples(), K = data.n_classes;
  const double max_error = 1.0 - 1.0 / static_cast<double>(K);
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<BoostRound> rounds;
  int discarded = 0;
  for (int t = 0; t < spec.boosting_rounds; ++t) {
    const std::uint64_t round_seed = derive_seed(seed, {static_cast<std::uint64_t>(t)});
    BoostRound round;
    round.models = fit_per_modality(spec, data, views, data.labels, K, w, round_seed);
    const auto each = predict_models(round.models, data, views);
    PredictionSet aggregated;
    if (agg == Aggregator::Hard) {
      aggregated = vote_hard(each);
    } else if (agg == Aggregator::Soft) {
      aggregated = vote_soft(each);
    } else {
      round.meta = fit_meta(spec, data, views, w, round_seed);
      aggregated = round.meta->predict_proba(meta_features(each));
    }
    const auto correct = adaboost_high_confidence(each, aggregated, data.labels, agg, spec.soft_confidence_ratio);
    double err = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      wsum += w[i];
      if (!correct[i]) err += w[i];
    }
    err /= wsum;
    if (err >= max_error) {
      ++discarded;
      std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(n));
      continue;
    }
    round.alpha = samme_alpha(err, K);
    rounds.push_back(std::move(round));
    if (err <= 0.0) break;
    samme_reweight(w, correct, rounds.back().alpha);
  }
  if (rounds.empty()) throw std::runtime_error("adaboost: zero usable rounds");
  return std::make_unique<AdaboostModel>(spec.kind, K, view_names(data, views), std::move(rounds), discarded);
}

std::unique_ptr<TrainedIntegrator> fit_pbmv(const IntegratorSpec& spec, const TrainingData& data,
                                            const std::vector<std::size_t>& views, std::uint64_t seed) {
  if (views.size() < 2) throw std::invalid_argument("PBMV needs at least 2 modalities");
  const std::size_t n = data.n_samples(), K = data.n_classes, V = views.size();
  const double max_error = 1.0 - 1.0 / static_cast<double>(K);
  const std::vector<double> uniform_n(n, 1.0 / static_cast<double>(n));
  const std::vector<double> uniform_v(V, 1.0 / static_cast<double>(V));

  std::vector<double> d = uniform_n;
  std::vector<double> rho = uniform_v;
  bool fallback = false;
  std::vector<std::vector<ModalityModel>> voters;
  std::vector<std::vector<double>> q;
  std::vector<std::vector<double>> rho_trace;
  // correct[v][t][i]
  std::vector<std::vector<std::vector<bool>>> correct(V);

  for (int t = 0; t < spec.boosting_rounds; ++t) {
    auto models = fit_per_modality(spec, data, views, data.labels, K, d, derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    const auto each = predict_models(models, data, views);
    std::vector<double> qt(V);
    bool all_perfect = true;
    for (std::size_t v = 0; v < V; ++v) {
      std::vector<bool> ok(n);
      double err = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        ok[i] = each[v].labels[i] == data.labels[i];
        if (!ok[i]) err += d[i];
      }
      all_perfect = all_perfect && err <= 0.0;
      qt[v] = err >= max_error ? 0.0 : 0.5 * samme_alpha(err, K);
      correct[v].push_back(std::move(ok));
    }
    voters.push_back(std::move(models));
    q.push_back(qt);

    // per-view Q-weighted correctness margins in [-1, 1]
    std::vector<std::vector<double>> b(V, std::vector<double>(n, -1.0));
    for (std::size_t v = 0; v < V; ++v) {
      double qsum = 0.0;
      for (const auto& row : q) qsum += row[v];
      if (!(qsum > 0.0)) continue;
      for (std::size_t i = 0; i < n; ++i) {
        double c = 0.0;
        for (std::size_t s = 0; s < q.size(); ++s)
          if (correct[v][s][i]) c += q[s][v];
        b[v][i] = 2.0 * c / qsum - 1.0;
      }
    }
    const auto sol = minimize_view_cbound(b, uniform_n, spec.pbmv_max_steps, spec.pbmv_tolerance);
    fallback = !sol.converged;
    rho = fallback ? uniform_v : sol.rho;
    rho_trace.push_back(rho);

    // sample weights from the rho-weighted cumulative margin
    std::vector<double> expo(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t v = 0; v < V; ++v)
        for (std::size_t s = 0; s < q.size(); ++s) expo[i] -= rho[v] * q[s][v] * (correct[v][s][i] ? 1.0 : -1.0);
    const double top = *std::max_element(expo.begin(), expo.end());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += d[i] = std::exp(expo[i] - top);
    for (double& x : d) x /= total;

    if (all_perfect) break;
  }
  return std::make_unique<PbmvModel>(K, view_names(data, views), std::move(voters), std::move(q), std::move(rho), fallback,
                                     std::move(rho_trace));
}

std::unique_ptr<TrainedIntegrator> fit_moe(const IntegratorSpec& spec, const TrainingData& data,
                                           const std::vector<std::size_t>& views, std::uint64_t seed) {
  const std::size_t K = data.n_classes;
  std::vector<std::size_t> counts(K, 0);
  for (int y : data.labels) ++counts[static_cast<std::size_t>(y)];
  for (std::size_t c = 0; c < K; ++c)
    if (counts[c] == 0) throw std::invalid_argument("MOE-COMBN: class " + std::to_string(c) + " absent from the training split");

  PreprocessConfig smote_cfg;
  smote_cfg.smote_k = spec.smote_k;
  std::vector<std::vector<ModalityModel>> experts(K);
  IntegratorSpec inner = spec;
  inner.threads = 1;
  parallel_for(K, spec.threads, [&](std::size_t c) {
    std::vector<int> y(data.labels.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = data.labels[i] == static_cast<int>(c) ? 0 : 1;
    TrainingData bin;
    bin.n_classes = 2;
    for (std::size_t v : views) bin.views.push_back(data.views[v]);
    const std::size_t n_own = counts[c], n_rest = data.labels.size() - counts[c];
    if (std::min(n_own, n_rest) >= 2 && n_own != n_rest) {
      std::vector<Matrix> mats;
      for (auto& v : bin.views) mats.push_back(std::move(v.x));
      bin.labels = smote_balance_views(mats, y, 2, smote_cfg, derive_seed(seed, {c, 1}));
      for (std::size_t v = 0; v < mats.size(); ++v) bin.views[v].x = std::move(mats[v]);
    } else {
      bin.labels = std::move(y);
    }
    std::vector<std::size_t> all(bin.views.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    experts[c] = fit_per_modality(inner, bin, all, bin.labels, 2, {}, derive_seed(seed, {c, 2}));
  });
  return std::make_unique<MoeModel>(K, view_names(data, views), std::move(experts));
}

}  // namespace

std::unique_ptr<TrainedIntegrator> fit_integrator(const IntegratorSpec& spec, const TrainingData& data, std::uint64_t seed) {
  spec.validate();
  check_data(data);
  if (data.n_samples() == 0) throw std::invalid_argument("integrator: no training samples");
  const auto views = resolve_views(spec, data);
  switch (spec.kind) {
    case IntegratorKind::Concat:
      return fit_concat(spec, data, views, seed);
    case IntegratorKind::EnsHard:
    case IntegratorKind::EnsSoft:
      return std::make_unique<VotingModel>(spec.kind, data.n_classes, view_names(data, views),
                                           fit_per_modality(spec, data, views, data.labels, data.n_classes, {}, seed));
    case IntegratorKind::MetaLearner:
      return fit_meta_learner(spec, data, views, seed);
    case IntegratorKind::AdaHard:
    case IntegratorKind::AdaSoft:
    case IntegratorKind::AdaMeta:
      return fit_adaboost(spec, data, views, seed);
    case IntegratorKind::Pbmv:
      return fit_pbmv(spec, data, views, seed);
    case IntegratorKind::MoeCombn:
      return fit_moe(spec, data, views, seed);
  }
  throw std::invalid_argument("integrator: unsupported kind");
}

}  // namespace latefuse
