#include "latefuse/feature_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/binomial.hpp>

#include "latefuse/random.hpp"

namespace latefuse {

const char* to_string(FeatureStatus s) {
  switch (s) {
    case FeatureStatus::Confirmed:
      return "confirmed";
    case FeatureStatus::Rejected:
      return "rejected";
    default:
      return "tentative";
  }
}

std::vector<std::size_t> BorutaResult::confirmed() const {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < status.size(); ++f)
    if (status[f] == FeatureStatus::Confirmed) out.push_back(f);
  return out;
}

BorutaResult boruta_select(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                           const BorutaParams& params, std::uint64_t seed) {
  if (x.rows() == 0 || x.cols() == 0) throw std::invalid_argument("boruta_select: empty input");
  if (params.max_iter < 1) throw std::invalid_argument("boruta_select: max_iter must be >= 1");
  const std::size_t p = x.cols(), n = x.rows();
  BorutaResult res;
  res.status.assign(p, FeatureStatus::Tentative);
  res.hits.assign(p, 0);
  const double threshold = params.alpha / static_cast<double>(p);

  std::vector<std::size_t> perm(n);
  for (int it = 1; it <= params.max_iter; ++it) {
    if (std::none_of(res.status.begin(), res.status.end(), [](FeatureStatus s) { return s == FeatureStatus::Tentative; }))
      break;
    std::vector<std::size_t> current;
    for (std::size_t f = 0; f < p; ++f)
      if (res.status[f] != FeatureStatus::Rejected) current.push_back(f);

    // One shadow per original feature; rejected features lose their real
    // column but keep their shadow, so the shadow pool does not shrink.
    const std::size_t m = current.size();
    const std::size_t width = m + p;
    // Column slots are shuffled every iteration: the tree builder breaks
    // equal-gain ties toward lower columns, which would otherwise favour
    // real features over their shadows.
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(it)}));
    std::vector<std::size_t> slot(width);
    std::iota(slot.begin(), slot.end(), std::size_t{0});
    std::shuffle(slot.begin(), slot.end(), rng);
    Matrix aug(n, width);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t r = 0; r < n; ++r) aug(r, slot[j]) = x(r, current[j]);
    for (std::size_t f = 0; f < p; ++f) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      for (std::size_t r = 0; r < n; ++r) aug(r, slot[m + f]) = x(perm[r], f);
    }
    GbmParams gp = params.learner;
    gp.seed = derive_seed(seed, {static_cast<std::uint64_t>(it), 1});
    const GbmModel model = fit_gbm(aug, y, n_classes, {}, gp);
    const auto imp = model.feature_importances();
    double shadow_max = 0.0;
    for (std::size_t f = 0; f < p; ++f) shadow_max = std::max(shadow_max, imp[slot[m + f]]);
    for (std::size_t j = 0; j < m; ++j)
      if (imp[slot[j]] > shadow_max) ++res.hits[current[j]];
    res.n_iterations = it;

    const boost::math::binomial_distribution<double> null_dist(static_cast<double>(it), 0.5);
    for (std::size_t f = 0; f < p; ++f) {
      if (res.status[f] != FeatureStatus::Tentative) continue;
      const double h = res.hits[f];
      const double p_upper = h > 0 ? boost::math::cdf(boost::math::complement(null_dist, h - 1.0)) : 1.0;
      const double p_lower = boost::math::cdf(null_dist, h);
      const double p_two = std::min(1.0, 2.0 * std::min(p_upper, p_lower));
      if (p_two < threshold) res.status[f] = p_upper < p_lower ? FeatureStatus::Confirmed : FeatureStatus::Rejected;
    }
  }
  return res;
}

std::vector<double> aggregate_boosted_importance(std::span<const WeightedScores> rounds) {
  if (rounds.empty()) throw std::invalid_argument("aggregate_boosted_importance: no rounds");
  const std::size_t width = rounds.front().scores.size();
  double wsum = 0.0;
  std::vector<double> out(width, 0.0);
  for (const auto& r : rounds) {
    if (r.scores.size() != width) throw std::invalid_argument("aggregate_boosted_importance: width mismatch");
    if (r.weight < 0.0 || !std::isfinite(r.weight)) throw std::invalid_argument("aggregate_boosted_importance: bad weight");
    wsum += r.weight;
    for (std::size_t f = 0; f < width; ++f) out[f] += r.weight * r.scores[f];
  }
  if (!(wsum > 0.0)) throw std::invalid_argument("aggregate_boosted_importance: all weights are zero");
  for (double& v : out) v /= wsum;
  return out;
}

std::vector<SignatureEntry> select_signature(std::span<const FoldScores> per_fold, std::size_t n_folds,
                                             const SignatureThresholds& thresholds) {
  if (n_folds == 0) return {};
  struct Acc {
    std::size_t selected = 0;
    double scaled_sum = 0.0;
  };
  std::map<FeatureKey, Acc> acc;
  for (const auto& fold : per_fold) {
    std::map<std::string, double> block_max;
    for (const auto& [key, raw] : fold) {
      double& mx = block_max[key.first];
      mx = std::max(mx, raw);
    }
    for (const auto& [key, raw] : fold) {
      if (!(raw > 0.0)) continue;
      const double mx = block_max[key.first];
      auto& a = acc[key];
      ++a.selected;
      a.scaled_sum += mx > 0.0 ? raw / mx : 0.0;
    }
  }
  std::vector<SignatureEntry> out;
  for (const auto& [key, a] : acc) {
    const double freq = static_cast<double>(a.selected) / static_cast<double>(n_folds);
    const double score = a.scaled_sum / static_cast<double>(a.selected);
    if (freq + 1e-12 >= thresholds.min_frequency && score + 1e-12 >= thresholds.min_score)
      out.push_back({key.first, key.second, score, freq});
  }
  return out;
}

StabilityReport stability_cwrel(std::span<const std::set<std::string>> subsets, std::size_t universe_size) {
  if (subsets.size() < 2) throw std::invalid_argument("stability_cwrel: need at least 2 subsets");
  StabilityReport rep;
  rep.n_subsets = subsets.size();
  rep.universe_size = universe_size;
  for (const auto& s : subsets)
    for (const auto& f : s) ++rep.frequencies[f];
  rep.union_size = rep.frequencies.size();
  if (rep.union_size > universe_size)
    throw std::invalid_argument("stability_cwrel: subsets contain features outside the universe");

  const double n = static_cast<double>(subsets.size());
  const double Y = static_cast<double>(universe_size);
  double N = 0.0, sum_ff = 0.0;
  for (const auto& [f, count] : rep.frequencies) {
    const double F = static_cast<double>(count);
    N += F;
    sum_ff += F * (F - 1.0);
  }
  if (N == 0.0) {
    rep.cw_rel = 0.0;
    return rep;
  }
  const bool identical = std::all_of(subsets.begin(), subsets.end(), [&](const auto& s) { return s == subsets.front(); });
  if (identical) {
    rep.cw_rel = 1.0;
    return rep;
  }
  const double D = std::fmod(N, Y);
  const double H = std::fmod(N, n);
  const double num = Y * (N - D + sum_ff) - N * N + D * D;
  const double den = Y * (H * H + n * (N - H) - D) - N * N + D * D;
  rep.cw_rel = den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 1.0;
  return rep;
}

StabilityReport stability_cwrel(std::span<const std::set<std::string>> subsets, const std::set<std::string>& universe) {
  for (const auto& s : subsets)
    for (const auto& f : s)
      if (!universe.contains(f)) throw std::invalid_argument("stability_cwrel: feature '" + f + "' is outside the universe");
  return stability_cwrel(subsets, universe.size());
}

}  // namespace latefuse
