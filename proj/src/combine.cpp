#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "latefuse/integrators.hpp"

namespace latefuse {

namespace {

void check_aligned(std::span<const PredictionSet> sets) {
  if (sets.empty()) throw std::invalid_argument("vote: no modality predictions");
  const std::size_t n = sets.front().size(), k = sets.front().n_classes();
  for (const auto& s : sets) {
    if (s.size() != n) throw std::invalid_argument("vote: modality predictions differ in length");
    if (s.n_classes() != k || s.probabilities.rows() != n) throw std::invalid_argument("vote: probability shape mismatch");
  }
  if (k == 0) throw std::invalid_argument("vote: zero classes");
}

}  // namespace

PredictionSet vote_hard(std::span<const PredictionSet> per_modality) {
  check_aligned(per_modality);
  const std::size_t n = per_modality.front().size(), K = per_modality.front().n_classes();
  const double M = static_cast<double>(per_modality.size());
  PredictionSet out;
  out.labels.resize(n);
  out.probabilities = Matrix(n, K);
  std::vector<int> counts(K);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(counts.begin(), counts.end(), 0);
    for (const auto& s : per_modality) {
      const int v = s.labels[i];
      if (v < 0 || static_cast<std::size_t>(v) >= K) throw std::invalid_argument("vote_hard: invalid modality label");
      ++counts[v];
    }
    const int top = *std::max_element(counts.begin(), counts.end());
    int chosen = -1;
    for (const auto& s : per_modality)
      if (counts[s.labels[i]] == top) {
        chosen = s.labels[i];
        break;
      }
    out.labels[i] = chosen;
    for (std::size_t k = 0; k < K; ++k) out.probabilities(i, k) = counts[k] / M;
  }
  return out;
}

PredictionSet vote_soft(std::span<const PredictionSet> per_modality) {
  check_aligned(per_modality);
  const std::size_t n = per_modality.front().size(), K = per_modality.front().n_classes();
  const double M = static_cast<double>(per_modality.size());
  Matrix mean(n, K);
  for (const auto& s : per_modality)
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = s.probabilities.row(i);
      const double sum = std::accumulate(row.begin(), row.end(), 0.0);
      if (!(std::fabs(sum - 1.0) <= 1e-6)) throw std::invalid_argument("vote_soft: probability row does not sum to 1");
      for (std::size_t k = 0; k < K; ++k) mean(i, k) += row[k] / M;
    }
  return from_probabilities(std::move(mean));
}

std::vector<bool> adaboost_high_confidence(std::span<const PredictionSet> per_modality, const PredictionSet& aggregated,
                                           std::span<const int> truth, Aggregator kind, double soft_confidence_ratio) {
  check_aligned(per_modality);
  const std::size_t n = truth.size();
  if (aggregated.size() != n || per_modality.front().size() != n)
    throw std::invalid_argument("adaboost_high_confidence: length mismatch");
  const std::size_t M = per_modality.size();
  const std::size_t quorum = (M + 1) / 2;
  std::vector<bool> correct(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const int agg = aggregated.labels[i];
    bool confident = false;
    if (kind == Aggregator::Soft) {
      const auto row = aggregated.probabilities.row(i);
      double first = -1.0, second = -1.0;
      for (double v : row) {
        if (v > first) {
          second = first;
          first = v;
        } else if (v > second) {
          second = v;
        }
      }
      confident = row.size() < 2 || first >= soft_confidence_ratio * second;
    } else {
      std::size_t agree = 0;
      for (const auto& s : per_modality) agree += s.labels[i] == agg;
      confident = agree >= quorum;
    }
    correct[i] = confident && agg == truth[i];
  }
  return correct;
}

std::vector<bool> adaboost_high_confidence(std::span<const PredictionSet> per_modality, std::span<const int> truth,
                                           Aggregator kind, double soft_confidence_ratio) {
  if (kind == Aggregator::Meta)
    throw std::invalid_argument("adaboost_high_confidence: meta aggregation needs the aggregated predictions");
  const PredictionSet agg = kind == Aggregator::Hard ? vote_hard(per_modality) : vote_soft(per_modality);
  return adaboost_high_confidence(per_modality, agg, truth, kind, soft_confidence_ratio);
}

double samme_alpha(double weighted_error, std::size_t n_classes) {
  constexpr double kFloor = 1e-10;
  const double eps = std::clamp(weighted_error, kFloor, 1.0 - kFloor);
  return std::log((1.0 - eps) / eps) + std::log(static_cast<double>(n_classes) - 1.0);
}

void samme_reweight(std::vector<double>& weights, const std::vector<bool>& correct, double alpha) {
  if (weights.size() != correct.size()) throw std::invalid_argument("samme_reweight: length mismatch");
  const double up = std::exp(alpha);
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!correct[i]) weights[i] *= up;
    sum += weights[i];
  }
  for (double& w : weights) w /= sum;
}

GateDecision moe_gate(std::span<const ExpertVote> votes) {
  GateDecision d;
  int claimants = 0;
  for (std::size_t k = 0; k < votes.size(); ++k) {
    if (!votes[k].claims) continue;
    ++claimants;
    if (d.label == kUnknownLabel || votes[k].own_probability > d.confidence) {
      d.label = static_cast<int>(k);
      d.confidence = votes[k].own_probability;
    }
  }
  if (claimants == 0) d.confidence = 0.0;
  return d;
}

// ----------------------------------------------------------- view weights

std::vector<double> project_to_simplex(std::vector<double> v) {
  if (v.empty()) return v;
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  for (double& x : v) x = std::max(0.0, x - theta);
  return v;
}

namespace {

struct CboundParts {
  double mu1 = 0.0, mu2 = 0.0;
  std::vector<double> d_mu1, d_mu2;
};

CboundParts cbound_parts(const std::vector<std::vector<double>>& b, std::span<const double> w, std::span<const double> rho) {
  const std::size_t V = b.size(), n = w.size();
  CboundParts p;
  p.d_mu1.assign(V, 0.0);
  p.d_mu2.assign(V, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double m = 0.0;
    for (std::size_t v = 0; v < V; ++v) m += rho[v] * b[v][i];
    p.mu1 += w[i] * m;
    p.mu2 += w[i] * m * m;
    for (std::size_t v = 0; v < V; ++v) {
      p.d_mu1[v] += w[i] * b[v][i];
      p.d_mu2[v] += 2.0 * w[i] * m * b[v][i];
    }
  }
  return p;
}

double cbound_value(const CboundParts& p) { return p.mu2 > 0.0 ? 1.0 - p.mu1 * p.mu1 / p.mu2 : 1.0; }

}  // namespace

ViewWeightSolution minimize_view_cbound(const std::vector<std::vector<double>>& margins, std::span<const double> sample_weights,
                                        int max_steps, double tolerance) {
  const std::size_t V = margins.size();
  if (V == 0) throw std::invalid_argument("minimize_view_cbound: no views");
  const std::size_t n = sample_weights.size();
  for (const auto& b : margins)
    if (b.size() != n) throw std::invalid_argument("minimize_view_cbound: margin length mismatch");

  ViewWeightSolution sol;
  sol.rho.assign(V, 1.0 / static_cast<double>(V));
  auto parts = cbound_parts(margins, sample_weights, sol.rho);
  sol.objective = cbound_value(parts);
  // mu1 is linear in rho, so if any point has a positive mean margin a vertex does
  for (std::size_t v = 0; v < V; ++v) {
    std::vector<double> vertex(V, 0.0);
    vertex[v] = 1.0;
    auto vp = cbound_parts(margins, sample_weights, vertex);
    const double obj = cbound_value(vp);
    if (vp.mu1 > 0.0 && (!(parts.mu1 > 0.0) || obj < sol.objective)) {
      sol.rho = std::move(vertex);
      sol.objective = obj;
      parts = std::move(vp);
    }
  }
  if (!(parts.mu1 > 0.0)) return sol;  // vacuous everywhere; caller falls back

  for (int step = 1; step <= max_steps; ++step) {
    sol.steps = step;
    // gradient of F = 1 - mu1^2/mu2
    std::vector<double> grad(V);
    for (std::size_t v = 0; v < V; ++v)
      grad[v] = -(2.0 * parts.mu1 * parts.d_mu1[v] * parts.mu2 - parts.mu1 * parts.mu1 * parts.d_mu2[v]) /
                (parts.mu2 * parts.mu2);
    double lr = 1.0;
    std::vector<double> cand;
    CboundParts cand_parts;
    double cand_obj = sol.objective;
    bool improved = false;
    while (lr > 1e-12) {
      cand = sol.rho;
      for (std::size_t v = 0; v < V; ++v) cand[v] -= lr * grad[v];
      cand = project_to_simplex(std::move(cand));
      cand_parts = cbound_parts(margins, sample_weights, cand);
      cand_obj = cbound_value(cand_parts);
      if (cand_parts.mu1 > 0.0 && cand_obj <= sol.objective) {
        improved = true;
        break;
      }
      lr *= 0.5;
    }
    if (!improved) {
      sol.converged = true;
      break;
    }
    double moved = 0.0;
    for (std::size_t v = 0; v < V; ++v) moved += std::fabs(cand[v] - sol.rho[v]);
    const double gain = sol.objective - cand_obj;
    sol.rho = std::move(cand);
    sol.objective = cand_obj;
    parts = std::move(cand_parts);
    if (gain <= tolerance && moved <= tolerance) {
      sol.converged = true;
      break;
    }
  }
  return sol;
}

// ------------------------------------------------------ backward elimination

IncrementalResult incremental_select(const std::vector<std::string>& modalities, const SubsetEvaluator& evaluate,
                                     double margin) {
  if (modalities.empty()) throw std::invalid_argument("incremental_select: no modalities");
  if (!(margin >= 0.0)) throw std::invalid_argument("incremental_select: margin must be >= 0");
  IncrementalResult res;
  std::vector<std::string> current = modalities;
  res.best_f1 = evaluate(current);
  res.trace.push_back({"None", res.best_f1});
  while (current.size() >= 2) {
    std::size_t best_idx = 0;
    double best_score = -1.0;
    for (std::size_t j = 0; j < current.size(); ++j) {
      std::vector<std::string> without = current;
      without.erase(without.begin() + static_cast<std::ptrdiff_t>(j));
      const double s = evaluate(without);
      if (s > best_score) {
        best_score = s;
        best_idx = j;
      }
    }
    if (best_score < res.best_f1 - margin) break;
    res.trace.push_back({current[best_idx], best_score});
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(best_idx));
    res.best_f1 = std::max(res.best_f1, best_score);
  }
  res.best_subset = current;
  return res;
}

}  // namespace latefuse
