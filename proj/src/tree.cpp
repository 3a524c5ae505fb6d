#include "latefuse/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace latefuse {

namespace {

struct RegStats {
  double w = 0.0;
  double s = 0.0;
  double ss = 0.0;
  int count = 0;

  void add(double wi, double ri) {
    w += wi;
    s += wi * ri;
    ss += wi * ri * ri;
    ++count;
  }
  double sse() const { return w > 0.0 ? ss - s * s / w : 0.0; }
  bool impure() const { return ss > 0.0 && sse() > 1e-12 * ss; }
};

struct SplitCandidate {
  double gain = -1.0;
  int feature = -1;
  double threshold = 0.0;
};

double midpoint(double lo, double hi) {
  double t = lo + 0.5 * (hi - lo);
  return t >= hi ? lo : t;
}

bool can_split(const RegStats& st, int depth, const TreeParams& p) {
  return (p.max_depth <= 0 || depth < p.max_depth) && st.count >= 2 * std::max(1, p.min_leaf) && st.impure();
}

}  // namespace

std::size_t Tree::leaf_of(std::span<const double> x) const {
  std::size_t n = 0;
  while (nodes[n].feature >= 0) {
    const auto& node = nodes[n];
    n = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
  }
  return n;
}

std::size_t Tree::n_splits() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature >= 0; }));
}

SortedColumns::SortedColumns(const Matrix& x) : rows_(x.rows()), cols_(x.cols()) {
  data_.resize(rows_ * cols_);
  order_.resize(rows_ * cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) data_[c * rows_ + r] = x(r, c);
  for (std::size_t c = 0; c < cols_; ++c) {
    auto* ord = order_.data() + c * rows_;
    std::iota(ord, ord + rows_, 0U);
    const double* col = data_.data() + c * rows_;
    std::stable_sort(ord, ord + rows_, [col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
  }
}

Tree fit_regression_tree(const SortedColumns& x, std::span<const double> targets,
                         std::span<const double> weights, const TreeParams& params,
                         std::vector<double>* importances) {
  const std::size_t n = x.rows();
  if (n == 0) throw std::invalid_argument("fit_tree: empty input");
  if (targets.size() != n || weights.size() != n) throw std::invalid_argument("fit_tree: length mismatch");
  const int min_leaf = std::max(1, params.min_leaf);

  std::vector<int> node_of(n, -1);
  RegStats root;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("fit_tree: negative weight");
    if (weights[i] > 0.0) {
      node_of[i] = 0;
      root.add(weights[i], targets[i]);
    }
  }
  if (root.w <= 0.0) throw std::invalid_argument("fit_tree: all weights are zero");

  Tree tree;
  tree.nodes.push_back({});
  std::vector<RegStats> stats{root};
  std::vector<int> frontier;
  if (can_split(root, 0, params)) frontier.push_back(0);

  std::vector<int> slot_of;
  struct Running {
    double w = 0.0, s = 0.0, last = 0.0;
    int count = 0;
  };
  std::vector<Running> running;
  std::vector<SplitCandidate> best;

  for (int depth = 0; !frontier.empty(); ++depth) {
    slot_of.assign(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < frontier.size(); ++s) slot_of[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
    best.assign(frontier.size(), {});

    for (std::size_t f = 0; f < x.cols(); ++f) {
      running.assign(frontier.size(), {});
      for (std::uint32_t i : x.order(f)) {
        const int nd = node_of[i];
        if (nd < 0) continue;
        const int slot = slot_of[static_cast<std::size_t>(nd)];
        if (slot < 0) continue;
        auto& run = running[static_cast<std::size_t>(slot)];
        const auto& total = stats[static_cast<std::size_t>(nd)];
        const double v = x.value(f, i);
        if (run.count >= min_leaf && total.count - run.count >= min_leaf && v > run.last) {
          const double wr = total.w - run.w;
          const double sr = total.s - run.s;
          const double gain = run.s * run.s / run.w + sr * sr / wr - total.s * total.s / total.w;
          auto& b = best[static_cast<std::size_t>(slot)];
          if (gain > b.gain) b = {gain, static_cast<int>(f), midpoint(run.last, v)};
        }
        run.w += weights[i];
        run.s += weights[i] * targets[i];
        run.last = v;
        ++run.count;
      }
    }

    std::vector<int> next;
    std::vector<int> split_nodes;
    for (std::size_t s = 0; s < frontier.size(); ++s) {
      const auto& b = best[s];
      if (b.feature < 0) continue;
      const int nd = frontier[s];
      const int left = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      tree.nodes.push_back({});
      stats.emplace_back();
      stats.emplace_back();
      auto& node = tree.nodes[static_cast<std::size_t>(nd)];
      node.feature = b.feature;
      node.threshold = b.threshold;
      node.left = left;
      node.right = left + 1;
      if (importances) (*importances)[static_cast<std::size_t>(b.feature)] += std::max(0.0, b.gain);
      split_nodes.push_back(nd);
    }
    if (split_nodes.empty()) break;

    for (std::size_t i = 0; i < n; ++i) {
      const int nd = node_of[i];
      if (nd < 0) continue;
      const auto& node = tree.nodes[static_cast<std::size_t>(nd)];
      if (node.feature < 0) continue;
      const int child = x.value(static_cast<std::size_t>(node.feature), i) <= node.threshold ? node.left : node.right;
      node_of[i] = child;
      stats[static_cast<std::size_t>(child)].add(weights[i], targets[i]);
    }
    for (int nd : split_nodes) {
      const auto& node = tree.nodes[static_cast<std::size_t>(nd)];
      for (int child : {node.left, node.right})
        if (can_split(stats[static_cast<std::size_t>(child)], depth + 1, params)) next.push_back(child);
    }
    frontier = std::move(next);
  }

  tree.value_width = 1;
  for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
    auto& node = tree.nodes[k];
    if (node.feature >= 0) continue;
    node.value_offset = tree.values.size();
    const auto& st = stats[k];
    tree.values.push_back(st.w > 0.0 ? st.s / st.w : 0.0);
  }
  return tree;
}

Tree fit_tree(const Matrix& x, std::span<const double> targets, std::span<const double> weights,
              const TreeParams& params, std::vector<double>* importances) {
  if (x.rows() == 0) throw std::invalid_argument("fit_tree: empty input");
  for (double v : x.data())
    if (!std::isfinite(v)) throw std::invalid_argument("fit_tree: non-finite feature value");
  SortedColumns cols(x);
  return fit_regression_tree(cols, targets, weights, params, importances);
}

namespace {

struct ClassBuilder {
  const Matrix& x;
  std::span<const int> y;
  std::size_t k;
  std::span<const double> w;
  const ClassificationTreeParams& params;
  Rng& rng;
  std::vector<double>* importances;
  Tree tree;
  std::vector<std::size_t> features;

  static double gini_sum(const std::vector<double>& cw, double total) {
    // total * gini impurity, i.e. total - sum(cw^2)/total
    if (total <= 0.0) return 0.0;
    double sq = 0.0;
    for (double c : cw) sq += c * c;
    return total - sq / total;
  }

  int build(std::vector<std::size_t>& idx, int depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    std::vector<double> cw(k, 0.0);
    double total = 0.0;
    for (std::size_t i : idx) {
      cw[static_cast<std::size_t>(y[i])] += w[i];
      total += w[i];
    }
    const double parent = gini_sum(cw, total);
    const int min_leaf = std::max(1, params.min_leaf);
    const bool splittable = (params.max_depth <= 0 || depth < params.max_depth) &&
                            idx.size() >= static_cast<std::size_t>(2 * min_leaf) && parent > 1e-12 * total;

    SplitCandidate best;
    if (splittable) {
      const std::size_t p = x.cols();
      const std::size_t m = params.max_features <= 0 ? p : std::min<std::size_t>(p, static_cast<std::size_t>(params.max_features));
      std::iota(features.begin(), features.end(), std::size_t{0});
      for (std::size_t j = 0; j < m && m < p; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, p - 1);
        std::swap(features[j], features[pick(rng)]);
      }
      std::vector<std::size_t> candidates(features.begin(), features.begin() + static_cast<std::ptrdiff_t>(m));
      std::sort(candidates.begin(), candidates.end());

      std::vector<std::size_t> order(idx);
      std::vector<double> left(k);
      for (std::size_t f : candidates) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
        std::fill(left.begin(), left.end(), 0.0);
        double wl = 0.0;
        for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
          const std::size_t i = order[pos];
          left[static_cast<std::size_t>(y[i])] += w[i];
          wl += w[i];
          const double v = x(i, f), next = x(order[pos + 1], f);
          const auto nl = pos + 1;
          if (!(next > v) || nl < static_cast<std::size_t>(min_leaf) || order.size() - nl < static_cast<std::size_t>(min_leaf))
            continue;
          std::vector<double> right(k);
          for (std::size_t c = 0; c < k; ++c) right[c] = cw[c] - left[c];
          const double gain = parent - gini_sum(left, wl) - gini_sum(right, total - wl);
          if (gain > best.gain) best = {gain, static_cast<int>(f), midpoint(v, next)};
        }
      }
    }

    if (best.feature < 0) {
      tree.nodes[static_cast<std::size_t>(node_id)].value_offset = tree.values.size();
      for (double c : cw) tree.values.push_back(total > 0.0 ? c / total : 1.0 / static_cast<double>(k));
      return node_id;
    }
    if (importances) (*importances)[static_cast<std::size_t>(best.feature)] += std::max(0.0, best.gain);
    std::vector<std::size_t> li, ri;
    for (std::size_t i : idx) (x(i, static_cast<std::size_t>(best.feature)) <= best.threshold ? li : ri).push_back(i);
    idx.clear();
    idx.shrink_to_fit();
    const int l = build(li, depth + 1);
    const int r = build(ri, depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(node_id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return node_id;
  }
};

}  // namespace

Tree fit_classification_tree(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                             std::span<const double> weights, const ClassificationTreeParams& params,
                             Rng& rng, std::vector<double>* importances) {
  if (x.rows() == 0) throw std::invalid_argument("fit_classification_tree: empty input");
  if (y.size() != x.rows() || weights.size() != x.rows())
    throw std::invalid_argument("fit_classification_tree: length mismatch");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("fit_classification_tree: negative weight");
    if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= n_classes)
      throw std::invalid_argument("fit_classification_tree: label out of range");
    if (weights[i] > 0.0) idx.push_back(i);
  }
  if (idx.empty()) throw std::invalid_argument("fit_classification_tree: all weights are zero");
  ClassBuilder b{x, y, n_classes, weights, params, rng, importances, {}, std::vector<std::size_t>(x.cols())};
  b.tree.value_width = n_classes;
  b.build(idx, 0);
  return std::move(b.tree);
}

}  // namespace latefuse
