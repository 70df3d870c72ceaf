#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "abcgan/error.hpp"
#include "abcgan/neuralcore/matrix.hpp"

namespace abcgan {

/// Array-backed binary regression tree. Leaves have feature == -1.
struct RegressionTree {
  struct Node {
    std::int32_t feature = -1;
    double threshold = 0.0;  // x[feature] <= threshold goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;

    [[nodiscard]] bool is_leaf() const { return feature < 0; }
    friend bool operator==(const Node&, const Node&) = default;
  };

  std::vector<Node> nodes;  // nodes[0] is the root
  std::size_t max_depth = 0;

  [[nodiscard]] double predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& node = nodes[i];
      if (static_cast<std::size_t>(node.feature) >= x.size()) {
        throw DimensionError("regression tree: split on feature " + std::to_string(node.feature) +
                             " but input has " + std::to_string(x.size()) + " features");
      }
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                               : node.right);
    }
    return nodes[i].value;
  }

  /// True when every node is reachable from the root exactly once and every
  /// internal node has two children.
  [[nodiscard]] bool structurally_valid() const {
    if (nodes.empty()) return false;
    std::vector<int> seen(nodes.size(), 0);
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      if (++seen[i] > 1) return false;
      const auto& node = nodes[i];
      if (!std::isfinite(node.value)) return false;
      if (node.is_leaf()) continue;
      for (std::int32_t child : {node.left, node.right}) {
        if (child <= 0 || static_cast<std::size_t>(child) >= nodes.size()) return false;
        stack.push_back(static_cast<std::size_t>(child));
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
  }

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

/// prediction = base + shrinkage * sum of tree outputs
struct TreeEnsemble {
  double base = 0.0;
  double shrinkage = 0.1;
  std::size_t feature_dim = 0;
  std::vector<RegressionTree> trees;

  friend bool operator==(const TreeEnsemble&, const TreeEnsemble&) = default;
};

struct GbtConfig {
  std::size_t n_trees = 200;
  std::size_t max_depth = 3;
  double shrinkage = 0.1;
  std::size_t min_leaf = 2;
};

namespace detail {

struct SplitChoice {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

// Best variance-reduction split of rows `idx` over all midpoints between
// consecutive distinct feature values, honoring min_leaf on both sides.
inline SplitChoice best_split(const Matrix& X, std::span<const double> target,
                              std::span<const std::size_t> idx, std::size_t min_leaf) {
  SplitChoice best;
  const std::size_t n = idx.size();
  double total = 0.0;
  for (std::size_t i : idx) total += target[i];
  const double parent_term = total * total / static_cast<double>(n);
  // Gains below this are rounding noise, e.g. on a constant target.
  double scale = 0.0;
  for (std::size_t i : idx) scale += target[i] * target[i];
  const double min_gain = 1e-12 * std::max(scale, 1e-300);

  std::vector<std::size_t> order(idx.begin(), idx.end());
  for (std::size_t f = 0; f < X.cols(); ++f) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return X(a, f) < X(b, f) || (X(a, f) == X(b, f) && a < b);
    });
    double left_sum = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      left_sum += target[order[k]];
      const double here = X(order[k], f);
      const double next = X(order[k + 1], f);
      if (!(here < next)) continue;
      const std::size_t nl = k + 1;
      const std::size_t nr = n - nl;
      if (nl < min_leaf || nr < min_leaf) continue;
      const double right_sum = total - left_sum;
      // SSE reduction = sum_l^2/n_l + sum_r^2/n_r - total^2/n
      const double gain = left_sum * left_sum / static_cast<double>(nl) +
                          right_sum * right_sum / static_cast<double>(nr) - parent_term;
      if (gain > min_gain && gain > best.gain) {
        best = SplitChoice{true, f, 0.5 * (here + next), gain};
      }
    }
  }
  return best;
}

inline std::int32_t grow(RegressionTree& tree, const Matrix& X, std::span<const double> target,
                         std::vector<std::size_t> idx, std::size_t depth, const GbtConfig& config) {
  const auto node_index = static_cast<std::int32_t>(tree.nodes.size());
  double mean = 0.0;
  for (std::size_t i : idx) mean += target[i];
  mean /= static_cast<double>(idx.size());
  tree.nodes.push_back(RegressionTree::Node{-1, 0.0, -1, -1, mean});

  if (depth >= config.max_depth || idx.size() < 2 * config.min_leaf) return node_index;
  const SplitChoice split = best_split(X, target, idx, config.min_leaf);
  if (!split.found) return node_index;

  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
  for (std::size_t i : idx) (X(i, split.feature) <= split.threshold ? left : right).push_back(i);
  idx.clear();
  idx.shrink_to_fit();

  const std::int32_t l = grow(tree, X, target, std::move(left), depth + 1, config);
  const std::int32_t r = grow(tree, X, target, std::move(right), depth + 1, config);
  auto& node = tree.nodes[static_cast<std::size_t>(node_index)];
  node.feature = static_cast<std::int32_t>(split.feature);
  node.threshold = split.threshold;
  node.left = l;
  node.right = r;
  return node_index;
}

}  // namespace detail

/// Fits one least-squares regression tree to `target`.
inline RegressionTree fit_tree(const Matrix& X, std::span<const double> target, const GbtConfig& config) {
  RegressionTree tree;
  tree.max_depth = config.max_depth;
  std::vector<std::size_t> idx(X.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  detail::grow(tree, X, target, std::move(idx), 0, config);
  return tree;
}

/// Least-squares gradient boosting: every tree fits the residuals left by
/// the ensemble built so far.
inline TreeEnsemble fit_gbt(const Matrix& X, std::span<const double> y, const GbtConfig& config = {}) {
  const std::size_t n = X.rows();
  if (y.size() != n) throw DimensionError("fit_gbt: row/target count mismatch");
  if (config.n_trees == 0) throw ModelError("fit_gbt: n_trees must be at least 1");
  if (config.min_leaf == 0) throw ModelError("fit_gbt: min_leaf must be at least 1");
  if (!(config.shrinkage > 0.0 && config.shrinkage <= 1.0)) throw ModelError("fit_gbt: shrinkage must lie in (0, 1]");
  if (n < 2 * config.min_leaf) {
    throw ModelError("fit_gbt: " + std::to_string(n) + " rows is fewer than 2*min_leaf=" +
                     std::to_string(2 * config.min_leaf));
  }

  TreeEnsemble ens;
  ens.shrinkage = config.shrinkage;
  ens.feature_dim = X.cols();
  ens.base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  Vector residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - ens.base;
  ens.trees.reserve(config.n_trees);
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    RegressionTree tree = fit_tree(X, residual, config);
    for (std::size_t i = 0; i < n; ++i) residual[i] -= config.shrinkage * tree.predict(X.row(i));
    ens.trees.push_back(std::move(tree));
  }
  return ens;
}

/// Prediction using only the first `n_trees` trees.
inline Vector predict_gbt(const TreeEnsemble& ens, const Matrix& X, std::size_t n_trees) {
  if (X.cols() != ens.feature_dim) {
    throw DimensionError("predict_gbt: model has " + std::to_string(ens.feature_dim) +
                         " features, input has " + std::to_string(X.cols()));
  }
  n_trees = std::min(n_trees, ens.trees.size());
  Vector out(X.rows(), ens.base);
  for (std::size_t r = 0; r < X.rows(); ++r) {
    double s = 0.0;
    for (std::size_t t = 0; t < n_trees; ++t) s += ens.trees[t].predict(X.row(r));
    out[r] += ens.shrinkage * s;
  }
  return out;
}

inline Vector predict_gbt(const TreeEnsemble& ens, const Matrix& X) {
  return predict_gbt(ens, X, ens.trees.size());
}

}  // namespace abcgan
