#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "jitgp/dataset.hpp"
#include "jitgp/rng.hpp"

namespace jitgp {

/// Binary decision tree; internal nodes send x[feature] <= threshold left.
struct DecisionTree {
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
  };

  std::vector<Node> nodes;

  double predict(std::span<const double> x) const {
    std::int32_t i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
  }

  std::size_t depth() const {
    std::size_t best = 0;
    std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [i, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      const auto& n = nodes[static_cast<std::size_t>(i)];
      if (n.feature >= 0) {
        stack.push_back({n.left, d + 1});
        stack.push_back({n.right, d + 1});
      }
    }
    return best;
  }
};

enum class SplitCriterion { gini, squared_error };

struct TreeParams {
  SplitCriterion criterion = SplitCriterion::gini;
  std::size_t max_depth = std::numeric_limits<std::size_t>::max();
  /// Features examined per split; 0 means all of them.
  std::size_t max_features = 0;
};

/// Leaf value for the squared-error tree, given the slots that reach it.
using LeafValueFn = std::function<double(std::span<const std::size_t>)>;

/// CART growth over presorted feature orders. `rows[s]` is the dataset row
/// occupying slot s (bootstrap samples repeat rows); `target[s]` is the slot's
/// label (gini) or residual (squared error).
inline DecisionTree grow_tree(const Dataset& data, const std::vector<std::size_t>& rows,
                              const std::vector<double>& target, const TreeParams& params, Rng& rng,
                              const LeafValueFn& leaf_value = {}) {
  const std::size_t m = data.cols();
  const std::size_t slots = rows.size();
  DecisionTree tree;
  if (slots == 0) {
    tree.nodes.push_back({});
    return tree;
  }

  std::vector<std::vector<std::size_t>> order(m, std::vector<std::size_t>(slots));
  for (std::size_t f = 0; f < m; ++f) {
    auto& o = order[f];
    std::iota(o.begin(), o.end(), std::size_t{0});
    std::stable_sort(o.begin(), o.end(),
                     [&](std::size_t a, std::size_t b) { return data.at(rows[a], f) < data.at(rows[b], f); });
  }

  auto value = [&](std::size_t s, std::size_t f) { return data.at(rows[s], f); };
  std::vector<char> goes_left(slots, 0);
  std::vector<std::size_t> scratch(slots);
  std::vector<std::size_t> features(m);
  std::iota(features.begin(), features.end(), std::size_t{0});
  const std::size_t max_features = params.max_features == 0 ? m : std::min(params.max_features, m);
  const bool gini = params.criterion == SplitCriterion::gini;

  struct Task {
    std::int32_t node;
    std::size_t begin, end, depth;
  };
  tree.nodes.push_back({});
  std::vector<Task> stack{{0, 0, slots, 0}};

  while (!stack.empty()) {
    const Task t = stack.back();
    stack.pop_back();
    const std::size_t n = t.end - t.begin;
    const std::span<const std::size_t> members(order[0].data() + t.begin, n);

    double sum = 0.0;
    for (std::size_t s : members) sum += target[s];
    auto make_leaf = [&] {
      auto& node = tree.nodes[static_cast<std::size_t>(t.node)];
      node.feature = -1;
      node.value = gini ? sum / static_cast<double>(n) : (leaf_value ? leaf_value(members) : sum / static_cast<double>(n));
    };

    const bool pure = gini && (sum == 0.0 || sum == static_cast<double>(n));
    if (n < 2 || t.depth >= params.max_depth || pure || m == 0) {
      make_leaf();
      continue;
    }

    // Proxy score to maximize: gini uses sum over children of
    // (pos^2 + neg^2) / n_child; squared error uses sum_child^2 / n_child.
    const double parent_score = gini ? (sum * sum + (n - sum) * (n - sum)) / static_cast<double>(n)
                                     : sum * sum / static_cast<double>(n);
    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t best_feature = m, best_pos = 0;
    double best_threshold = 0.0;

    if (max_features < m) {
      for (std::size_t i = 0; i + 1 < m; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(m - i));
        std::swap(features[i], features[j]);
      }
    }
    std::size_t examined = 0;
    for (std::size_t fi = 0; fi < m && examined < max_features; ++fi) {
      const std::size_t f = features[fi];
      const auto& o = order[f];
      if (value(o[t.begin], f) == value(o[t.end - 1], f)) continue;  // constant here
      ++examined;
      double left_sum = 0.0;
      for (std::size_t i = t.begin; i + 1 < t.end; ++i) {
        left_sum += target[o[i]];
        const double a = value(o[i], f), b = value(o[i + 1], f);
        if (a == b) continue;
        const double nl = static_cast<double>(i + 1 - t.begin);
        const double nr = static_cast<double>(n) - nl;
        const double right_sum = sum - left_sum;
        const double score =
            gini ? (left_sum * left_sum + (nl - left_sum) * (nl - left_sum)) / nl +
                       (right_sum * right_sum + (nr - right_sum) * (nr - right_sum)) / nr
                 : left_sum * left_sum / nl + right_sum * right_sum / nr;
        if (score > best_score) {
          best_score = score;
          best_feature = f;
          best_pos = i + 1;
          double mid = a + (b - a) / 2.0;
          if (!(mid < b)) mid = a;
          best_threshold = mid;
        }
      }
    }
    // Gini accepts zero-gain splits of impure nodes (needed for XOR-like data);
    // regression requires a strict improvement.
    const bool accept = best_feature < m && (gini || best_score > parent_score * (1.0 + 1e-12) + 1e-300);
    if (!accept) {
      make_leaf();
      continue;
    }

    const auto& bo = order[best_feature];
    for (std::size_t i = t.begin; i < t.end; ++i) goes_left[bo[i]] = i < best_pos ? 1 : 0;
    for (std::size_t f = 0; f < m; ++f) {
      if (f == best_feature) continue;
      auto& o = order[f];
      std::size_t l = t.begin, r = 0;
      for (std::size_t i = t.begin; i < t.end; ++i) {
        if (goes_left[o[i]]) o[l++] = o[i];
        else scratch[r++] = o[i];
      }
      std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(r), o.begin() + static_cast<std::ptrdiff_t>(l));
    }

    const auto left = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back({});
    const auto right = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back({});
    auto& node = tree.nodes[static_cast<std::size_t>(t.node)];
    node.feature = static_cast<std::int32_t>(best_feature);
    node.threshold = best_threshold;
    node.left = left;
    node.right = right;
    stack.push_back({right, best_pos, t.end, t.depth + 1});
    stack.push_back({left, t.begin, best_pos, t.depth + 1});
  }
  return tree;
}

}  // namespace jitgp
