#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "jitgp/dataset.hpp"
#include "jitgp/error.hpp"
#include "jitgp/parallel.hpp"
#include "jitgp/rng.hpp"
#include "jitgp/tree.hpp"

namespace jitgp {

struct ForestParams {
  std::size_t n_estimators = 100;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Bagged, fully grown Gini trees with sqrt(m) candidate features per split.
/// Tree t depends only on (seed, t), so a forest of n trees is the prefix of
/// any larger forest grown with the same seed.
struct ForestModel {
  std::vector<DecisionTree> trees;

  /// Mean over trees of the positive fraction in the reached leaf.
  double predict_proba(std::span<const double> x, std::size_t use_trees = 0) const {
    const std::size_t t = use_trees == 0 ? trees.size() : std::min(use_trees, trees.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < t; ++i) sum += trees[i].predict(x);
    return t ? sum / static_cast<double>(t) : 0.0;
  }
};

inline std::size_t sqrt_features(std::size_t m) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(m))));
}

inline DecisionTree grow_forest_tree(const Dataset& train, std::uint64_t seed, std::size_t index) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(index)));
  const std::size_t n = train.rows();
  std::vector<std::size_t> rows(n);
  std::vector<double> target(n);
  for (std::size_t s = 0; s < n; ++s) {
    rows[s] = static_cast<std::size_t>(rng.below(n));
    target[s] = train.label(rows[s]);
  }
  TreeParams params;
  params.criterion = SplitCriterion::gini;
  params.max_features = sqrt_features(train.cols());
  return grow_tree(train, rows, target, params, rng);
}

inline ForestModel fit_forest(const Dataset& train, const ForestParams& params) {
  if (params.n_estimators == 0) fail(ErrorKind::config, "random forest needs at least one tree");
  if (train.rows() == 0) fail(ErrorKind::data, "random forest needs training rows");
  ForestModel model;
  model.trees.resize(params.n_estimators);
  parallel_for(params.n_estimators, params.threads,
               [&](std::size_t t) { model.trees[t] = grow_forest_tree(train, params.seed, t); });
  return model;
}

}  // namespace jitgp
