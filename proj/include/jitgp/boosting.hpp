#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "jitgp/dataset.hpp"
#include "jitgp/error.hpp"
#include "jitgp/logistic.hpp"
#include "jitgp/rng.hpp"
#include "jitgp/tree.hpp"

namespace jitgp {

struct BoostingParams {
  std::size_t n_estimators = 100;
  double learning_rate = 0.1;
  std::size_t max_depth = 6;
  std::uint64_t seed = 0;
};

/// Gradient-boosted regression trees on the logistic loss.
struct BoostedModel {
  double initial_log_odds = 0.0;
  double learning_rate = 0.1;
  std::vector<DecisionTree> trees;

  double decision(std::span<const double> x, std::size_t use_trees = 0) const {
    const std::size_t t = use_trees == 0 ? trees.size() : std::min(use_trees, trees.size());
    double f = initial_log_odds;
    for (std::size_t i = 0; i < t; ++i) f += learning_rate * trees[i].predict(x);
    return f;
  }

  double predict_proba(std::span<const double> x, std::size_t use_trees = 0) const {
    return sigmoid(decision(x, use_trees));
  }
};

/// Each round fits a depth-limited tree to the negative gradient y - p and
/// sets leaf values by one Newton step, sum(y - p) / sum(p (1 - p)).
inline BoostedModel fit_boosting(const Dataset& train, const BoostingParams& params) {
  const std::size_t n = train.rows();
  if (n == 0) fail(ErrorKind::data, "gradient boosting needs training rows");
  if (params.learning_rate < 0.0) fail(ErrorKind::config, "learning rate must be non-negative");
  const double pos = static_cast<double>(train.count(1));
  if (pos == 0.0 || pos == static_cast<double>(n)) fail(ErrorKind::data, "gradient boosting needs both classes");

  BoostedModel model;
  model.learning_rate = params.learning_rate;
  model.initial_log_odds = std::log(pos / (static_cast<double>(n) - pos));
  if (params.learning_rate == 0.0) return model;

  std::vector<double> score(n, model.initial_log_odds), prob(n), residual(n);
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  TreeParams tp;
  tp.criterion = SplitCriterion::squared_error;
  tp.max_depth = params.max_depth;
  Rng rng(params.seed);

  auto newton_leaf = [&](std::span<const std::size_t> slots) {
    double num = 0.0, den = 0.0;
    for (std::size_t s : slots) {
      num += residual[s];
      den += prob[s] * (1.0 - prob[s]);
    }
    return den < 1e-150 ? 0.0 : num / den;
  };

  model.trees.reserve(params.n_estimators);
  for (std::size_t round = 0; round < params.n_estimators; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      prob[i] = sigmoid(score[i]);
      residual[i] = train.label(i) - prob[i];
    }
    model.trees.push_back(grow_tree(train, rows, residual, tp, rng, newton_leaf));
    const auto& tree = model.trees.back();
    for (std::size_t i = 0; i < n; ++i) score[i] += params.learning_rate * tree.predict(train.row(i));
  }
  return model;
}

}  // namespace jitgp
