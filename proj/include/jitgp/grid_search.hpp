#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "jitgp/dataset.hpp"
#include "jitgp/error.hpp"
#include "jitgp/metrics.hpp"
#include "jitgp/model.hpp"
#include "jitgp/parallel.hpp"
#include "jitgp/preprocess.hpp"
#include "jitgp/rng.hpp"

namespace jitgp {

struct GridSearchOptions {
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  /// SMOTE applied to each fold's training portion; disabled when empty.
  std::optional<std::size_t> smote_k = 5;
  std::size_t threads = 1;
};

struct GridPointScore {
  Hyperparameters hyperparameters;
  std::vector<double> fold_f1;
  double mean_f1 = 0.0;
};

struct GridSearchResult {
  ClassifierSpec best;
  std::vector<GridPointScore> scores;  // in grid order
};

namespace detail {

inline double hp_or(const Hyperparameters& h, const char* name, double fallback) {
  auto it = h.find(name);
  return it == h.end() ? fallback : it->second;
}

/// Ordering toward the simpler model: fewer trees, then smaller C, then
/// smaller learning rate.
inline auto simplicity_key(const Hyperparameters& h) {
  return std::make_tuple(hp_or(h, "n_estimators", 0.0), hp_or(h, "C", 0.0), hp_or(h, "learning_rate", 0.0));
}

}  // namespace detail

/// Picks the grid point with the best mean F1 (threshold 0.5) over
/// stratified k-fold cross validation. Ensemble points that differ only in
/// n_estimators share one fit per fold and are scored on tree prefixes,
/// which gives the same model a separate fit would.
inline GridSearchResult grid_search(ClassifierKind kind, const std::vector<Hyperparameters>& grid, const Dataset& train,
                                    const GridSearchOptions& options) {
  require_fit_rows(train, "grid search");
  if (grid.empty()) fail(ErrorKind::config, "empty hyperparameter grid");
  for (const auto& point : grid) {
    ClassifierSpec probe{kind, point, 0};
    (void)hyperparameter(probe, "", 0.0);  // validates names
  }

  GridSearchResult result;
  result.scores.resize(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    result.scores[g].hyperparameters = grid[g];
    result.scores[g].fold_f1.assign(options.folds, 0.0);
  }

  {
    const auto fold_of = stratified_folds(train.labels(), options.folds, derive_seed(options.seed, "folds"));

    // Group points by everything except n_estimators.
    const bool ensemble = kind != ClassifierKind::logistic_regression;
    std::map<Hyperparameters, std::vector<std::size_t>> groups;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      Hyperparameters base = grid[g];
      if (ensemble) base.erase("n_estimators");
      groups[base].push_back(g);
    }
    std::vector<std::pair<Hyperparameters, std::vector<std::size_t>>> jobs(groups.begin(), groups.end());

    const std::size_t tasks = jobs.size() * options.folds;
    parallel_for(tasks, options.threads, [&](std::size_t task) {
      const auto& [base, members] = jobs[task / options.folds];
      const std::size_t fold = task % options.folds;
      std::vector<std::size_t> fit_idx, hold_idx;
      for (std::size_t i = 0; i < train.rows(); ++i) (fold_of[i] == fold ? hold_idx : fit_idx).push_back(i);
      Dataset fit_rows = train.subset(fit_idx);
      const Dataset hold_rows = train.subset(hold_idx);
      if (options.smote_k)
        fit_rows = smote_oversample(fit_rows, {*options.smote_k, derive_seed(derive_seed(options.seed, "cv-smote"), fold)})
                       .data;

      ClassifierSpec spec{kind, base, derive_seed(options.seed, "model")};
      std::size_t most = 0;
      if (ensemble) {
        for (std::size_t g : members) most = std::max(most, tree_count(detail::hp_or(grid[g], "n_estimators", 100.0)));
        spec.hyperparameters["n_estimators"] = static_cast<double>(most);
      }
      const TrainedModel model = train_classifier(spec, fit_rows, 1);
      for (std::size_t g : members) {
        const std::size_t use = ensemble ? tree_count(detail::hp_or(grid[g], "n_estimators", 100.0)) : 0;
        const auto scores = predict_proba(model, hold_rows, use);
        result.scores[g].fold_f1[fold] =
            precision_recall_f1(confusion_at_threshold(scores, hold_rows.labels(), kDefaultThreshold)).f1;
      }
    });
  }

  for (auto& s : result.scores) {
    double sum = 0.0;
    for (double f : s.fold_f1) sum += f;
    s.mean_f1 = sum / static_cast<double>(s.fold_f1.size());
  }

  std::vector<std::size_t> order(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) order[g] = g;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detail::simplicity_key(grid[a]) < detail::simplicity_key(grid[b]);
  });
  std::size_t best = order.front();
  for (std::size_t g : order)
    if (result.scores[g].mean_f1 > result.scores[best].mean_f1) best = g;
  result.best = {kind, grid[best], derive_seed(options.seed, "model")};
  return result;
}

}  // namespace jitgp
