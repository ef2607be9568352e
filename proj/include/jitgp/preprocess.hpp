#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "jitgp/dataset.hpp"
#include "jitgp/error.hpp"
#include "jitgp/rng.hpp"

namespace jitgp {

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified shuffle split. The training size is round(fraction * n) and
/// is shared out between classes by largest remainder, so each class keeps
/// its prevalence within one sample. Indices come back sorted.
inline SplitIndices stratified_split(const std::vector<int>& labels, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail(ErrorKind::config, "train fraction must be in (0, 1)");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) fail(ErrorKind::value, "split labels must be binary");
    by_class[labels[i]].push_back(i);
  }
  if (by_class[0].empty() || by_class[1].empty()) fail(ErrorKind::data, "stratified split needs both classes present");

  const auto total = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(labels.size())));
  std::size_t quota[2];
  double remainder[2];
  for (int c = 0; c < 2; ++c) {
    const double exact = train_fraction * static_cast<double>(by_class[c].size());
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - std::floor(exact);
  }
  std::size_t assigned = quota[0] + quota[1];
  // Larger remainder first; on a tie the minority class gets the extra row.
  const int minority = by_class[1].size() <= by_class[0].size() ? 1 : 0;
  int order[2] = {minority, 1 - minority};
  if (remainder[1 - minority] > remainder[minority]) std::swap(order[0], order[1]);
  for (int k = 0; assigned < total && k < 2; ++k) {
    if (quota[order[k]] < by_class[order[k]].size()) {
      ++quota[order[k]];
      ++assigned;
    }
  }

  SplitIndices out;
  for (int c = 0; c < 2; ++c) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    auto idx = by_class[c];
    rng.shuffle(idx);
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(quota[c]));
    out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(quota[c]), idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

/// Stratified k-fold assignment: fold id per row.
inline std::vector<std::size_t> stratified_folds(const std::vector<int>& labels, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) fail(ErrorKind::config, "cross validation needs at least 2 folds");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (int c = 0; c < 2; ++c)
    if (by_class[c].size() < folds)
      fail(ErrorKind::data, "class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                                " rows, fewer than the " + std::to_string(folds) + " folds requested; use fewer folds");
  std::vector<std::size_t> fold(labels.size());
  std::size_t offset = 0;
  for (int c = 0; c < 2; ++c) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    auto idx = by_class[c];
    rng.shuffle(idx);
    for (std::size_t k = 0; k < idx.size(); ++k) fold[idx[k]] = (offset + k) % folds;
    offset += idx.size();
  }
  return fold;
}

/// Per-column min and max of the fitted rows.
struct ScalerState {
  std::vector<double> min;
  std::vector<double> max;

  friend bool operator==(const ScalerState&, const ScalerState&) = default;
};

inline ScalerState minmax_fit(const Dataset& train) {
  require_fit_rows(train, "min-max scaler");
  ScalerState s;
  s.min.assign(train.cols(), std::numeric_limits<double>::infinity());
  s.max.assign(train.cols(), -std::numeric_limits<double>::infinity());
  if (train.rows() == 0) fail(ErrorKind::data, "cannot fit a scaler on zero rows");
  for (std::size_t i = 0; i < train.rows(); ++i) {
    const auto r = train.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      s.min[j] = std::min(s.min[j], r[j]);
      s.max[j] = std::max(s.max[j], r[j]);
    }
  }
  return s;
}

/// (x - min) / (max - min); constant columns map to 0. No clipping.
inline void minmax_apply_row(const ScalerState& s, std::span<double> row) {
  if (row.size() != s.min.size()) fail(ErrorKind::shape, "scaler width does not match row width");
  for (std::size_t j = 0; j < row.size(); ++j) {
    const double range = s.max[j] - s.min[j];
    row[j] = range > 0.0 ? (row[j] - s.min[j]) / range : 0.0;
  }
}

inline Dataset minmax_apply(const ScalerState& s, const Dataset& rows) {
  Dataset out = rows;
  for (std::size_t i = 0; i < out.rows(); ++i) minmax_apply_row(s, out.row(i));
  return out;
}

struct SmoteConfig {
  std::size_t k = 5;
  std::uint64_t seed = 0;
};

/// Where a synthetic row came from: x = seed + delta * (neighbor - seed).
struct SyntheticOrigin {
  std::size_t seed_row;
  std::size_t neighbor_row;
  double delta;
};

struct SmoteResult {
  Dataset data;  // original rows first, synthetic minority rows appended
  std::vector<SyntheticOrigin> origins;
};

/// Indices of the k nearest rows (Euclidean) among `pool`, excluding `self`.
/// Ties break toward the smaller row index.
inline std::vector<std::size_t> nearest_neighbors(const Dataset& d, std::size_t self,
                                                  const std::vector<std::size_t>& pool, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> cand;
  cand.reserve(pool.size());
  const auto x = d.row(self);
  for (std::size_t j : pool) {
    if (j == self) continue;
    const auto y = d.row(j);
    double dist = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) dist += (x[c] - y[c]) * (x[c] - y[c]);
    cand.emplace_back(dist, j);
  }
  const std::size_t take = std::min(k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end());
  std::vector<std::size_t> out(take);
  for (std::size_t i = 0; i < take; ++i) out[i] = cand[i].second;
  return out;
}

/// Regular SMOTE: appends synthetic minority rows until both classes have
/// the same count.
inline SmoteResult smote_oversample(const Dataset& train, const SmoteConfig& cfg) {
  require_fit_rows(train, "SMOTE");
  if (cfg.k < 1) fail(ErrorKind::config, "SMOTE k must be at least 1");
  const std::size_t pos = train.count(1), neg = train.count(0);
  SmoteResult result{train, {}};
  if (pos == neg) return result;
  const int minority = pos < neg ? 1 : 0;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < train.rows(); ++i)
    if (train.label(i) == minority) pool.push_back(i);
  if (pool.size() <= cfg.k)
    fail(ErrorKind::data, "SMOTE needs more than k=" + std::to_string(cfg.k) + " minority rows, found " +
                              std::to_string(pool.size()) + "; lower k or disable resampling");

  std::vector<std::vector<std::size_t>> neighbors(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) neighbors[i] = nearest_neighbors(train, pool[i], pool, cfg.k);

  Rng rng(cfg.seed);
  const std::size_t needed = (pos < neg ? neg - pos : pos - neg);
  std::vector<double> x(train.cols());
  for (std::size_t s = 0; s < needed; ++s) {
    const std::size_t i = static_cast<std::size_t>(rng.below(pool.size()));
    const std::size_t nn = neighbors[i][static_cast<std::size_t>(rng.below(neighbors[i].size()))];
    const double delta = rng.uniform_closed();
    const auto a = train.row(pool[i]);
    const auto b = train.row(nn);
    for (std::size_t c = 0; c < x.size(); ++c) x[c] = a[c] + delta * (b[c] - a[c]);
    result.data.add_row(x, minority);
    result.origins.push_back({pool[i], nn, delta});
  }
  return result;
}

}  // namespace jitgp
