#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "jitgp/csv.hpp"
#include "jitgp/error.hpp"

namespace jitgp {

struct ConfusionCounts {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::int64_t total() const noexcept { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Predicted positive iff score >= threshold.
inline ConfusionCounts confusion_at_threshold(const std::vector<double>& scores, const std::vector<int>& labels,
                                              double threshold) {
  if (scores.size() != labels.size())
    fail(ErrorKind::shape, "scores (" + std::to_string(scores.size()) + ") and labels (" +
                               std::to_string(labels.size()) + ") differ in length");
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] != 0 && labels[i] != 1) fail(ErrorKind::value, "labels must be binary");
    if (predicted) (labels[i] ? c.tp : c.fp)++;
    else (labels[i] ? c.fn : c.tn)++;
  }
  return c;
}

struct PrecisionRecallF1 {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

/// Zero denominators give 0.
inline PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& c) {
  PrecisionRecallF1 out;
  if (c.tp + c.fp > 0) out.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) out.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (out.precision + out.recall > 0.0)
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

/// Matthews correlation; 0 when any marginal is empty.
inline double mcc(const ConfusionCounts& c) {
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn),
               tn = static_cast<double>(c.tn);
  const double a = tp + fp, b = tp + fn, d = tn + fp, e = tn + fn;
  if (a == 0.0 || b == 0.0 || d == 0.0 || e == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(a * b * d * e);
}

struct PrPoint {
  double threshold;
  double precision;
  double recall;
};

/// Points in ascending threshold order: one per distinct score, then a
/// final point just above the maximum score with recall 0 and precision 1.
using PrCurve = std::vector<PrPoint>;

inline PrCurve pr_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) fail(ErrorKind::shape, "scores and labels differ in length");
  const auto positives = static_cast<std::int64_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0) fail(ErrorKind::value, "PR curve is undefined without positive labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // Sweep descending; emit a point after each block of tied scores.
  PrCurve desc;
  std::int64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] == 1 ? tp : fp)++;
      ++i;
    }
    desc.push_back({s, static_cast<double>(tp) / static_cast<double>(tp + fp),
                    static_cast<double>(tp) / static_cast<double>(positives)});
  }
  PrCurve curve(desc.rbegin(), desc.rend());
  const double top = curve.back().threshold;
  curve.push_back({std::nextafter(top, std::numeric_limits<double>::infinity()), 1.0, 0.0});
  return curve;
}

/// Step-wise average precision: sum of (R_i - R_{i-1}) * P_i over
/// descending thresholds.
inline double auc_pr(const PrCurve& curve) {
  double area = 0.0, prev_recall = 0.0;
  for (auto it = curve.rbegin(); it != curve.rend(); ++it) {
    area += (it->recall - prev_recall) * it->precision;
    prev_recall = it->recall;
  }
  return area;
}

struct ThresholdChoice {
  double threshold = 0.5;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

/// Curve point with maximal F1; ties go to the higher threshold.
inline ThresholdChoice best_f1_threshold(const PrCurve& curve) {
  if (curve.empty()) fail(ErrorKind::value, "empty PR curve");
  ThresholdChoice best;
  best.f1 = -1.0;
  for (const auto& p : curve) {
    const double f1 = p.precision + p.recall > 0.0 ? 2.0 * p.precision * p.recall / (p.precision + p.recall) : 0.0;
    if (f1 > best.f1 || (f1 == best.f1 && p.threshold > best.threshold))
      best = {p.threshold, p.precision, p.recall, f1};
  }
  return best;
}

inline std::string write_pr_curve_csv(const PrCurve& curve) {
  std::string out = "threshold,precision,recall\n";
  for (const auto& p : curve)
    csv::append_row(out, {csv::format_double(p.threshold), csv::format_double(p.precision), csv::format_double(p.recall)});
  return out;
}

struct RankSummary {
  double mean = 0.0;
  double average_rank = 0.0;
};

using RepoMetrics = std::map<std::string, std::map<std::string, double>>;

/// Per repo, rank 1 goes to the highest value and ties share the mean of
/// their positions; returns per-method mean value and mean rank.
inline std::map<std::string, RankSummary> aggregate_ranks(const RepoMetrics& per_repo) {
  std::set<std::string> methods;
  for (const auto& [repo, scores] : per_repo)
    for (const auto& [method, v] : scores) methods.insert(method);

  std::map<std::string, RankSummary> out;
  for (const auto& m : methods) out[m] = {};
  if (per_repo.empty()) return out;
  for (const auto& [repo, scores] : per_repo) {
    std::vector<std::pair<double, std::string>> row;
    for (const auto& m : methods) {
      auto it = scores.find(m);
      if (it == scores.end()) fail(ErrorKind::data, "repo '" + repo + "' has no value for method '" + m + "'");
      row.emplace_back(it->second, m);
    }
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; i < row.size();) {
      std::size_t j = i;
      while (j < row.size() && row[j].first == row[i].first) ++j;
      const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
      for (std::size_t k = i; k < j; ++k) {
        out[row[k].second].average_rank += rank;
        out[row[k].second].mean += row[k].first;
      }
      i = j;
    }
  }
  const double repos = static_cast<double>(per_repo.size());
  for (auto& [m, s] : out) {
    s.mean /= repos;
    s.average_rank /= repos;
  }
  return out;
}

/// Headline metrics for one classifier on one test partition.
struct EvaluationReport {
  double precision = 0.0, recall = 0.0, f1 = 0.0;  // at the PR-optimal threshold
  double mcc = 0.0;                                // at threshold 0.5
  double auc_pr = 0.0;
  double chosen_threshold = 0.5;
  ConfusionCounts at_default;  // counts at 0.5
  std::size_t samples = 0;
};

inline constexpr double kDefaultThreshold = 0.5;

inline EvaluationReport evaluate_scores(const std::vector<double>& scores, const std::vector<int>& labels) {
  EvaluationReport r;
  const auto curve = pr_curve(scores, labels);
  const auto best = best_f1_threshold(curve);
  r.precision = best.precision;
  r.recall = best.recall;
  r.f1 = best.f1;
  r.chosen_threshold = best.threshold;
  r.auc_pr = auc_pr(curve);
  r.at_default = confusion_at_threshold(scores, labels, kDefaultThreshold);
  r.mcc = mcc(r.at_default);
  r.samples = scores.size();
  return r;
}

}  // namespace jitgp
