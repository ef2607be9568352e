#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "jitgp/error.hpp"

namespace jitgp {

/// Where a set of rows came from. Fitting anything on test rows is refused.
enum class Partition { unsplit, train, test, mixed };

/// Dense row-major design matrix with binary labels.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::size_t cols, Partition role = Partition::unsplit) : cols_(cols), role_(role) {}

  Dataset(std::size_t cols, std::vector<double> values, std::vector<int> labels, Partition role = Partition::unsplit)
      : cols_(cols), values_(std::move(values)), labels_(std::move(labels)), role_(role) {
    if (cols_ == 0 ? !values_.empty() : values_.size() != labels_.size() * cols_)
      fail(ErrorKind::shape, "dataset values do not match rows x cols");
    for (int y : labels_)
      if (y != 0 && y != 1) fail(ErrorKind::value, "dataset label outside {0,1}");
  }

  std::size_t rows() const noexcept { return labels_.size(); }
  std::size_t cols() const noexcept { return cols_; }
  Partition role() const noexcept { return role_; }
  void set_role(Partition role) noexcept { role_ = role; }

  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }
  double at(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<double>& values() const noexcept { return values_; }

  void add_row(std::span<const double> x, int y) {
    if (x.size() != cols_) fail(ErrorKind::shape, "row width " + std::to_string(x.size()) + " != " + std::to_string(cols_));
    values_.insert(values_.end(), x.begin(), x.end());
    labels_.push_back(y);
  }

  std::size_t count(int y) const { return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), y)); }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out(cols_, role_);
    out.values_.reserve(indices.size() * cols_);
    out.labels_.reserve(indices.size());
    for (std::size_t i : indices) out.add_row(row(i), label(i));
    return out;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t cols_ = 0;
  std::vector<double> values_;
  std::vector<int> labels_;
  Partition role_ = Partition::unsplit;
};

/// Row concatenation. Joining different partitions yields Partition::mixed.
inline Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.cols() != b.cols()) fail(ErrorKind::shape, "cannot concatenate datasets of different widths");
  Dataset out(a.cols(), a.role() == b.role() ? a.role() : Partition::mixed);
  for (std::size_t i = 0; i < a.rows(); ++i) out.add_row(a.row(i), a.label(i));
  for (std::size_t i = 0; i < b.rows(); ++i) out.add_row(b.row(i), b.label(i));
  return out;
}

inline void require_fit_rows(const Dataset& d, const char* what) {
  if (d.role() == Partition::test || d.role() == Partition::mixed)
    fail(ErrorKind::consistency, std::string(what) + " must be fitted on training rows only");
}

/// Holds the held-out rows and counts how often they are handed out, so a
/// run can prove it evaluated on them exactly once.
class TestPartition {
 public:
  TestPartition() = default;
  explicit TestPartition(Dataset rows) : rows_(std::move(rows)) { rows_.set_role(Partition::test); }

  const Dataset& read() const {
    ++reads_;
    return rows_;
  }
  std::size_t reads() const noexcept { return reads_; }
  /// Inspection without counting, for byte-comparison in tests.
  const Dataset& peek() const noexcept { return rows_; }

 private:
  Dataset rows_;
  mutable std::size_t reads_ = 0;
};

}  // namespace jitgp
