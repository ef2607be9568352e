#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "jitgp/dataset.hpp"
#include "jitgp/error.hpp"

namespace jitgp {

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct LogisticModel {
  std::vector<double> coefficients;
  double intercept = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;

  double predict_proba(std::span<const double> x) const {
    double z = intercept;
    for (std::size_t j = 0; j < coefficients.size(); ++j) z += coefficients[j] * x[j];
    return sigmoid(z);
  }
};

struct LogisticParams {
  double C = 1.0;  // inverse regularization strength
  double tolerance = 1e-6;
  int max_iterations = 200;
};

namespace detail {

// log(1 + exp(z)) without overflow
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace detail

/// L2-regularized logistic regression by damped Newton iterations on
/// J(w, b) = mean log-loss + |w|^2 / (2 C n). The intercept is not penalized.
/// Stops when |grad J| <= tolerance.
inline LogisticModel fit_logistic(const Dataset& train, const LogisticParams& params) {
  if (!(params.C > 0.0)) fail(ErrorKind::config, "logistic regression C must be positive");
  const std::size_t n = train.rows(), m = train.cols();
  if (n == 0) fail(ErrorKind::data, "logistic regression needs training rows");
  const double inv_n = 1.0 / static_cast<double>(n);
  const double ridge = 1.0 / (params.C * static_cast<double>(n));

  Eigen::MatrixXd X(n, m + 1);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = train.row(i);
    for (std::size_t j = 0; j < m; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
    X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) = 1.0;
    y(static_cast<Eigen::Index>(i)) = train.label(i);
  }
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m + 1), ridge);
  penalty(static_cast<Eigen::Index>(m)) = 0.0;

  auto objective = [&](const Eigen::VectorXd& w) {
    const Eigen::VectorXd z = X * w;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) loss += detail::softplus(z(i)) - y(i) * z(i);
    return loss * inv_n + 0.5 * w.cwiseProduct(penalty).dot(w);
  };

  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m + 1));
  LogisticModel model;
  double f = objective(w);
  for (int it = 0; it < params.max_iterations; ++it) {
    const Eigen::VectorXd z = X * w;
    Eigen::VectorXd p(z.size()), s(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      p(i) = sigmoid(z(i));
      s(i) = p(i) * (1.0 - p(i));
    }
    const Eigen::VectorXd grad = X.transpose() * (p - y) * inv_n + penalty.cwiseProduct(w);
    model.gradient_norm = grad.norm();
    model.iterations = it;
    if (model.gradient_norm <= params.tolerance) break;

    Eigen::MatrixXd H = X.transpose() * s.asDiagonal() * X * inv_n;
    H.diagonal() += penalty;
    H.diagonal().array() += 1e-12;  // keeps the unpenalized intercept solvable on separable data
    const Eigen::VectorXd step = H.ldlt().solve(grad);

    double t = 1.0;
    const double slope = grad.dot(step);
    Eigen::VectorXd next = w - step;
    double fn = objective(next);
    while (fn > f - 1e-4 * t * slope && t > 1e-10) {
      t *= 0.5;
      next = w - t * step;
      fn = objective(next);
    }
    if (!(fn <= f)) break;
    w = next;
    f = fn;
  }
  model.coefficients.resize(m);
  for (std::size_t j = 0; j < m; ++j) model.coefficients[j] = w(static_cast<Eigen::Index>(j));
  model.intercept = w(static_cast<Eigen::Index>(m));
  return model;
}

}  // namespace jitgp
