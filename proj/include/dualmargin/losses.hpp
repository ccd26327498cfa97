#pragma once

#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dualmargin {

enum class LossKind { exponential, logistic };

/// An exponentially-tailed loss together with the l_inf smoothness constant
/// rho of its potential psi. rho is 1 for the exponential loss and n for the
/// logistic loss; `bind` fills it in once n is known.
struct Loss {
  LossKind kind = LossKind::exponential;
  double rho = 1.0;

  static Loss exponential() { return {LossKind::exponential, 1.0}; }
  static Loss logistic(std::size_t n) { return {LossKind::logistic, static_cast<double>(n)}; }

  /// Default rho for `kind` on an n-example problem.
  static Loss bind(LossKind kind, std::size_t n) {
    return kind == LossKind::exponential ? exponential() : logistic(n);
  }
};

inline const char* to_string(LossKind k) { return k == LossKind::exponential ? "exp" : "logistic"; }

namespace detail {

// log(1 + e^z) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// log(softplus(z)); for very negative z, softplus(z) = e^z (1 - e^z/2 + ...).
inline double log_softplus(double z) {
  if (z < -30.0) return z + std::log1p(-0.5 * std::exp(z));
  return std::log(softplus(z));
}

// log sigmoid(z) = -softplus(-z)
inline double log_sigmoid(double z) { return -softplus(-z); }

inline double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// Inverse of the logistic loss, ln(e^y - 1), given log(y).
inline double logistic_inverse_from_log(double log_y) {
  if (log_y < -30.0) {
    // e^y - 1 = y (1 + y/2 + ...)
    const double y = std::exp(log_y);
    return log_y + std::log1p(0.5 * y);
  }
  const double y = std::exp(log_y);
  if (y > 30.0) return y + std::log1p(-std::exp(-y));
  return std::log(std::expm1(y));
}

}  // namespace detail

/// l(z) for a single argument.
inline double loss_value(double z, const Loss& loss) {
  return loss.kind == LossKind::exponential ? std::exp(z) : detail::softplus(z);
}

/// l'(z).
inline double loss_derivative(double z, const Loss& loss) {
  return loss.kind == LossKind::exponential ? std::exp(z) : std::exp(detail::log_sigmoid(z));
}

/// psi(xi) = l^{-1}(sum_i l(xi_i)); log-sum-exp for the exponential loss.
inline double psi(const Vector& xi, const Loss& loss) {
  if (loss.kind == LossKind::exponential) return detail::log_sum_exp(xi);
  Vector logs(xi.size());
  for (Eigen::Index i = 0; i < xi.size(); ++i) logs[i] = detail::log_softplus(xi[i]);
  return detail::logistic_inverse_from_log(detail::log_sum_exp(logs));
}

/// Gradient of psi: the softmax of xi for the exponential loss, and
/// l'(xi_i) / l'(psi(xi)) in general. Entries are strictly positive.
inline Vector grad_psi(const Vector& xi, const Loss& loss) {
  if (loss.kind == LossKind::exponential) {
    const double m = xi.maxCoeff();
    Vector q = (xi.array() - m).exp();
    return q / q.sum();
  }
  const double log_denominator = detail::log_sigmoid(psi(xi, loss));
  Vector g(xi.size());
  for (Eigen::Index i = 0; i < xi.size(); ++i) g[i] = std::exp(detail::log_sigmoid(xi[i]) - log_denominator);
  return g;
}

/// Empirical risk (1/n) sum_i l(<w, z_i>).
inline double risk(const Vector& w, const Dataset& ds, const Loss& loss) {
  const Vector p = ds.z() * w;
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) total += loss_value(p[i], loss);
  return total / static_cast<double>(ds.n());
}

inline Vector risk_gradient(const Vector& w, const Dataset& ds, const Loss& loss) {
  const Vector p = ds.z() * w;
  Vector coef(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) coef[i] = loss_derivative(p[i], loss);
  return ds.z().transpose() * coef / static_cast<double>(ds.n());
}

}  // namespace dualmargin
