#pragma once

#include "dataset.hpp"
#include "losses.hpp"

#include <cmath>
#include <cstddef>
#include <functional>

namespace dualmargin {

/// Step-size, averaging and momentum sequences.
///
/// `theta(t)` and `lambda(t)` drive the dual engine; the primal momentum factor
/// is derived as beta_t = lambda_{t-1} (1 - lambda_t) / lambda_t with beta_0 = 0,
/// unless `beta_override` is set. The accelerated defaults theta_t = 1,
/// lambda_t = 2/(t+2) give beta_t = t/(t+1).
struct Schedule {
  std::function<double(std::size_t)> theta = [](std::size_t) { return 1.0; };
  std::function<double(std::size_t)> lambda = [](std::size_t t) { return 2.0 / (static_cast<double>(t) + 2.0); };
  std::function<double(std::size_t)> beta_override;
  double rho = 1.0;

  double beta(std::size_t t) const {
    if (beta_override) return beta_override(t);
    if (t == 0) return 0.0;
    const double lt = lambda(t);
    return lambda(t - 1) * (1.0 - lt) / lt;
  }

  static Schedule accelerated(double rho = 1.0) {
    Schedule s;
    s.rho = rho;
    return s;
  }

  /// lambda_t = 1: plain mirror descent / dual averaging in the dual,
  /// normalized gradient descent in the primal.
  static Schedule mirror_descent(double theta = 1.0, double rho = 1.0) {
    Schedule s;
    s.theta = [theta](std::size_t) { return theta; };
    s.lambda = [](std::size_t) { return 1.0; };
    s.rho = rho;
    return s;
  }

  static Schedule with_constant_theta(Schedule base, double theta) {
    base.theta = [theta](std::size_t) { return theta; };
    return base;
  }
};

/// Checks lambda_0 = 1 and 1/lambda_t^2 - 1/lambda_t <= 1/lambda_{t-1}^2 for t < horizon.
inline bool satisfies_lambda_condition(const Schedule& s, std::size_t horizon, double slack = 1e-12) {
  if (std::abs(s.lambda(0) - 1.0) > slack) return false;
  for (std::size_t t = 1; t < horizon; ++t) {
    const double l = s.lambda(t), prev = s.lambda(t - 1);
    if (!(l > 0.0 && l <= 1.0)) return false;
    if (1.0 / (l * l) - 1.0 / l > 1.0 / (prev * prev) * (1.0 + slack)) return false;
  }
  return true;
}

/// Three-sequence dual state. `log_q` is the unnormalized log-weight vector
/// p_t (equal to Z w_t for the matching primal iterate) and q = grad psi(p_t);
/// for the exponential loss this is the softmax, evaluated after subtracting
/// the running max so that ||p_t|| -> infinity is harmless.
struct DualState {
  Vector log_q;
  Vector q;
  Vector mu;
  Vector nu;
  std::size_t t = 0;

  static DualState initial(std::size_t n, const Loss& loss = Loss::exponential()) {
    DualState s;
    s.log_q = Vector::Zero(static_cast<Eigen::Index>(n));
    s.q = grad_psi(s.log_q, loss);
    s.mu = s.q;
    s.nu = s.q;
    return s;
  }
};

/// phi(q) = ||Z^T q||^2 / 2.
inline double phi(const Vector& q, const Dataset& ds) { return 0.5 * (ds.z().transpose() * q).squaredNorm(); }

/// Z Z^T v without forming the n x n matrix.
inline Vector zzt(const Dataset& ds, const Vector& v) {
  const Vector u = ds.z().transpose() * v;
  return ds.z() * u;
}

/// One accelerated mirror-descent step in dual-averaging form:
///   nu_t     = (1 - lambda_t) mu_t + lambda_t q_t
///   p_{t+1}  = p_t - theta_t / (rho lambda_t) * Z Z^T nu_t
///   q_{t+1}  = grad psi(p_{t+1})
///   mu_{t+1} = (1 - lambda_t) mu_t + lambda_t q_{t+1}
/// With the exponential loss the mirror map is the entropy on the simplex.
inline DualState amd_step(const DualState& state, const Dataset& ds, const Schedule& sched,
                          const Loss& loss = Loss::exponential()) {
  const double lambda = sched.lambda(state.t);
  const double theta = sched.theta(state.t);
  DualState next;
  next.nu = (1.0 - lambda) * state.mu + lambda * state.q;
  next.log_q = state.log_q - (theta / (sched.rho * lambda)) * zzt(ds, next.nu);
  next.q = grad_psi(next.log_q, loss);
  next.mu = (1.0 - lambda) * state.mu + lambda * next.q;
  next.t = state.t + 1;
  return next;
}

/// Entropy mirror descent on phi: p_{t+1} = p_t - theta Z Z^T q_t.
inline DualState md_step(const DualState& state, const Dataset& ds, double theta) {
  DualState next;
  next.nu = state.q;
  next.log_q = state.log_q - theta * zzt(ds, state.q);
  next.q = grad_psi(next.log_q, Loss::exponential());
  next.mu = next.q;
  next.t = state.t + 1;
  return next;
}

}  // namespace dualmargin
