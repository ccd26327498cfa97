#pragma once

#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace dualmargin {

/// Bracket [lower, upper] around the squared maximum margin.
struct CertificateInterval {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t t = 0;

  bool certifies_separable() const { return lower > 0.0; }
  bool contains(double value, double tol = 0.0) const { return value >= lower - tol && value <= upper + tol; }
};

/// Interval from the momentum vector of the batch momentum method:
///   4||g_t||^2/t^2 - 8 ln n/(t+1)^2 <= gamma^2 <= 4||g_t||^2/t^2,
/// lower bound clamped at 0. Requires t >= 1 and the default schedules.
inline CertificateInterval certificate_from_norm2(double g_norm2, std::size_t t, std::size_t n) {
  if (t == 0) throw std::invalid_argument("certificate requires t >= 1");
  if (n == 0) throw std::invalid_argument("certificate requires n >= 1");
  const double tt = static_cast<double>(t);
  const double upper = 4.0 * g_norm2 / (tt * tt);
  const double width = 8.0 * std::log(static_cast<double>(n)) / ((tt + 1.0) * (tt + 1.0));
  return {std::max(0.0, upper - width), upper, t};
}

inline CertificateInterval certificate(const Vector& g, std::size_t t, std::size_t n) {
  return certificate_from_norm2(g.squaredNorm(), t, n);
}

struct OracleResult {
  double gamma = 0.0;             // ||Z^T q_bar||, an upper bound on the maximum margin
  std::optional<Vector> u_bar;  // present iff gamma > tol and -Z^T q_bar separates
  Vector q_bar;
  double lower = 0.0;  // margin of -Z^T q_bar, a lower bound on gamma
  double gap = 0.0;    // final Frank-Wolfe duality gap on ||Z^T q||^2/2
  std::size_t iterations = 0;
};

namespace detail {

inline std::string format_gap(double gap) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", gap);
  return buf;
}

}  // namespace detail

class OracleError : public std::runtime_error {
 public:
  OracleError(double gap, std::size_t iterations)
      : std::runtime_error("max-margin oracle did not converge in " + std::to_string(iterations) +
                           " iterations (gap " + detail::format_gap(gap) + ")"),
        gap_(gap) {}
  double gap() const { return gap_; }

 private:
  double gap_;
};

/// Maximum margin via the dual min-norm problem min_{q in simplex} ||Z^T q||,
/// solved with away-step Frank-Wolfe and exact line search. Stops once the
/// Frank-Wolfe gap of ||Z^T q||^2/2 is at most tol^2.
inline OracleResult max_margin_oracle(const Dataset& ds, double tol = 1e-6, std::size_t max_iterations = 2'000'000) {
  if (!(tol > 0.0)) throw std::invalid_argument("oracle tolerance must be positive");
  const auto& z = ds.z();
  const Eigen::Index n = z.rows();
  Vector q = Vector::Constant(n, 1.0 / static_cast<double>(n));
  Vector v = z.transpose() * q;
  const double target = tol * tol;

  OracleResult result;
  double gap = 0.0;
  std::size_t it = 0;
  for (;; ++it) {
    if (it % 256 == 0) v = z.transpose() * q;
    const Vector grad = z * v;
    const double inner = grad.dot(q);
    Eigen::Index s = 0;
    const double grad_min = grad.minCoeff(&s);
    gap = inner - grad_min;
    if (gap <= target) break;
    if (it >= max_iterations) throw OracleError(gap, it);

    Eigen::Index a = -1;
    double grad_away = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (q[i] > 0.0 && grad[i] > grad_away) {
        grad_away = grad[i];
        a = i;
      }
    }
    const double away_gap = grad_away - inner;

    if (gap >= away_gap || q[a] >= 1.0) {
      // toward vertex s
      const Vector dir = z.row(s).transpose() - v;
      const double dd = dir.squaredNorm();
      const double step = dd > 0.0 ? std::clamp(-v.dot(dir) / dd, 0.0, 1.0) : 0.0;
      q *= (1.0 - step);
      q[s] += step;
      v += step * dir;
    } else {
      // away from vertex a
      const double max_step = q[a] / (1.0 - q[a]);
      const Vector dir = v - z.row(a).transpose();
      const double dd = dir.squaredNorm();
      const double step = dd > 0.0 ? std::clamp(-v.dot(dir) / dd, 0.0, max_step) : 0.0;
      q *= (1.0 + step);
      q[a] -= step;
      if (step == max_step) q[a] = 0.0;
      v += step * dir;
    }
  }

  v = z.transpose() * q;
  result.gamma = v.norm();
  result.q_bar = q;
  result.gap = gap;
  result.iterations = it;
  // The primal side certifies separability: -v attains margin min_i <v, z_i>/||v||.
  if (result.gamma > 0.0) result.lower = std::max(0.0, (z * v).minCoeff() / result.gamma);
  if (result.gamma > tol && result.lower > 0.0) result.u_bar = -v / result.gamma;
  return result;
}

}  // namespace dualmargin
