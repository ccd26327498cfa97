#pragma once

#include <dualmargin/dualmargin.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace dualmargin::testing {

inline Dataset rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix z(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) z(i, j++) = v;
    ++i;
  }
  return Dataset::from_rows(z);
}

inline Dataset one_point() { return rows({{-1.0, 0.0}}); }
inline Dataset orthogonal_pair() { return rows({{-1.0, 0.0}, {0.0, -1.0}}); }
inline Dataset opposite_pair() { return rows({{-1.0, 0.0}, {1.0, 0.0}}); }

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

/// A separable dataset with n rows in dimension d and a planted margin of at
/// least `gap` (seed-fixed).
inline Dataset separable(std::size_t n, std::size_t d, std::uint64_t seed, double gap = 0.1) {
  return build_dataset(synthetic::planted_separable(n, d, gap, seed), false);
}

/// Random-label data filtered to be nonseparable by the oracle.
inline Dataset nonseparable(std::size_t n, std::size_t d, std::uint64_t seed) {
  for (std::uint64_t s = seed;; ++s) {
    Dataset ds = build_dataset(synthetic::random_labels(n, d, s), false);
    if (!max_margin_oracle(ds, 1e-7).u_bar) return ds;
  }
}

inline double max_abs_diff(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

inline double rel_diff(const Vector& a, const Vector& b) {
  const double scale = std::max({1.0, a.norm(), b.norm()});
  return (a - b).norm() / scale;
}

/// Central finite differences of a scalar function.
inline Vector finite_difference(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// Brute-force maximum margin of a 2-D problem: scan unit directions.
inline double grid_max_margin_2d(const Dataset& ds, std::size_t steps) {
  double best = -1.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double a = 2.0 * 3.14159265358979323846 * static_cast<double>(k) / static_cast<double>(steps);
    best = std::max(best, margin(vec({std::cos(a), std::sin(a)}), ds));
  }
  return best;
}

}  // namespace dualmargin::testing
