#pragma once

#include "dataset.hpp"
#include "solvers.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace dualmargin::synthetic {

// Generators built on Rng only, so that a seed gives the same data on every
// platform.

inline double normal(Rng& rng) {
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline Vector unit_vector(std::size_t d, Rng& rng) {
  Vector v(static_cast<Eigen::Index>(d));
  do {
    for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = normal(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

/// Uniform in the unit ball.
inline Vector ball_point(std::size_t d, Rng& rng) {
  const double radius = std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
  return radius * unit_vector(d, rng);
}

/// Points in the unit ball labeled by a random hyperplane through the origin,
/// keeping only points at distance >= `gap` from it, so the maximum margin is
/// at least `gap`.
inline std::vector<LabeledInput> planted_separable(std::size_t n, std::size_t d, double gap, std::uint64_t seed) {
  Rng rng(seed);
  const Vector u = unit_vector(d, rng);
  std::vector<LabeledInput> out;
  out.reserve(n);
  while (out.size() < n) {
    Vector x = ball_point(d, rng);
    const double side = u.dot(x);
    if (std::abs(side) < gap) continue;
    out.push_back({std::move(x), side > 0.0 ? 1 : -1});
  }
  return out;
}

/// Points in the unit ball with fair random labels; nonseparable with high
/// probability once n is large relative to d.
inline std::vector<LabeledInput> random_labels(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LabeledInput> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector x = ball_point(d, rng);
    out.push_back({std::move(x), rng.uniform() < 0.5 ? 1 : -1});
  }
  return out;
}

}  // namespace dualmargin::synthetic
