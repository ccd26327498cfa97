#pragma once

#include "certification.hpp"
#include "dataset.hpp"
#include "dual_geometry.hpp"
#include "losses.hpp"
#include "solvers.hpp"
#include "trace.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace dualmargin {

struct Kernel {
  enum class Kind { linear, rbf };
  Kind kind = Kind::linear;
  double bandwidth = 1.0;

  static Kernel linear() { return {}; }
  static Kernel rbf(double bandwidth) {
    if (!(bandwidth > 0.0)) throw ConfigError("rbf bandwidth must be positive");
    return {Kind::rbf, bandwidth};
  }

  template <typename A, typename B>
  double operator()(const A& a, const B& b) const {
    if (kind == Kind::linear) return a.dot(b);
    return std::exp(-(a - b).squaredNorm() / (2.0 * bandwidth * bandwidth));
  }
};

/// Row access to the n x n Gram matrix of the signed examples, with a counter
/// of kernel evaluations performed on behalf of a solver. `value` is an
/// uncounted read used for diagnostics.
///
/// Built from a Dataset the entries are k(z_i, z_j). Built from labeled
/// inputs they are y_i y_j k(x_i, x_j), the usual kernel-SVM setting; both
/// agree for the linear kernel.
class KernelOracle {
 public:
  KernelOracle(const Dataset& ds, Kernel kernel) : points_(ds.z()), signs_(Vector::Ones(ds.z().rows())), kernel_(kernel) {}

  KernelOracle(std::span<const LabeledInput> inputs, Kernel kernel) : kernel_(kernel) {
    if (inputs.empty()) throw DataError("empty input");
    const auto d = inputs.front().x.size();
    points_.resize(static_cast<Eigen::Index>(inputs.size()), d);
    signs_.resize(static_cast<Eigen::Index>(inputs.size()));
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (inputs[i].x.size() != d) throw DataError("dimension mismatch in kernel inputs");
      points_.row(static_cast<Eigen::Index>(i)) = inputs[i].x.transpose();
      signs_[static_cast<Eigen::Index>(i)] = static_cast<double>(inputs[i].y);
    }
  }

  std::size_t n() const { return static_cast<std::size_t>(points_.rows()); }

  double value(std::size_t i, std::size_t j) const {
    const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
    return signs_[ii] * signs_[jj] * kernel_(points_.row(ii), points_.row(jj));
  }

  /// Row i of the Gram matrix; costs n evaluations.
  Vector row(std::size_t i) {
    Vector r(points_.rows());
    for (Eigen::Index j = 0; j < points_.rows(); ++j) r[j] = value(i, static_cast<std::size_t>(j));
    evaluations_ += n();
    return r;
  }

  /// Full Gram matrix; costs n^2 evaluations.
  Matrix full() {
    Matrix g(points_.rows(), points_.rows());
    for (std::size_t i = 0; i < n(); ++i) g.row(static_cast<Eigen::Index>(i)) = row(i).transpose();
    return g;
  }

  /// G v; costs n^2 evaluations.
  Vector multiply(const Vector& v) {
    Vector out(points_.rows());
    for (std::size_t i = 0; i < n(); ++i) out[static_cast<Eigen::Index>(i)] = row(i).dot(v);
    return out;
  }

  /// Uncounted G v for diagnostics.
  Vector multiply_uncounted(const Vector& v) const {
    Vector out(points_.rows());
    for (std::size_t i = 0; i < n(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n(); ++j) acc += value(i, j) * v[static_cast<Eigen::Index>(j)];
      out[static_cast<Eigen::Index>(i)] = acc;
    }
    return out;
  }

  std::uint64_t evaluations() const { return evaluations_; }

 private:
  Matrix points_;
  Vector signs_;
  Kernel kernel_;
  std::uint64_t evaluations_ = 0;
};

/// G[i][j] = k(z_i, z_j).
inline Matrix gram(const Dataset& ds, Kernel kernel) {
  KernelOracle oracle(ds, kernel);
  return oracle.full();
}

/// G[i][j] = y_i y_j k(x_i, x_j).
inline Matrix gram(std::span<const LabeledInput> inputs, Kernel kernel) {
  KernelOracle oracle(inputs, kernel);
  return oracle.full();
}

/// Dual-only iterate: w = sum_i alpha_w[i] z_i and g = sum_i alpha_g[i] z_i in
/// feature space, never materialized. `s` = Z w plays the role of log_q, and
/// `g_alpha_g` caches G alpha_g so that represented norms need no extra
/// kernel calls.
struct DualRunState {
  Vector s;
  Vector alpha_w;
  Vector alpha_g;
  Vector g_alpha_g;
  Vector q;
  std::size_t t = 0;
  std::size_t last_index = 0;

  static DualRunState initial(std::size_t n) {
    DualRunState st;
    const auto nn = static_cast<Eigen::Index>(n);
    st.s = Vector::Zero(nn);
    st.alpha_w = Vector::Zero(nn);
    st.alpha_g = Vector::Zero(nn);
    st.g_alpha_g = Vector::Zero(nn);
    st.q = Vector::Constant(nn, 1.0 / static_cast<double>(n));
    return st;
  }

  /// ||w||_H = sqrt(alpha_w^T G alpha_w) = sqrt(alpha_w . s).
  double w_norm() const { return std::sqrt(std::max(0.0, alpha_w.dot(s))); }

  /// Represented margin -max_i s_i / ||w||_H, 0 for w = 0.
  double margin() const {
    const double norm = w_norm();
    return norm == 0.0 ? 0.0 : -s.maxCoeff() / norm;
  }
};

namespace detail {

inline DualRunState kernel_alg1_update(DualRunState st, const Vector& gq, const Schedule& sched) {
  const double beta = sched.beta(st.t);
  const double step = sched.theta(st.t) / sched.rho;
  st.alpha_g = beta * (st.alpha_g + st.q);
  st.g_alpha_g = beta * (st.g_alpha_g + gq);
  st.alpha_w -= step * (st.alpha_g + st.q);
  st.s -= step * (st.g_alpha_g + gq);
  st.q = grad_psi(st.s, Loss::exponential());
  ++st.t;
  return st;
}

}  // namespace detail

/// Batch momentum step in the dual with a cached Gram matrix.
inline DualRunState kernel_alg1_step(DualRunState st, const Matrix& gram_matrix, const Schedule& sched) {
  const Vector gq = gram_matrix * st.q;
  return detail::kernel_alg1_update(std::move(st), gq, sched);
}

/// Batch momentum step without a cache: G q_t costs n^2 kernel evaluations.
inline DualRunState kernel_alg1_step(DualRunState st, KernelOracle& oracle, const Schedule& sched) {
  const Vector gq = oracle.multiply(st.q);
  return detail::kernel_alg1_update(std::move(st), gq, sched);
}

/// Adaptive-sampling step in the dual: one Gram row (n evaluations) per step.
inline DualRunState kernel_alg2_step(DualRunState st, KernelOracle& oracle, const Schedule& sched, Rng& rng) {
  const std::size_t i = sample_categorical(st.q, rng.uniform());
  const auto ii = static_cast<Eigen::Index>(i);
  const Vector row = oracle.row(i);
  const double beta = sched.beta(st.t);
  const double step = sched.theta(st.t) / sched.rho;
  st.alpha_g *= beta;
  st.alpha_g[ii] += beta;
  st.g_alpha_g = beta * (st.g_alpha_g + row);
  st.alpha_w -= step * st.alpha_g;
  st.alpha_w[ii] -= step;
  st.s -= step * (st.g_alpha_g + row);
  st.q = grad_psi(st.s, Loss::exponential());
  st.last_index = i;
  ++st.t;
  return st;
}

/// Diagnostics for a dual-only run. phi(mu_t) and the certificate use the
/// momentum identity Z^T mu_t = lambda_{t-1} (g_{t-1} + Z^T q_t) and are read
/// through uncounted kernel values.
inline TraceRow diagnose_kernel(const DualRunState& st, const KernelOracle& oracle, const Schedule& sched,
                                bool accelerated) {
  TraceRow row;
  row.t = st.t;
  row.margin = st.margin();
  row.neg_psi = -psi(st.s, Loss::exponential());
  row.w_norm = st.w_norm();
  row.kernel_calls = oracle.evaluations();
  if (accelerated) {
    const Vector coef = st.alpha_g + st.q;
    const Vector g_coef = oracle.multiply_uncounted(coef);
    const double quad = coef.dot(g_coef);
    if (st.t == 0) {
      row.phi_mu = 0.5 * st.q.dot(oracle.multiply_uncounted(st.q));
    } else {
      const double lam = sched.lambda(st.t - 1);
      row.phi_mu = 0.5 * lam * lam * quad;
      const double beta = sched.beta(st.t);
      const auto cert = certificate_from_norm2(beta * beta * quad, st.t, oracle.n());
      row.cert_lower = cert.lower;
      row.cert_upper = cert.upper;
    }
  }
  return row;
}

/// Dual-only run of alg1 or alg2 (exponential loss). With `cache_gram`, alg1
/// builds G once (n^2 evaluations) and reuses it; otherwise each alg1 step
/// costs n^2 evaluations. alg2 always reads single rows.
inline std::vector<TraceRow> run_kernel(const SolverConfig& cfg, KernelOracle& oracle, bool cache_gram = true) {
  validate(cfg);
  if (cfg.method != Method::alg1 && cfg.method != Method::alg2)
    throw ConfigError("kernel mode supports alg1 and alg2 only");
  if (cfg.loss.kind != LossKind::exponential) throw ConfigError("kernel mode requires the exponential loss");
  Schedule sched = cfg.schedule;
  sched.rho = 1.0;
  if (cfg.method == Method::alg2 && !cfg.momentum_enabled) sched.beta_override = [](std::size_t) { return 0.0; };

  const bool accelerated = cfg.method == Method::alg1;
  std::optional<Matrix> cached;
  if (accelerated && cache_gram) cached = oracle.full();

  DualRunState st = DualRunState::initial(oracle.n());
  Rng rng(cfg.seed);
  std::vector<TraceRow> rows;
  rows.push_back(diagnose_kernel(st, oracle, sched, accelerated));
  for (std::size_t k = 0; k < cfg.total_steps; ++k) {
    if (cfg.method == Method::alg2)
      st = kernel_alg2_step(std::move(st), oracle, sched, rng);
    else if (cached)
      st = kernel_alg1_step(std::move(st), *cached, sched);
    else
      st = kernel_alg1_step(std::move(st), oracle, sched);
    if (st.t % cfg.stride == 0 || st.t == cfg.total_steps) rows.push_back(diagnose_kernel(st, oracle, sched, accelerated));
  }
  return rows;
}

}  // namespace dualmargin
