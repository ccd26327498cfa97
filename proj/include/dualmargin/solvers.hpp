#pragma once

#include "certification.hpp"
#include "dataset.hpp"
#include "dual_geometry.hpp"
#include "losses.hpp"
#include "trace.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace dualmargin {

/// Seedable 64-bit generator with a platform-independent uniform draw
/// (std::uniform_real_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Inverse-CDF draw from a probability vector: the first index whose running
/// sum exceeds u. Falls back to the last index with positive mass.
inline std::size_t sample_categorical(const Vector& q, double u) {
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (q[i] <= 0.0) continue;
    cumulative += q[i];
    last_positive = static_cast<std::size_t>(i);
    if (u < cumulative) return last_positive;
  }
  return last_positive;
}

enum class Method { alg1, alg2, gd, ngd, batch_perceptron, dual_nesterov_primal };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::alg1: return "alg1";
    case Method::alg2: return "alg2";
    case Method::gd: return "gd";
    case Method::ngd: return "ngd";
    case Method::batch_perceptron: return "batch_perceptron";
    case Method::dual_nesterov_primal: return "dual_nesterov_primal";
  }
  return "unknown";
}

inline Method parse_method(std::string_view s) {
  for (auto m : {Method::alg1, Method::alg2, Method::gd, Method::ngd, Method::batch_perceptron,
                 Method::dual_nesterov_primal})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown method '" + std::string(s) + "'");
}

/// Primal iterate with its momentum and the matching dual state.
///
/// After k steps: `w` = w_k, `g` = g_{k-1} (the last momentum applied),
/// `dual.log_q` = Z w_k, `dual.q` = grad psi(Z w_k). Methods that average in
/// the dual also keep mu_k and nu_{k-1}; the others keep them equal to q.
struct PrimalState {
  Vector w;
  Vector g;
  std::size_t t = 0;
  DualState dual;
  std::size_t last_index = 0;  // sampled row of the last alg2 step

  static PrimalState initial(const Dataset& ds, const Loss& loss = Loss::exponential()) {
    PrimalState s;
    s.w = Vector::Zero(static_cast<Eigen::Index>(ds.d()));
    s.g = Vector::Zero(static_cast<Eigen::Index>(ds.d()));
    s.dual = DualState::initial(ds.n(), loss);
    return s;
  }
};

namespace detail {

inline void advance_primal(PrimalState& s, const Dataset& ds, const Vector& step, const Loss& loss) {
  s.w -= step;
  s.dual.log_q -= ds.z() * step;
  s.dual.q = grad_psi(s.dual.log_q, loss);
}

}  // namespace detail

/// The momentum g_t that the next alg1 step will use, given g_{t-1} in the state.
inline Vector current_momentum(const PrimalState& s, const Dataset& ds, const Schedule& sched) {
  return sched.beta(s.t) * (s.g + ds.z().transpose() * s.dual.q);
}

/// Batch momentum step:
///   g_t     = beta_t (g_{t-1} + Z^T q_t)
///   w_{t+1} = w_t - theta_t / rho (g_t + Z^T q_t)
/// where q_t = grad psi(Z w_t). mu and nu follow the lambda schedule.
inline PrimalState alg1_step(PrimalState s, const Dataset& ds, const Schedule& sched,
                             const Loss& loss = Loss::exponential()) {
  const std::size_t t = s.t;
  const Vector direction = ds.z().transpose() * s.dual.q;
  s.g = sched.beta(t) * (s.g + direction);
  const Vector step = (sched.theta(t) / sched.rho) * (s.g + direction);

  const double lambda = sched.lambda(t);
  s.dual.nu = (1.0 - lambda) * s.dual.mu + lambda * s.dual.q;
  detail::advance_primal(s, ds, step, loss);
  s.dual.mu = (1.0 - lambda) * s.dual.mu + lambda * s.dual.q;
  s.dual.t = ++s.t;
  return s;
}

/// Primal reconstruction from the accelerated dual engine:
/// w_{t+1} = w_t - theta_t / (rho lambda_t) Z^T nu_t. Also records
/// g_t = Z^T (nu_t / lambda_t - q_t).
inline PrimalState dual_nesterov_primal_step(PrimalState s, const Dataset& ds, const Schedule& sched,
                                             const Loss& loss = Loss::exponential()) {
  const std::size_t t = s.t;
  const double lambda = sched.lambda(t);
  const double theta = sched.theta(t);
  const Vector q_t = s.dual.q;
  s.dual = amd_step(s.dual, ds, sched, loss);
  const Vector znu = ds.z().transpose() * s.dual.nu;
  s.w -= (theta / (sched.rho * lambda)) * znu;
  s.g = znu / lambda - ds.z().transpose() * q_t;
  s.t = t + 1;
  return s;
}

/// Adaptive-sampling step (exponential loss): i_t ~ q_t,
///   g_t = beta_t (g_{t-1} + z_{i_t}),  w_{t+1} = w_t - theta_t (g_t + z_{i_t}).
inline PrimalState alg2_step(PrimalState s, const Dataset& ds, const Schedule& sched, Rng& rng) {
  const std::size_t t = s.t;
  const std::size_t i = sample_categorical(s.dual.q, rng.uniform());
  const Vector z_i = ds.row(i).transpose();
  s.g = sched.beta(t) * (s.g + z_i);
  const Vector step = (sched.theta(t) / sched.rho) * (s.g + z_i);
  detail::advance_primal(s, ds, step, Loss::exponential());
  s.dual.mu = s.dual.q;
  s.dual.nu = s.dual.q;
  s.last_index = i;
  s.dual.t = ++s.t;
  return s;
}

/// Plain gradient descent on the empirical risk.
inline PrimalState gd_step(PrimalState s, const Dataset& ds, const Loss& loss, double eta) {
  const Vector step = eta * risk_gradient(s.w, ds, loss);
  detail::advance_primal(s, ds, step, loss);
  s.dual.mu = s.dual.q;
  s.dual.nu = s.dual.q;
  s.dual.t = ++s.t;
  return s;
}

/// Normalized gradient descent: w_{t+1} = w_t - theta Z^T grad psi(Z w_t),
/// which for the exponential loss is theta grad R(w_t) / R(w_t).
inline PrimalState ngd_step(PrimalState s, const Dataset& ds, const Loss& loss, double theta = 1.0) {
  const Vector step = theta * (ds.z().transpose() * s.dual.q);
  detail::advance_primal(s, ds, step, loss);
  s.dual.mu = s.dual.q;
  s.dual.nu = s.dual.q;
  s.dual.t = ++s.t;
  return s;
}

/// Supergradient ascent on min_i <w, -z_i>: steps along -z_{i*} for the
/// currently worst example, lowest index on ties, step 1/sqrt(t+1).
inline PrimalState batch_perceptron_step(PrimalState s, const Dataset& ds) {
  const Vector p = ds.z() * s.w;
  Eigen::Index worst = 0;
  for (Eigen::Index i = 1; i < p.size(); ++i)
    if (p[i] > p[worst]) worst = i;
  const double eta = 1.0 / std::sqrt(static_cast<double>(s.t) + 1.0);
  const Vector step = eta * ds.z().row(worst).transpose();
  detail::advance_primal(s, ds, step, Loss::exponential());
  s.dual.mu = s.dual.q;
  s.dual.nu = s.dual.q;
  s.last_index = static_cast<std::size_t>(worst);
  s.dual.t = ++s.t;
  return s;
}

/// Proven horizon for the momentum-free adaptive-sampling method:
/// max(ceil((32 ln n + 64 ln(2/delta)) / (gamma^2 eps^2)), ceil(32 / (delta eps^2))).
inline std::size_t alg2_theory_horizon(std::size_t n, double gamma, double eps, double delta) {
  if (!(gamma > 0.0) || !(eps > 0.0) || !(delta > 0.0 && delta < 1.0))
    throw ConfigError("alg2 theory horizon needs gamma > 0, eps > 0, delta in (0,1)");
  const double ln_n = std::log(static_cast<double>(n));
  const double a = std::ceil((32.0 * ln_n + 64.0 * std::log(2.0 / delta)) / (gamma * gamma * eps * eps));
  const double b = std::ceil(32.0 / (delta * eps * eps));
  return static_cast<std::size_t>(std::max(a, b));
}

/// beta_t = 0 and theta_j = sqrt(ln n / horizon).
inline Schedule alg2_theory_schedule(std::size_t n, std::size_t horizon) {
  Schedule s = Schedule::accelerated();
  const double theta = std::sqrt(std::log(static_cast<double>(n)) / static_cast<double>(horizon));
  s.theta = [theta](std::size_t) { return theta; };
  s.beta_override = [](std::size_t) { return 0.0; };
  return s;
}

struct SolverConfig {
  Method method = Method::alg1;
  Loss loss = Loss::exponential();
  Schedule schedule = Schedule::accelerated();
  std::size_t total_steps = 100;
  std::uint64_t seed = 0;
  bool momentum_enabled = true;  // alg2 only
  double gd_eta = 1.0;           // gd only
  std::size_t stride = 1;
  bool timing = false;  // fill wall_ns; off keeps traces byte-reproducible
};

/// Row of diagnostics for the current iterate. Certificates are filled for
/// the batch momentum method and its dual reconstruction with the exponential
/// loss; phi(mu_t) for every method that averages in the dual.
inline TraceRow diagnose(const PrimalState& s, const Dataset& ds, const SolverConfig& cfg) {
  TraceRow row;
  row.t = s.t;
  row.margin = margin(s.w, ds);
  row.neg_psi = -psi(ds.z() * s.w, cfg.loss);
  row.w_norm = s.w.norm();
  const bool accelerated = cfg.method == Method::alg1 || cfg.method == Method::dual_nesterov_primal;
  if (accelerated) {
    row.phi_mu = phi(s.dual.mu, ds);
    if (s.t >= 1 && cfg.loss.kind == LossKind::exponential) {
      const auto cert = certificate(current_momentum(s, ds, cfg.schedule), s.t, ds.n());
      row.cert_lower = cert.lower;
      row.cert_upper = cert.upper;
    }
  }
  return row;
}

inline void validate(const SolverConfig& cfg) {
  if (cfg.total_steps < 1) throw ConfigError("total_steps must be at least 1");
  if (cfg.stride < 1) throw ConfigError("stride must be at least 1");
  if (cfg.method == Method::alg2 && cfg.loss.kind != LossKind::exponential)
    throw ConfigError("unsupported combination: alg2 requires the exponential loss");
  if (!(cfg.loss.rho > 0.0) || !(cfg.schedule.rho > 0.0)) throw ConfigError("rho must be positive");
}

/// Runs `total_steps` iterations and records rows at t = 0, every `stride`
/// steps, and the final step. Deterministic given the config. The step
/// scaling rho is taken from the loss.
inline std::vector<TraceRow> run(const SolverConfig& cfg, const Dataset& ds) {
  validate(cfg);
  Schedule sched = cfg.schedule;
  sched.rho = cfg.loss.rho;
  if (cfg.method == Method::alg2 && !cfg.momentum_enabled) sched.beta_override = [](std::size_t) { return 0.0; };

  PrimalState s = PrimalState::initial(ds, cfg.loss);
  Rng rng(cfg.seed);
  std::vector<TraceRow> rows;
  rows.reserve(cfg.total_steps / cfg.stride + 2);
  const auto start = std::chrono::steady_clock::now();
  auto record = [&] {
    TraceRow row = diagnose(s, ds, SolverConfig{cfg.method, cfg.loss, sched});
    if (cfg.timing)
      row.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(row);
  };

  record();
  for (std::size_t k = 0; k < cfg.total_steps; ++k) {
    switch (cfg.method) {
      case Method::alg1: s = alg1_step(std::move(s), ds, sched, cfg.loss); break;
      case Method::alg2: s = alg2_step(std::move(s), ds, sched, rng); break;
      case Method::gd: s = gd_step(std::move(s), ds, cfg.loss, cfg.gd_eta); break;
      case Method::ngd: {
        const double theta = sched.theta(s.t);
        s = ngd_step(std::move(s), ds, cfg.loss, theta);
        break;
      }
      case Method::batch_perceptron: s = batch_perceptron_step(std::move(s), ds); break;
      case Method::dual_nesterov_primal: s = dual_nesterov_primal_step(std::move(s), ds, sched, cfg.loss); break;
    }
    if (s.t % cfg.stride == 0 || s.t == cfg.total_steps) record();
  }
  return rows;
}

}  // namespace dualmargin
