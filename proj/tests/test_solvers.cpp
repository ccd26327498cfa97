#include "support.hpp"

#include <gtest/gtest.h>

#include <cstring>

using namespace dualmargin;
using namespace dualmargin::testing;

namespace {

const Schedule kAccel = Schedule::accelerated();

std::vector<Dataset> separable_suite() {
  std::vector<Dataset> out;
  for (std::uint64_t seed = 0; seed < 6; ++seed) out.push_back(separable(4 + 5 * seed, 2 + seed % 3, 7000 + seed));
  out.push_back(orthogonal_pair());
  out.push_back(one_point());
  return out;
}

}  // namespace

TEST(Rng, StandardEngineSequence) {
  Rng rng(5489);
  std::uint64_t last = 0;
  for (int i = 0; i < 10000; ++i) last = rng.next();
  EXPECT_EQ(last, 9981545732273789042ULL);
}

TEST(SampleCategorical, InverseCdf) {
  const Vector q = vec({0.25, 0.0, 0.75});
  EXPECT_EQ(sample_categorical(q, 0.0), 0u);
  EXPECT_EQ(sample_categorical(q, 0.2499), 0u);
  EXPECT_EQ(sample_categorical(q, 0.25), 2u);
  EXPECT_EQ(sample_categorical(q, 0.9999999), 2u);
  EXPECT_EQ(sample_categorical(vec({0.5, 0.5 - 1e-17, 0.0}), 1.0 - 1e-17), 1u);
}

TEST(Alg1, OnePointMatchesScalarRecurrence) {
  const Dataset ds = one_point();
  PrimalState s = PrimalState::initial(ds);

  // Scalar recurrence on the first coordinate: z = -1, q = 1.
  double w = 0.0, g = 0.0;
  for (std::size_t t = 0; t < 50; ++t) {
    const double beta = double(t) / double(t + 1);
    g = beta * (g - 1.0);
    w -= g - 1.0;
    s = alg1_step(std::move(s), ds, kAccel);
    EXPECT_DOUBLE_EQ(s.w[0], w);
    EXPECT_EQ(s.w[1], 0.0);
    EXPECT_DOUBLE_EQ(s.g[0], g);
    EXPECT_DOUBLE_EQ(s.dual.q[0], 1.0);
    EXPECT_DOUBLE_EQ(margin(s.w, ds), 1.0);
  }
}

TEST(Alg1, OnePointFirstSteps) {
  const Dataset ds = one_point();
  PrimalState s = PrimalState::initial(ds);
  s = alg1_step(std::move(s), ds, kAccel);
  EXPECT_EQ(s.g, vec({0.0, 0.0}));
  EXPECT_EQ(s.w, vec({1.0, 0.0}));
  s = alg1_step(std::move(s), ds, kAccel);
  EXPECT_LT(max_abs_diff(s.g, vec({-0.5, 0.0})), 1e-15);
  EXPECT_LT(max_abs_diff(s.w, vec({2.5, 0.0})), 1e-15);
  s = alg1_step(std::move(s), ds, kAccel);
  EXPECT_LT(max_abs_diff(s.g, vec({-1.0, 0.0})), 1e-15);
}

TEST(Alg1, MatchesDualNesterovReconstruction) {
  const Dataset one = one_point();
  PrimalState a = PrimalState::initial(one), b = a;
  for (int t = 0; t < 50; ++t) {
    a = alg1_step(std::move(a), one, kAccel);
    b = dual_nesterov_primal_step(std::move(b), one, kAccel);
    ASSERT_LT(max_abs_diff(a.w, b.w), 1e-12);
  }

  const Dataset ds = separable(8, 3, 1234);
  a = PrimalState::initial(ds);
  b = a;
  for (std::size_t t = 1; t <= 200; ++t) {
    a = alg1_step(std::move(a), ds, kAccel);
    b = dual_nesterov_primal_step(std::move(b), ds, kAccel);
    ASSERT_LT(rel_diff(a.w, b.w), 1e-9) << t;
    const Vector g_t = current_momentum(a, ds, kAccel);
    ASSERT_LT(max_abs_diff(ds.z().transpose() * b.dual.mu, 2.0 * g_t / double(t)), 1e-10) << t;
    ASSERT_LT(max_abs_diff(ds.z().transpose() * a.dual.mu, 2.0 * g_t / double(t)), 1e-10) << t;
  }
}

TEST(Alg1, DualVariableIdentityAndMomentumClosedForm) {
  const Dataset ds = separable(12, 4, 99);
  PrimalState s = PrimalState::initial(ds);
  std::vector<Vector> directions;  // Z^T q_j, j = 0, 1, ...
  for (std::size_t t = 0; t <= 150; ++t) {
    ASSERT_LT(max_abs_diff(grad_psi(ds.z() * s.w, Loss::exponential()), s.dual.q), 1e-10);
    directions.push_back(ds.z().transpose() * s.dual.q);
    if (t >= 1) {
      Vector closed = Vector::Zero(4);
      for (std::size_t j = 1; j <= t; ++j) closed += (double(j) / double(t + 1)) * directions[j];
      ASSERT_LT(max_abs_diff(current_momentum(s, ds, kAccel), closed), 1e-10) << t;
    }
    s = alg1_step(std::move(s), ds, kAccel);
  }
}

TEST(Alg1, AlternativeCharacterizationAndNormSandwich) {
  for (const Dataset& ds : separable_suite()) {
    const double gamma = max_margin_oracle(ds, 1e-7).gamma;
    PrimalState s = PrimalState::initial(ds);
    const Vector zq0 = ds.z().transpose() * s.dual.q;
    Vector mu_sum = Vector::Zero(static_cast<Eigen::Index>(ds.d()));
    double lower = 0.0, upper = 0.0;
    for (std::size_t t = 0; t < 150; ++t) {
      const double lam = kAccel.lambda(t);
      s = alg1_step(std::move(s), ds, kAccel);
      mu_sum += ds.z().transpose() * s.dual.mu / lam;
      lower += gamma / lam;
      upper += (ds.z().transpose() * s.dual.nu).norm() / lam;
      const Vector alt = ds.z().transpose() * s.dual.q - zq0 - mu_sum;
      ASSERT_LT(rel_diff(s.w, alt), 1e-8);
      ASSERT_GE(s.w.norm(), lower - 1e-8);
      ASSERT_LE(s.w.norm(), upper + 1e-8);
    }
  }
}

TEST(Alg1, MarginRates) {
  for (const Dataset& ds : separable_suite()) {
    const double gamma = max_margin_oracle(ds, 1e-7).gamma;
    const double ln_n = std::log(double(ds.n()));
    PrimalState s = PrimalState::initial(ds);
    for (std::size_t t = 1; t <= 500; ++t) {
      s = alg1_step(std::move(s), ds, kAccel);
      const double m = margin(s.w, ds);
      const double tp1 = double(t + 1);
      ASSERT_GE(m, gamma / 2 - 4 * ln_n / (gamma * tp1 * tp1) - 1e-9) << t;
      ASSERT_GE(m, gamma - 4 * (1 + ln_n) * (1 + 2 * std::log(tp1)) / (gamma * tp1 * tp1) - 1e-9) << t;
    }
  }
}

TEST(Alg2, OnePointAndDeterminism) {
  const Dataset one = one_point();
  Schedule plain = kAccel;
  plain.beta_override = [](std::size_t) { return 0.0; };
  Rng rng(1);
  PrimalState s = alg2_step(PrimalState::initial(one), one, plain, rng);
  EXPECT_EQ(s.last_index, 0u);
  EXPECT_EQ(s.w, vec({1.0, 0.0}));

  const Dataset ds = separable(16, 3, 5);
  SolverConfig cfg;
  cfg.method = Method::alg2;
  cfg.total_steps = 300;
  cfg.seed = 42;
  const auto a = run(cfg, ds), b = run(cfg, ds);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(std::memcmp(&a[i].margin, &b[i].margin, sizeof(double)), 0);
    EXPECT_EQ(std::memcmp(&a[i].neg_psi, &b[i].neg_psi, sizeof(double)), 0);
  }
  cfg.seed = 43;
  const auto c = run(cfg, ds);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].margin != c[i].margin;
  EXPECT_TRUE(differs);
}

TEST(Alg2, TheoryHorizonAndSchedule) {
  EXPECT_EQ(alg2_theory_horizon(2, 1.0, 1.0, 0.5), 111u);  // max(ceil(22.18 + 88.72), 64)
  EXPECT_EQ(alg2_theory_horizon(1, 1.0, 1.0, 0.01), 3200u);
  EXPECT_THROW(alg2_theory_horizon(4, 0.0, 0.1, 0.1), ConfigError);
  const Schedule s = alg2_theory_schedule(4, 100);
  EXPECT_DOUBLE_EQ(s.theta(7), std::sqrt(std::log(4.0) / 100.0));
  EXPECT_EQ(s.beta(9), 0.0);
}

TEST(Gd, FirstStepAndMonotoneRisk) {
  const Dataset one = one_point();
  const PrimalState s = gd_step(PrimalState::initial(one), one, Loss::exponential(), 1.0);
  EXPECT_EQ(s.w, vec({1.0, 0.0}));

  for (const Dataset& ds : separable_suite()) {
    PrimalState p = PrimalState::initial(ds);
    double prev = risk(p.w, ds, Loss::exponential());
    for (int t = 0; t < 300; ++t) {
      p = gd_step(std::move(p), ds, Loss::exponential(), 1.0);
      const double r = risk(p.w, ds, Loss::exponential());
      ASSERT_LE(r, prev * (1 + 1e-14));
      prev = r;
    }
  }
}

TEST(Gd, DualSequenceIsEntropyMirrorDescent) {
  const Dataset ds = separable(10, 3, 31);
  PrimalState p = PrimalState::initial(ds);
  DualState d = DualState::initial(ds.n());
  for (int t = 0; t < 50; ++t) {
    const double theta = 0.8 * risk(p.w, ds, Loss::exponential());
    p = gd_step(std::move(p), ds, Loss::exponential(), 0.8);
    d = md_step(d, ds, theta);
    ASSERT_LT(max_abs_diff(p.dual.q, d.q), 1e-10) << t;
  }
}

TEST(Ngd, OnePointAndRate) {
  const Dataset one = one_point();
  PrimalState s = PrimalState::initial(one);
  for (int t = 1; t <= 20; ++t) {
    s = ngd_step(std::move(s), one, Loss::exponential());
    EXPECT_EQ(s.w, vec({double(t), 0.0}));
  }

  const Dataset ds = orthogonal_pair();
  PrimalState p = PrimalState::initial(ds);
  for (int t = 0; t < 100; ++t) p = ngd_step(std::move(p), ds, Loss::exponential());
  EXPECT_GE(margin(p.w, ds), 1.0 / std::sqrt(2.0) - 10.0 * (1.0 + std::log(2.0)) / 100.0);
}

TEST(Ngd, EqualsGdWithRiskScaledStep) {
  const Dataset ds = separable(9, 4, 17);
  PrimalState a = PrimalState::initial(ds), b = a;
  for (int t = 0; t < 100; ++t) {
    const double eta = 1.0 / risk(b.w, ds, Loss::exponential());
    a = ngd_step(std::move(a), ds, Loss::exponential());
    b = gd_step(std::move(b), ds, Loss::exponential(), eta);
    ASSERT_LT(rel_diff(a.w, b.w), 1e-12);
    ASSERT_NEAR(margin(a.w, ds), margin(b.w, ds), 1e-10);
  }
}

TEST(BatchPerceptron, Examples) {
  const Dataset orth = orthogonal_pair();
  PrimalState s = batch_perceptron_step(PrimalState::initial(orth), orth);
  EXPECT_EQ(s.last_index, 0u);
  EXPECT_EQ(s.w, vec({1.0, 0.0}));
  for (int t = 1; t < 2000; ++t) s = batch_perceptron_step(std::move(s), orth);
  EXPECT_NEAR(margin(s.w, orth), 1.0 / std::sqrt(2.0), 0.02);

  const Dataset one = one_point();
  PrimalState p = PrimalState::initial(one);
  for (int t = 0; t < 30; ++t) {
    p = batch_perceptron_step(std::move(p), one);
    EXPECT_DOUBLE_EQ(margin(p.w, one), 1.0);
  }
}

TEST(Run, RowsAndValidation) {
  SolverConfig cfg;
  cfg.total_steps = 10;
  const auto rows = run(cfg, one_point());
  ASSERT_EQ(rows.size(), 11u);
  EXPECT_EQ(rows.front().margin, 0.0);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].t, i);
    EXPECT_DOUBLE_EQ(rows[i].margin, 1.0);
    EXPECT_DOUBLE_EQ(rows[i].cert_lower, 1.0);
    EXPECT_DOUBLE_EQ(rows[i].cert_upper, 1.0);
    EXPECT_EQ(rows[i].wall_ns, 0);
  }

  cfg.total_steps = 25;
  cfg.stride = 10;
  const auto strided = run(cfg, one_point());
  ASSERT_EQ(strided.size(), 4u);
  EXPECT_EQ(strided[3].t, 25u);

  cfg.method = Method::alg2;
  cfg.loss = Loss::logistic(1);
  EXPECT_THROW(run(cfg, one_point()), ConfigError);
  cfg.method = Method::alg1;
  cfg.total_steps = 0;
  EXPECT_THROW(run(cfg, one_point()), ConfigError);
  EXPECT_THROW(parse_method("sgd"), ConfigError);
  EXPECT_EQ(parse_method("dual_nesterov_primal"), Method::dual_nesterov_primal);
}

TEST(Run, LogisticAlg1MatchesDualReconstruction) {
  const Dataset ds = separable(6, 2, 3);
  const Loss loss = Loss::logistic(ds.n());
  Schedule sched = kAccel;
  sched.rho = loss.rho;
  PrimalState a = PrimalState::initial(ds, loss), b = a;
  for (int t = 0; t < 200; ++t) {
    a = alg1_step(std::move(a), ds, sched, loss);
    b = dual_nesterov_primal_step(std::move(b), ds, sched, loss);
    ASSERT_LT(rel_diff(a.w, b.w), 1e-9);
    ASSERT_LT(max_abs_diff(grad_psi(ds.z() * a.w, loss), a.dual.q), 1e-10);
  }
}
