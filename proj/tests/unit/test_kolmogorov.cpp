#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ergobound/kolmogorov.hpp"

using namespace ergobound;

namespace {

ModelSpec make(QueueClass c, std::size_t S, TimeFunction lam, TimeFunction mu) {
  ModelSpec m;
  m.queue_class = c;
  m.servers = S;
  m.lambda = std::move(lam);
  m.mu = std::move(mu);
  return m;
}

ModelSpec mm1(double lam, double mu) {
  return make(QueueClass::BirthDeath, 1, TimeFunction::constant(lam), TimeFunction::constant(mu));
}

}  // namespace

TEST(GeneratorOperator, MatchesDenseA) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (auto c : kAllClasses) {
    auto m = make(c, 3, TimeFunction::sinusoid(2, 1), TimeFunction::cosinusoid(2, 1));
    const GeneratorOperator op(m, 15);
    std::vector<double> p(16), out(16);
    for (double& v : p) v = U(rng);
    const double t = 0.37;
    op.apply(t, p, out);
    const auto ref = build_A(m, 15, t) * std::span<const double>(p);
    for (std::size_t k = 0; k < 16; ++k) EXPECT_NEAR(out[k], ref[k], 1e-12);
  }
}

TEST(Solve, MM1ReachesStationaryLaw) {
  const std::size_t N = 100;
  const auto p0 = unit_vector(N, 0);
  const std::vector<double> times{10.0};
  const auto tr = solve(mm1(1.0, 4.0), N, p0, 0.0, times);
  double tv = 0.0;
  for (std::size_t k = 0; k <= N; ++k) tv += std::abs(tr.states[0][k] - 0.75 * std::pow(0.25, k));
  EXPECT_LT(0.5 * tv, 1e-6);
}

TEST(Solve, ZeroRatesKeepInitialState) {
  const auto p0 = unit_vector(10, 3);
  const std::vector<double> times{0.0, 1.0, 5.0};
  const auto tr = solve(mm1(0.0, 0.0), 10, p0, 0.0, times);
  ASSERT_EQ(tr.states.size(), 3u);
  for (const auto& p : tr.states) EXPECT_EQ(p, p0);
}

TEST(Solve, PoissonPureBirthMatchesClosedForm) {
  // no service, large N: p_k(t) = e^{-lt} (lt)^k / k!
  const std::size_t N = 60;
  const std::vector<double> times{0.5, 1.0, 2.0};
  const auto tr = solve(mm1(3.0, 0.0), N, unit_vector(N, 0), 0.0, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double lt = 3.0 * times[i];
    for (std::size_t k = 0; k < 20; ++k)
      EXPECT_NEAR(tr.states[i][k], std::exp(-lt + k * std::log(lt) - std::lgamma(k + 1.0)), 1e-8);
  }
}

TEST(Solve, PreservesSimplexOnRandomModels) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> U(0.5, 6.0);
  for (auto c : kAllClasses)
    for (int rep = 0; rep < 3; ++rep) {
      const double a = U(rng);
      auto m = make(c, 1 + rep * 2, TimeFunction::sinusoid(a, a), TimeFunction::cosinusoid(U(rng) + 1, 1));
      const auto times = linspace(0.0, 4.0, 41);
      const auto tr = solve(m, 30, unit_vector(30, 0), 0.0, times);
      EXPECT_GE(tr.stats.min_entry, -1e-10);
      EXPECT_LE(tr.stats.max_mass_drift, 1e-9);
      for (const auto& p : tr.states) {
        double s = 0.0;
        for (double v : p) s += v;
        EXPECT_NEAR(s, 1.0, 1e-9);
      }
    }
}

TEST(Solve, TighterToleranceChangesLittle) {
  auto m = make(QueueClass::BatchArrival, 3, TimeFunction::sinusoid(4, 4), TimeFunction::cosinusoid(3, 1));
  const std::vector<double> times{3.0};
  const auto a = solve(m, 40, unit_vector(40, 0), 0.0, times, SolverOptions::from_tolerance(1e-7));
  const auto b = solve(m, 40, unit_vector(40, 0), 0.0, times, SolverOptions::from_tolerance(5e-8));
  double diff = 0.0;
  for (std::size_t k = 0; k <= 40; ++k) diff = std::max(diff, std::abs(a.states[0][k] - b.states[0][k]));
  EXPECT_LT(diff, 1e-6);
}

TEST(Solve, RejectsBadInput) {
  const std::vector<double> times{1.0};
  std::vector<double> bad(11, 0.0);
  EXPECT_THROW(solve(mm1(1, 2), 10, bad, 0.0, times), std::invalid_argument);
  bad[0] = 1.0;
  const std::vector<double> unsorted{2.0, 1.0};
  EXPECT_THROW(solve(mm1(1, 2), 10, bad, 0.0, unsorted), std::invalid_argument);
  EXPECT_THROW(solve(mm1(1, 2), 10, std::vector<double>(5, 0.2), 0.0, times), std::invalid_argument);
}

TEST(Characteristics, Examples) {
  const auto a = characteristics(unit_vector(8, 0));
  EXPECT_EQ(a.p0, 1.0);
  EXPECT_EQ(a.mean, 0.0);
  const auto b = characteristics(unit_vector(8, 5));
  EXPECT_EQ(b.p0, 0.0);
  EXPECT_EQ(b.mean, 5.0);
  const std::vector<double> u{0.25, 0.25, 0.25, 0.25};
  const auto c = characteristics(u);
  EXPECT_DOUBLE_EQ(c.p0, 0.25);
  EXPECT_DOUBLE_EQ(c.mean, 1.5);
}

TEST(LimitingRegime, ZeroArrivals) {
  auto m = make(QueueClass::BirthDeath, 2, TimeFunction::constant(0.0), TimeFunction::cosinusoid(3, 1));
  LimitingOptions opt;
  opt.N_initial = 10;
  const auto lim = limiting_regime(m, opt);
  for (double v : lim.p0_curve) EXPECT_DOUBLE_EQ(v, 1.0);
  for (double v : lim.mean_curve) EXPECT_DOUBLE_EQ(v, 0.0);
  EXPECT_EQ(lim.times.size(), 201u);
  EXPECT_DOUBLE_EQ(lim.times.front(), 5.0);
  EXPECT_DOUBLE_EQ(lim.times.back(), 6.0);
}

TEST(LimitingRegime, PeriodicSmallModel) {
  auto m = make(QueueClass::BirthDeath, 2, TimeFunction::sinusoid(1, 1), TimeFunction::cosinusoid(3, 1));
  LimitingOptions opt;
  opt.N_initial = 20;
  const auto lim = limiting_regime(m, opt);
  EXPECT_LT(lim.truncation_error_estimate, 1e-4);
  EXPECT_FALSE(lim.flagged);
  // 1-periodic regime: endpoints of the window agree
  EXPECT_NEAR(lim.p0_curve.front(), lim.p0_curve.back(), 1e-4);
  EXPECT_NEAR(lim.mean_curve.front(), lim.mean_curve.back(), 1e-4);
}

TEST(LimitingRegime, NonPeriodicRejected) {
  auto m = make(QueueClass::BirthDeath, 2, TimeFunction::compose(TimeFunction::sinusoid(1, 1), 1.0, 0.5),
                TimeFunction::constant(3.0));
  EXPECT_THROW(limiting_regime(m), UnsupportedModeError);
}

TEST(LimitingRegime, CapExceeded) {
  // heavy overload: mass runs to the truncation boundary and never settles
  auto m = make(QueueClass::BirthDeath, 1, TimeFunction::constant(20.0), TimeFunction::constant(1.0));
  LimitingOptions opt;
  opt.N_initial = 10;
  opt.N_cap = 40;
  EXPECT_THROW(limiting_regime(m, opt), TruncationError);
}

TEST(ConvergenceExperiment, MM1EnvelopeHolds) {
  const std::size_t N = 40;
  const auto d = DSequence::geometric(2.0);
  const auto pa = unit_vector(N, 5), pb = unit_vector(N, 0);
  const auto times = linspace(0.0, 3.0, 31);
  const auto table = convergence_experiment(mm1(1.0, 4.0), d, N, pa, pb, times);
  EXPECT_TRUE(table.pass);
  EXPECT_TRUE(table.sign_condition);
  for (const auto& r : table.rows) {
    EXPECT_LE(r.norm_1D, std::exp(-1.0 * r.t) * table.initial_1D * (1 + 1e-8) + 1e-8);
    EXPECT_GE(r.norm_1D, std::exp(-9.0 * r.t) * table.initial_1D * (1 - 1e-8) - 1e-8);
  }
}

TEST(ConvergenceExperiment, IdenticalStartsGiveZero) {
  const std::size_t N = 20;
  const auto p = unit_vector(N, 2);
  const auto times = linspace(0.0, 1.0, 5);
  const auto table = convergence_experiment(mm1(1.0, 4.0), DSequence::geometric(2.0), N, p, p, times);
  EXPECT_TRUE(table.pass);
  for (const auto& r : table.rows) {
    EXPECT_EQ(r.l1, 0.0);
    EXPECT_EQ(r.norm_1D, 0.0);
  }
}

TEST(LimitingRegime, RaisesTStarUntilPeriodic) {
  auto m = make(QueueClass::BirthDeath, 1, TimeFunction::sinusoid(0.3, 0.3), TimeFunction::constant(1.0));
  LimitingOptions opt;
  opt.N_initial = 30;
  opt.t_star = 1.0;
  const auto lim = limiting_regime(m, opt);
  EXPECT_GT(lim.t_star, 1.0);
  EXPECT_LE(lim.period_drift, 10 * opt.truncation_tol);
  opt.auto_raise_t_star = false;
  EXPECT_EQ(limiting_regime(m, opt).t_star, 1.0);
}
