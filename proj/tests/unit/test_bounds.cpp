#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "ergobound/bounds.hpp"

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

ModelSpec case_i(double i) {
  return make(QueueClass::BirthDeath, 100, TimeFunction::sinusoid(i, i), TimeFunction::cosinusoid(3, 1));
}

DSequence random_d(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(1.0, 1.8);
  std::vector<double> head{1.0};
  const int len = 1 + static_cast<int>(rng() % 10);
  for (int i = 1; i < len; ++i) head.push_back(head.back() * U(rng));
  return DSequence(head, U(rng));
}

}  // namespace

TEST(ClosedForm, MM1Examples) {
  const auto m = mm1(1.0, 4.0);
  const auto d = DSequence::geometric(2.0);
  EXPECT_NEAR(alpha_i(m, d, 1, 0.0), 3.0, 1e-12);
  for (int i = 2; i < 40; ++i) EXPECT_NEAR(alpha_i(m, d, i, 0.0), 1.0, 1e-12) << i;
  EXPECT_NEAR(chi_i(m, d, 1, 0.0), 7.0, 1e-12);
  for (int i = 2; i < 40; ++i) EXPECT_NEAR(chi_i(m, d, i, 0.0), 9.0, 1e-12) << i;
  const auto agg = aggregate(m, d, 0.0);
  EXPECT_NEAR(agg.values.alpha, 1.0, 1e-12);
  EXPECT_NEAR(agg.values.beta, 3.0, 1e-12);
  EXPECT_NEAR(agg.values.chi, 9.0, 1e-12);
  EXPECT_TRUE(agg.tail_confirmed);
  // classical decay parameter of M/M/1
  EXPECT_NEAR(agg.values.alpha, std::pow(std::sqrt(4.0) - std::sqrt(1.0), 2), 1e-12);
}

TEST(ClosedForm, PureDeath) {
  const auto m = mm1(0.0, 1.0);
  const auto d = DSequence::geometric(1.0);
  EXPECT_NEAR(alpha_i(m, d, 1, 0.0), 1.0, 1e-12);
  for (int i = 2; i < 10; ++i) EXPECT_NEAR(alpha_i(m, d, i, 0.0), 0.0, 1e-12);
}

TEST(ClosedForm, ZeroRates) {
  for (auto c : kAllClasses) {
    auto m = make(c, 3, TimeFunction::constant(0.0), TimeFunction::constant(0.0));
    for (int i = 1; i < 12; ++i) EXPECT_EQ(chi_i(m, DSequence::geometric(1.5), i, 0.0), 0.0);
  }
}

TEST(ClosedForm, ArgumentChecks) {
  EXPECT_THROW(alpha_i(mm1(1, 4), DSequence::geometric(2), 0, 0.0), std::domain_error);
  EXPECT_THROW(chi_i(mm1(1, 4), DSequence::geometric(2), 1, -1.0), std::domain_error);
}

// Column sums of D B D^{-1} computed numerically are the oracle for the closed forms.
TEST(ClosedForm, MatchesBstarColumnSumsAllClasses) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> U(0.1, 5.0), T(0.0, 3.0);
  const std::size_t N = 60;
  for (auto c : kAllClasses)
    for (int rep = 0; rep < 10; ++rep) {
      const std::size_t S = 1 + rng() % 6;
      const double a = U(rng), b = U(rng);
      auto m = make(c, S, TimeFunction::sinusoid(a, a * 0.9), TimeFunction::cosinusoid(b + 1.0, b));
      if (c == QueueClass::BirthDeath && rep % 3 == 0)
        m.state_rules = StateRules{StateRule::from_table({1.0, 0.8, 0.5}), StateRule::min_servers()};
      const auto d = random_d(rng);
      const double t = T(rng);
      const auto bs = transform_Bstar(build_reduced(build_A(m, N, t)).B, d);
      for (std::size_t i = 1; i <= N - S; ++i) {
        double scale = 1.0;
        for (std::size_t r = 0; r < N; ++r) scale = std::max(scale, std::abs(bs(r, i - 1)));
        EXPECT_NEAR(alpha_i(m, d, i, t), -bs.column_sum(i - 1), 1e-10 * scale)
            << to_string(c) << " S=" << S << " i=" << i;
        double abs_sum = 0.0;
        for (std::size_t r = 0; r < N; ++r) abs_sum += r + 1 == i ? -bs(r, i - 1) : std::abs(bs(r, i - 1));
        EXPECT_NEAR(chi_i(m, d, i, t), abs_sum, 1e-10 * scale) << to_string(c) << " i=" << i;
      }
    }
}

TEST(ClosedFormRates, TabulationMatchesDirectEvaluation) {
  const auto m = case_i(50);
  const auto d = DSequence::paper_s100();
  const ClosedFormRates rates(m, d);
  EXPECT_TRUE(rates.tail_confirmed());
  for (double t : {0.0, 0.1, 0.37, 0.8})
    for (std::size_t i : {1u, 50u, 100u, 101u, 104u, 200u, 300u})
      EXPECT_NEAR(rates.alpha_i(i, t), alpha_i(m, d, i, t), 1e-9);
}

TEST(LogNorm, Examples) {
  Matrix M(2, 2);
  M(0, 0) = -3;
  M(0, 1) = 1;
  M(1, 0) = 2;
  M(1, 1) = -3;
  EXPECT_DOUBLE_EQ(log_norm(M), -1.0);
  EXPECT_DOUBLE_EQ(log_norm(Matrix(3, 3)), 0.0);
  EXPECT_DOUBLE_EQ(log_norm(Matrix::identity(3)), 1.0);
}

TEST(LogNorm, DefinitionLimit) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> G;
  Matrix M(5, 5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) M(i, j) = G(rng);
  const double h = 1e-7;
  double norm = 0.0;
  for (std::size_t j = 0; j < 5; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < 5; ++i) s += std::abs((i == j ? 1.0 : 0.0) + h * M(i, j));
    norm = std::max(norm, s);
  }
  EXPECT_NEAR((norm - 1.0) / h, log_norm(M), 1e-6);
}

TEST(PeriodicConstants, ForcingBoundCaseI) {
  EXPECT_NEAR(forcing_bound_F(case_i(50), DSequence::paper_s100()), 100.0, 1e-9);
  // class II forcing spreads lambda/(Sk) over k <= S with weights d_k
  auto m2 = make(QueueClass::BatchArrival, 100, TimeFunction::sinusoid(50, 50), TimeFunction::cosinusoid(3, 1));
  double expect = 0.0;
  const auto d = DSequence::paper_s100();
  for (int k = 1; k <= 100; ++k) {
    double tail = 0.0;
    for (int j = k; j <= 100; ++j) tail += 1.0 / (100.0 * j);
    expect += d(k) * tail;
  }
  EXPECT_NEAR(forcing_bound_F(m2, d), 100.0 * expect, 1e-9);
}

TEST(PeriodicConstants, Homogeneous) {
  const auto pc = periodic_constants(mm1(1.0, 4.0), DSequence::geometric(2.0));
  EXPECT_TRUE(pc.homogeneous);
  EXPECT_NEAR(pc.a, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(pc.R, 1.0);
}

// a and K for case (i) against a brute-force oracle: alpha(t) as the min of
// numerical B* column sums on a wide truncation, trapezoid over a fine grid.
TEST(PeriodicConstants, CaseIAgainstColumnSumOracle) {
  const auto m = case_i(50);
  const auto d = DSequence::paper_s100();
  const auto pc = periodic_constants(m, d);
  const std::size_t N = 400, n = 400;
  std::vector<double> alpha(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const auto bs = transform_Bstar(build_reduced(build_A(m, N, k / double(n))).B, d);
    double a = 1e300;
    for (std::size_t j = 0; j + 100 < N; ++j) a = std::min(a, -bs.column_sum(j));
    alpha[k] = a;
  }
  double a_int = 0.0;
  for (std::size_t k = 0; k < n; ++k) a_int += 0.5 * (alpha[k] + alpha[k + 1]) / n;
  EXPECT_NEAR(pc.a, a_int, 2e-3);
  // K >= a and K >= best window over the grid
  std::vector<double> cum(2 * n + 1, 0.0);
  for (std::size_t k = 0; k < 2 * n; ++k) cum[k + 1] = cum[k] + 0.5 * (alpha[k % n] + alpha[(k + 1) % n]) / n;
  double K = 0.0;
  for (std::size_t i = 0; i <= n; ++i)
    for (std::size_t j = i; j <= i + n; ++j) K = std::max(K, cum[j] - cum[i]);
  EXPECT_NEAR(pc.K, K, 5e-3);
  EXPECT_NEAR(pc.R, std::exp(pc.K), 1e-12);
}

TEST(DecayParameter, MM1MatchesEigenOracle) {
  const auto bound = decay_parameter_bound(mm1(1.0, 4.0), DSequence::geometric(2.0));
  ASSERT_TRUE(bound);
  EXPECT_NEAR(*bound, 1.0, 1e-12);
  // symmetrized birth-death generator, truncated at N = 200
  const int N = 200;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(N + 1, N + 1);
  for (int k = 0; k <= N; ++k) {
    if (k < N) Q(k, k) -= 1.0;
    if (k > 0) Q(k, k) -= 4.0;
    if (k < N) Q(k, k + 1) = Q(k + 1, k) = std::sqrt(1.0 * 4.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
  const auto ev = es.eigenvalues();  // ascending
  const double gap = -ev(N - 1);
  EXPECT_GE(gap, *bound - 1e-3);
  EXPECT_LT(gap, *bound + 0.01);
}

TEST(DecayParameter, NoCertificateWhenAlphaNonPositive) {
  EXPECT_FALSE(decay_parameter_bound(mm1(4.0, 1.0), DSequence::geometric(1.0)));
  const auto small = decay_parameter_bound(mm1(0.0, 1.0), DSequence({1.0, 1.001, 1.002}, 1.001));
  ASSERT_TRUE(small);
  EXPECT_LT(*small, 0.01);
}

TEST(BoundCurves, EqualAtStartAndExponentialHomogeneous) {
  const ClosedFormRates rates(mm1(1.0, 4.0), DSequence::geometric(2.0));
  const auto curves = BoundCurves::from_rates(rates);
  EXPECT_DOUBLE_EQ(curves.upper_1D(2.0, 2.0, 3.5), 3.5);
  EXPECT_DOUBLE_EQ(curves.lower_1D_chi(2.0, 2.0, 3.5), 3.5);
  EXPECT_NEAR(curves.total_variation_upper(0.0, 1.5, 2.0), 4.0 * std::exp(-1.5) * 2.0, 1e-14);
  EXPECT_NEAR(curves.lower_1D_chi(0.0, 1.0, 1.0), std::exp(-9.0), 1e-16);
  EXPECT_NEAR(curves.lower_1D_beta(0.0, 1.0, 1.0, true), std::exp(-3.0), 1e-16);
  EXPECT_THROW(curves.lower_1D_beta(0.0, 1.0, 1.0, false), PreconditionError);
}

TEST(BoundCurves, PeriodicIntegralUsesWholePeriods) {
  const ClosedFormRates rates(case_i(10), DSequence::paper_s100());
  const auto curves = BoundCurves::from_rates(rates);
  const double one = curves.alpha_integral(0.0, 1.0);
  EXPECT_NEAR(curves.alpha_integral(0.0, 3.0), 3.0 * one, 1e-9);
  EXPECT_NEAR(curves.alpha_integral(0.3, 1.3), one, 1e-8);
  const auto direct = adaptive_simpson([&](double t) { return rates.alpha(t); }, 0.2, 2.7, 1e-10);
  EXPECT_NEAR(curves.alpha_integral(0.2, 2.7), direct.value, 1e-8);
}

TEST(BoundCurves, LimitDistanceForm) {
  PeriodicConstants pc;
  pc.a = 1.7;
  pc.R = 2.0;
  pc.F = 100.0;
  EXPECT_NEAR(BoundCurves::limit_distance(pc, 1.0), 800.0 / 1.7 * std::exp(-1.7), 1e-10);
  EXPECT_NEAR(BoundCurves::limit_mean_distance(pc, 1.0, 0.0), 200.0 / 1.7, 1e-10);
}

TEST(SignCondition, TailSums) {
  const std::vector<double> e0{1, 0, 0}, e2{0, 0, 1}, mid{0, 1, 0};
  EXPECT_TRUE(sign_condition(e2, e0));
  EXPECT_FALSE(sign_condition(e0, e2));
  EXPECT_TRUE(sign_condition(e2, mid));
}

TEST(ComputeBounds, MM1StronglyErgodic) {
  const auto rep = compute_bounds(mm1(1.0, 4.0), DSequence::geometric(2.0));
  EXPECT_EQ(rep.verdict, ErgodicityVerdict::StronglyErgodic);
  ASSERT_TRUE(rep.decay_lower_bound);
  EXPECT_NEAR(*rep.decay_lower_bound, 1.0, 1e-12);
  ASSERT_TRUE(rep.norms);
  EXPECT_DOUBLE_EQ(rep.norms->W, 1.0);
}

TEST(ComputeBounds, AllOnesDInconclusive) {
  auto m = make(QueueClass::BirthDeath, 3, TimeFunction::constant(1.0), TimeFunction::constant(2.0));
  const auto rep = compute_bounds(m, DSequence::geometric(1.0));
  EXPECT_EQ(rep.verdict, ErgodicityVerdict::Inconclusive);
  EXPECT_NEAR(rep.tail_alpha_min, 0.0, 1e-12);
}

TEST(ComputeBounds, PositivityFailureSerializesWitness) {
  BoundsReport rep;
  rep.positivity = {false, -0.5, 3, 2};
  rep.positivity_witness_time = 0.25;
  const auto j = to_json(rep);
  EXPECT_EQ(j["verdict"], "inconclusive");
  EXPECT_FALSE(j["positivity"]["ok"].get<bool>());
  EXPECT_EQ(j["positivity"]["witness_row"], 3);
  EXPECT_EQ(j["positivity"]["witness_col"], 2);
}

TEST(ComputeBounds, FastGrowingDStillPositive) {
  const auto rep = compute_bounds(mm1(5.0, 1.0), DSequence::geometric(10.0));
  EXPECT_TRUE(rep.positivity_ok);
  EXPECT_EQ(rep.verdict, ErgodicityVerdict::Inconclusive);  // alpha < 0
}

TEST(ComputeBounds, CaseIPeriodicCertified) {
  const auto rep = compute_bounds(case_i(10), DSequence::paper_s100());
  EXPECT_TRUE(rep.positivity_ok);
  ASSERT_TRUE(rep.periodic);
  EXPECT_GT(rep.periodic->a, 0.0);
  EXPECT_EQ(rep.verdict, ErgodicityVerdict::WeaklyErgodic);
  EXPECT_NEAR(rep.periodic->F, 20.0, 1e-9);
  ASSERT_FALSE(rep.curves.empty());
  EXPECT_TRUE(rep.curves.back().limit_distance.has_value());
}

TEST(ComputeBounds, NonPeriodicIsHorizonLimited) {
  auto m = make(QueueClass::BirthDeath, 2, TimeFunction::compose(TimeFunction::sinusoid(1, 1), 1.0, 0.5),
                TimeFunction::constant(3.0));
  const auto rep = compute_bounds(m, DSequence::geometric(1.2));
  EXPECT_TRUE(rep.horizon_limited);
  EXPECT_EQ(rep.verdict, ErgodicityVerdict::Inconclusive);
}
