#include <gtest/gtest.h>

#include <random>

#include "ergobound/dsequence.hpp"

using namespace ergobound;

TEST(DSequence, PaperPresetValues) {
  const auto d = DSequence::preset("paper-S100");
  EXPECT_DOUBLE_EQ(d(1), 1.0);
  EXPECT_DOUBLE_EQ(d(50), 1.0);
  EXPECT_DOUBLE_EQ(d(100), 1.0);
  EXPECT_DOUBLE_EQ(d(101), 1.05);
  EXPECT_NEAR(d(105), 4.8048, 1e-12);
  EXPECT_NEAR(d(107), 25.417392, 1e-9);
}

TEST(DSequence, Validation) {
  EXPECT_THROW(DSequence({2.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(DSequence({1.0, 0.5}, 1.0), std::invalid_argument);
  EXPECT_THROW(DSequence({1.0}, 0.9), std::invalid_argument);
  EXPECT_THROW(DSequence({}, 1.0), std::invalid_argument);
  EXPECT_THROW(DSequence::preset("nope"), std::invalid_argument);
  EXPECT_THROW(DSequence::geometric(2.0)(0), std::domain_error);
}

TEST(DSequence, RatioMatchesQuotient) {
  const auto d = DSequence::paper_s100();
  for (std::size_t i = 1; i < 130; ++i)
    for (std::size_t j : {1u, 99u, 103u, 120u})
      EXPECT_NEAR(d.ratio(i, j), d(i) / d(j), 1e-12 * d(i) / d(j));
  EXPECT_DOUBLE_EQ(d.ratio(0, 5), 0.0);
  EXPECT_TRUE(std::isfinite(d.ratio(5000, 4999)));
  EXPECT_NEAR(d.ratio(5000, 4999), 2.3, 1e-12);
}

TEST(DSequence, JsonRoundTrip) {
  const DSequence d({1.0, 1.5, 2.0}, 1.25);
  EXPECT_EQ(DSequence::from_json(d.to_json()), d);
  EXPECT_EQ(DSequence::from_json("paper-S100"), DSequence::paper_s100());
  nlohmann::json bad = {{"head", {1.0}}, {"tail_ratio", 2.0}, {"x", 1}};
  EXPECT_THROW(DSequence::from_json(bad), std::invalid_argument);
}

TEST(ComputeW, PaperPreset) {
  const auto nc = compute_W(DSequence::paper_s100());
  EXPECT_DOUBLE_EQ(nc.W, 0.01);
  EXPECT_EQ(nc.W_index, 100u);
  EXPECT_DOUBLE_EQ(nc.W_star, 1.0);
  EXPECT_EQ(nc.W_star_index, 1u);
}

TEST(ComputeW, Geometric2) {
  const auto nc = compute_W(DSequence::geometric(2.0));
  EXPECT_DOUBLE_EQ(nc.W, 1.0);
  EXPECT_EQ(nc.W_index, 1u);
}

TEST(ComputeW, BruteForceOracle) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(1.0, 1.6);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<double> head{1.0};
    for (int i = 1; i < 1 + rep % 12; ++i) head.push_back(head.back() * U(rng));
    const DSequence d(head, 1.05 + 0.05 * (rep % 7));
    double W = 1e300, Ws = 1e300, run = 0.0;
    for (int i = 1; i <= 3000; ++i) {
      run += d(i);
      W = std::min(W, d(i) / i);
      Ws = std::min(Ws, run / i);
    }
    const auto nc = compute_W(d);
    EXPECT_NEAR(nc.W, W, 1e-12 * W);
    EXPECT_NEAR(nc.W_star, Ws, 1e-12 * Ws);
  }
}

TEST(ComputeW, RatioOneRejected) {
  EXPECT_THROW(compute_W(DSequence::geometric(1.0)), std::invalid_argument);
}

TEST(Norms, Examples) {
  const auto d = DSequence::geometric(2.0);
  const std::vector<double> e1{1.0};
  const std::vector<double> e2{0.0, 1.0};
  const std::vector<double> half{0.5, -0.5, 0.0};
  EXPECT_DOUBLE_EQ(norm_1D(e1, d), 1.0);
  EXPECT_DOUBLE_EQ(norm_1D(e2, d), 3.0);
  EXPECT_DOUBLE_EQ(norm_1D(half, d), 1.0);
  EXPECT_DOUBLE_EQ(norm_1E(e1), 1.0);
  const std::vector<double> e5{0, 0, 0, 0, 1};
  EXPECT_DOUBLE_EQ(norm_1E(e5), 5.0);
  const std::vector<double> z{0.1, 0.2, 0.3};
  EXPECT_NEAR(norm_1E(z), 1.4, 1e-15);
}

TEST(Norms, InequalitiesOnRandomVectors) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> G(0.0, 1.0);
  for (const auto& d : {DSequence::paper_s100(), DSequence::geometric(2.0), DSequence({1.0, 1.2, 1.5}, 1.3)}) {
    const double W = compute_W(d).W;
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> z(1 + rep % 150);
      for (double& v : z) v = G(rng);
      const double n1d = norm_1D(z, d);
      EXPECT_LE(norm_1(z), 2.0 * n1d * (1 + 1e-12));
      EXPECT_LE(norm_1E(z), 2.0 / W * n1d * (1 + 1e-12));
    }
  }
}
