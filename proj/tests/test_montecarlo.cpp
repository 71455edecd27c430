#include <gtest/gtest.h>

#include <cmath>

#include "permex/asymptotics.hpp"
#include "permex/montecarlo.hpp"
#include "permex/permanent.hpp"

using namespace permex;

TEST(EstimateMoments, LinearTermIsConstant) {
  // perm_1 is the entry total n r, so every matrix gives 4 * 4
  for (bool enumerate : {true, false}) {
    MonteCarloOptions opt;
    opt.allow_enumeration = enumerate;
    const auto est = estimate_moments(EnsembleSpec(2, 2, 5), 1, 1, 100, opt);
    EXPECT_EQ(est.product.enumerated, enumerate);
    EXPECT_EQ(est.product.exact_mean, Rational(16));
    EXPECT_EQ(est.product.stderr_, 0);
    EXPECT_EQ(est.first.exact_mean, Rational(4));
  }
}

TEST(EstimateMoments, EnumerationCountsPopulation) {
  const auto est = estimate_moments(EnsembleSpec(2, 2, 0), 2, 2, 100);
  EXPECT_TRUE(est.product.enumerated);
  EXPECT_EQ(est.product.samples, 4u);
  EXPECT_EQ(est.product.exact_mean, Rational(10));
}

TEST(EstimateMoments, SampledWithinErrorBars) {
  MonteCarloOptions opt;
  opt.allow_enumeration = false;
  const auto est = estimate_moments(EnsembleSpec(2, 2, 17), 2, 2, 4000, opt);
  EXPECT_FALSE(est.product.enumerated);
  EXPECT_GT(est.product.stderr_, 0);
  EXPECT_LT(std::abs(est.product.mean - 10), 3 * est.product.stderr_);
}

TEST(EstimateMoments, RejectsBadArguments) {
  EXPECT_THROW(estimate_moments(EnsembleSpec(3, 2, 0), 1, 1, 1), invalid_input);
  EXPECT_THROW(estimate_moments(EnsembleSpec(3, 2, 0), 4, 1, 10), invalid_input);
  MonteCarloOptions opt;
  opt.limits.max_dp_dimension = 4;
  EXPECT_THROW(estimate_moments(EnsembleSpec(5, 2, 0), 1, 1, 10, opt), capacity_error);
}

TEST(EstimateMoments, EnumerationMatchesOracle) {
  for (int n = 1; n <= 4; ++n)
    for (int r = 1; r <= 2; ++r)
      for (int m = 0; m <= n; ++m)
        for (int m2 = m; m2 <= n; ++m2) {
          const auto est = estimate_moments(EnsembleSpec(n, r, 0), m, m2, 1u << 20);
          ASSERT_TRUE(est.product.enumerated);
          EXPECT_EQ(est.product.exact_mean, ensemble_average_bruteforce(n, r, m, m2).value)
              << n << " " << r << " " << m << " " << m2;
        }
}

TEST(EstimateMoments, JensenGap) {
  MonteCarloOptions opt;
  opt.allow_enumeration = false;
  const auto est = estimate_moments(EnsembleSpec(6, 3, 2), 3, 4, 500, opt);
  for (const auto* e : {&est.first, &est.second, &est.product})
    EXPECT_GE(e->log_mean_over_n, e->mean_log_over_n);
}

TEST(EstimateMoments, ThreadCountDoesNotChangeResult) {
  for (bool enumerate : {true, false}) {
    MonteCarloOptions one, four;
    one.allow_enumeration = four.allow_enumeration = enumerate;
    four.threads = 4;
    const EnsembleSpec spec(4, 2, 123);
    const auto a = estimate_moments(spec, 2, 3, 1000, one);
    const auto b = estimate_moments(spec, 2, 3, 1000, four);
    EXPECT_EQ(a.product.exact_mean, b.product.exact_mean);
    EXPECT_EQ(a.product.stderr_, b.product.stderr_);
    EXPECT_EQ(a.first.exact_mean, b.first.exact_mean);
  }
}

TEST(EstimateMoments, SeedsDiffer) {
  MonteCarloOptions opt;
  opt.allow_enumeration = false;
  const auto a = estimate_moments(EnsembleSpec(6, 2, 1), 3, 3, 200, opt);
  const auto b = estimate_moments(EnsembleSpec(6, 2, 2), 3, 3, 200, opt);
  const auto c = estimate_moments(EnsembleSpec(6, 2, 1), 3, 3, 200, opt);
  EXPECT_NE(a.product.exact_mean, b.product.exact_mean);
  EXPECT_EQ(a.product.exact_mean, c.product.exact_mean);
}

TEST(ConvergenceScan, RowsAndPrediction) {
  const auto rows = convergence_scan(2, 0.5, 0.5, {4, 6}, 200, 3);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].m, 2);
  EXPECT_EQ(rows[1].m2, 3);
  for (const auto& row : rows) {
    EXPECT_NEAR(row.prediction, 2 * single_rate(0.5, 2), 1e-14);
    EXPECT_NEAR(row.gap, row.prediction - row.product.log_mean_over_n, 1e-15);
  }
}

TEST(ConvergenceScan, EmptySecondMinorIsSingleRate) {
  const auto rows = convergence_scan(3, 0.4, 0.0, {5}, 100, 1);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].m2, 0);
  EXPECT_NEAR(rows[0].prediction, single_rate(0.4, 3), 1e-14);
  EXPECT_THROW(convergence_scan(2, 1.5, 0.5, {4}, 10, 0), domain_error);
}
