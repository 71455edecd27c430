#include <gtest/gtest.h>

#include "permex/permanent.hpp"

using namespace permex;

namespace {

SquareMatrix random_matrix(int n, int max_entry, StreamRng& rng) {
  SquareMatrix a(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a.at(i, j) = static_cast<int>(rng.bounded(max_entry + 1));
  return a;
}

}  // namespace

TEST(Permanent, Examples) {
  EXPECT_EQ(permanent(SquareMatrix::identity(3)), 1);
  EXPECT_EQ(permanent(SquareMatrix::constant(3, 1)), 6);
  EXPECT_EQ(permanent(SquareMatrix{{2, 0}, {0, 2}}), 4);
  EXPECT_EQ(permanent(SquareMatrix::constant(6, 1)), 720);
  EXPECT_EQ(permanent(SquareMatrix(0)), 1);
}

TEST(Permanent, CapacityLimit) {
  EXPECT_THROW(permanent(SquareMatrix::identity(25)), capacity_error);
  PermanentLimits lim;
  lim.max_dp_dimension = 4;
  EXPECT_THROW(permanent(SquareMatrix::identity(5), lim), capacity_error);
  EXPECT_THROW(permanent(SquareMatrix{{-1, 0}, {0, 1}}), invalid_input);
}

TEST(SubpermanentProfile, Examples) {
  const auto ones = subpermanent_profile(SquareMatrix::constant(2, 1));
  EXPECT_EQ(ones.values, (std::vector<BigInt>{1, 4, 2}));
  const auto diag = subpermanent_profile(SquareMatrix{{2, 0}, {0, 2}});
  EXPECT_EQ(diag.values, (std::vector<BigInt>{1, 4, 4}));
}

TEST(SubpermanentBruteforce, Examples) {
  EXPECT_EQ(subpermanent_bruteforce(SquareMatrix::constant(3, 1), 2), 18);
  EXPECT_EQ(subpermanent_bruteforce(SquareMatrix::identity(3), 2), 3);
  EXPECT_EQ(subpermanent_bruteforce(SquareMatrix{{3, 1}, {4, 1}}, 0), 1);
  EXPECT_THROW(subpermanent_bruteforce(SquareMatrix::identity(9), 2), capacity_error);
  EXPECT_THROW(subpermanent_bruteforce(SquareMatrix::identity(3), 4), invalid_input);
}

TEST(SubpermanentProfile, MatchesBruteforceOnRandomMatrices) {
  StreamRng rng(31337, 0);
  for (int trial = 0; trial < 240; ++trial) {
    const int n = 1 + static_cast<int>(rng.bounded(6));
    const auto a = random_matrix(n, 3, rng);
    const auto prof = subpermanent_profile(a);
    ASSERT_EQ(prof.values.size(), static_cast<std::size_t>(n + 1));
    EXPECT_EQ(prof[0], 1);
    EXPECT_EQ(prof[1], a.total());
    for (int m = 0; m <= n; ++m) EXPECT_EQ(prof[m], subpermanent_bruteforce(a, m)) << "m=" << m;
  }
}

TEST(SubpermanentProfile, TopEntryIsRyserPermanent) {
  StreamRng rng(5, 5);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + static_cast<int>(rng.bounded(11));
    const auto a = random_matrix(n, 4, rng);
    EXPECT_EQ(subpermanent_profile(a)[n], permanent(a));
  }
}

TEST(SubpermanentProfile, WideAccumulatorPath) {
  // entries near 10^6 push the DP bound past 128 bits
  StreamRng rng(77, 0);
  const auto a = random_matrix(7, 1'000'000, rng);
  const auto prof = subpermanent_profile(a);
  for (int m : {0, 1, 3, 7}) EXPECT_EQ(prof[m], subpermanent_bruteforce(a, m));
  EXPECT_EQ(prof[7], permanent(a));
}

TEST(SubpermanentProfile, EnsembleProperties) {
  for (int r : {1, 2, 4}) {
    const EnsembleSpec spec(7, r, 3);
    for (std::uint64_t k = 0; k < 20; ++k) {
      const auto prof = subpermanent_profile(sample_matrix(spec, k));
      EXPECT_EQ(prof[1], r * spec.n);
      BigInt binom = 1, fact = 1, rpow = 1;
      for (int m = 1; m <= spec.n; ++m) {
        binom = binom * (spec.n - m + 1) / m;
        fact *= m;
        rpow *= r;
        EXPECT_LE(prof[m], binom * binom * fact * rpow);
        EXPECT_GT(prof[m], 0);
      }
    }
  }
}

TEST(EnsembleAverage, Examples) {
  // perm_2 over the four (identity|swap)^2 tuples is 4, 2, 2, 4.
  EXPECT_EQ(ensemble_average_bruteforce(2, 2, 2, 0).value, Rational(3));
  EXPECT_EQ(ensemble_average_bruteforce(2, 2, 2, 2).value, Rational(10));
  EXPECT_EQ(ensemble_average_bruteforce(2, 2, 1, 1).value, Rational(16));
  EXPECT_EQ(ensemble_average_bruteforce(2, 2, 1, 1).terms, 4u);
}

TEST(EnsembleAverage, ThreadCountDoesNotChangeResult) {
  const auto one = ensemble_moment_sums(4, 2, 1);
  const auto three = ensemble_moment_sums(4, 2, 3);
  EXPECT_EQ(one, three);
  for (int i = 0; i <= 4; ++i)
    for (int k = 0; k <= 4; ++k) EXPECT_EQ(one[i][k], one[k][i]);
}

TEST(EnsembleAverage, Errors) {
  EXPECT_THROW(ensemble_average_bruteforce(3, 2, 4, 0), invalid_input);
  EXPECT_THROW(ensemble_average_bruteforce(7, 3, 1, 1), capacity_error);
}
