#include <gtest/gtest.h>

#include <functional>
#include <set>

#include "permex/exact_moments.hpp"

using namespace permex;

namespace {

// Key for set comparisons: all primary counts flattened.
std::vector<int> flatten(const ColorProfile& p) {
  std::vector<int> v;
  v.insert(v.end(), p.m_count.begin(), p.m_count.end());
  v.insert(v.end(), p.disjoint.begin(), p.disjoint.end());
  v.insert(v.end(), p.coincide.begin(), p.coincide.end());
  for (const LinkMatrix* x : {&p.row_link, &p.col_link, &p.inner_row, &p.inner_col})
    for (int i = 0; i < p.colors; ++i)
      for (int k = 0; k < p.colors; ++k)
        if (i != k) v.push_back((*x)(i, k));
  return v;
}

// Test-side oracle: every primary-variable assignment in a box, kept when
// the validator accepts it. Independent of the nested bounds in the walker.
std::set<std::vector<int>> box_profiles(int n, int r, int m, int m2) {
  const int links = r * (r - 1);
  const int dims = 3 * r + 4 * links;
  std::set<std::vector<int>> out;
  std::vector<int> v(dims, 0);
  std::function<void(int)> rec = [&](int i) {
    if (i == dims) {
      ColorProfile p(r);
      int t = 0;
      for (int c = 0; c < r; ++c) p.m_count[c] = v[t++];
      for (int c = 0; c < r; ++c) p.disjoint[c] = v[t++];
      for (int c = 0; c < r; ++c) p.coincide[c] = v[t++];
      for (LinkMatrix* x : {&p.row_link, &p.col_link, &p.inner_row, &p.inner_col})
        for (int a = 0; a < r; ++a)
          for (int b = 0; b < r; ++b)
            if (a != b) (*x)(a, b) = v[t++];
      if (!profile_violation(p, n, m, m2)) out.insert(flatten(p));
      return;
    }
    const int hi = i < r ? m : m2;
    for (int x = 0; x <= hi; ++x) {
      v[i] = x;
      rec(i + 1);
    }
    v[i] = 0;
  };
  rec(0);
  return out;
}

ColorProfile zero_profile(int r) { return ColorProfile(r); }

}  // namespace

TEST(ExpectationPerm, Examples) {
  for (int n = 1; n <= 4; ++n)
    for (int r = 1; r <= 3; ++r) EXPECT_EQ(expectation_perm(n, r, 0).value, Rational(1));
  EXPECT_EQ(expectation_perm(3, 2, 1).value, Rational(6));
  EXPECT_EQ(expectation_perm(2, 2, 2).value, Rational(3));
  EXPECT_THROW(expectation_perm(2, 2, 3), invalid_input);
}

TEST(ExpectationPerm, FirstMomentIsRN) {
  for (int n = 1; n <= 7; ++n)
    for (int r = 1; r <= 4; ++r) EXPECT_EQ(expectation_perm(n, r, 1).value, Rational(r * n));
}

TEST(ProfileIterator, Examples) {
  EXPECT_EQ(profiles(2, 2, 0, 0).size(), 1u);
  EXPECT_EQ(profiles(2, 2, 0, 0).front(), zero_profile(2));

  const auto three = profiles(2, 2, 2, 0);
  ASSERT_EQ(three.size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(three[k].m_count, (std::vector<int>{k, 2 - k}));

  const auto single = profiles(1, 1, 1, 1);
  ASSERT_EQ(single.size(), 1u);
  ColorProfile want(1);
  want.m_count = {1};
  want.coincide = {1};
  EXPECT_EQ(single.front(), want);
}

TEST(ProfileIterator, EveryYieldIsValidAndUnique) {
  for (int n = 1; n <= 5; ++n)
    for (int r = 1; r <= 3; ++r)
      for (int m = 0; m <= n; ++m)
        for (int m2 = 0; m2 <= n; ++m2) {
          if (n == 5 && r == 3 && m + m2 > 6) continue;
          std::set<std::vector<int>> seen;
          MomentContext ctx(n, r, m, m2);
          for_each_profile(ctx, [&](const ColorProfile& p) {
            const auto bad = profile_violation(p, n, m, m2);
            ASSERT_FALSE(bad.has_value()) << *bad;
            EXPECT_TRUE(seen.insert(flatten(p)).second);
          });
        }
}

TEST(ProfileIterator, MatchesBoxEnumeration) {
  const int cases[][4] = {{2, 2, 1, 1}, {2, 2, 2, 1}, {2, 2, 1, 2}, {3, 1, 2, 2}, {4, 1, 3, 3},
                          {3, 2, 0, 2}, {3, 2, 1, 1}};
  for (const auto& c : cases) {
    std::set<std::vector<int>> walked;
    for (const auto& p : profiles(c[0], c[1], c[2], c[3])) walked.insert(flatten(p));
    EXPECT_EQ(walked, box_profiles(c[0], c[1], c[2], c[3]))
        << "n=" << c[0] << " r=" << c[1] << " m=" << c[2] << " m'=" << c[3];
  }
}

TEST(ProfileIterator, ValidatorCatchesViolations) {
  ColorProfile p(2);
  p.m_count = {1, 1};
  p.inner_row(0, 1) = 1;  // inner rows without matching inner columns
  EXPECT_TRUE(profile_violation(p, 3, 2, 1).has_value());
  p.inner_col(0, 1) = 1;
  EXPECT_FALSE(profile_violation(p, 3, 2, 1).has_value());
  p.coincide = {2, 0};
  EXPECT_TRUE(profile_violation(p, 3, 2, 3).has_value());
}

TEST(EvalM, Examples) {
  MomentContext ctx22(2, 2, 2, 0);
  ColorProfile p(2);
  p.m_count = {1, 1};
  EXPECT_EQ(eval_M(p, ctx22), Rational(1));
  p.m_count = {2, 0};
  EXPECT_EQ(eval_M(p, ctx22), Rational(1, 2));

  MomentContext ctx21(2, 1, 0, 0);
  EXPECT_EQ(eval_M(ColorProfile(1), ctx21), Rational(1, 2));
}

TEST(EvalA, Examples) {
  MomentContext ctx(3, 2, 1, 2);
  ColorProfile p(2);
  p.m_count = {1, 0};
  EXPECT_EQ(eval_A(p, ctx), 1);
  p.disjoint = {1, 0};
  EXPECT_EQ(eval_A(p, ctx), 4);
  p.disjoint = {1, 1};
  EXPECT_EQ(eval_A(p, ctx), 4);
}

TEST(EvalE, Examples) {
  MomentContext ctx(4, 2, 3, 2);
  ColorProfile p(2);
  p.m_count = {2, 1};
  EXPECT_EQ(eval_E(p, ctx), 1);
  p.coincide = {1, 0};
  EXPECT_EQ(eval_E(p, ctx), 2);
  p.coincide = {1, 1};
  EXPECT_EQ(eval_E(p, ctx), 2);
}

TEST(EvalB, Examples) {
  MomentContext ctx(3, 2, 1, 1);
  ColorProfile p(2);
  p.m_count = {0, 1};
  EXPECT_EQ(eval_B(p, ctx), 1);
  p.row_link(0, 1) = 1;  // colour 0, row of the colour-1 m-term element
  EXPECT_EQ(eval_B(p, ctx), 2);
}

TEST(EvalC, TransposeOfB) {
  MomentContext ctx(3, 2, 1, 1);
  ColorProfile p(2);
  p.m_count = {0, 1};
  EXPECT_EQ(eval_C(p, ctx), 1);
  p.col_link(0, 1) = 1;
  EXPECT_EQ(eval_C(p, ctx), 2);
}

TEST(EvalC, EqualsEvalBOfTransposedProfile) {
  MomentContext ctx(6, 3, 3, 3);
  std::vector<ColorProfile> pool;
  for_each_profile(ctx, [&](const ColorProfile& p) {
    if (p.row_link_total() + p.col_link_total() > 0) pool.push_back(p);
  });
  ASSERT_GT(pool.size(), 100u);
  StreamRng rng(4, 4);
  for (int k = 0; k < 100; ++k) {
    const auto& p = pool[rng.bounded(pool.size())];
    EXPECT_EQ(eval_C(p, ctx), eval_B(p.transposed(), ctx));
    EXPECT_EQ(term_numerator(p, ctx), term_numerator(p.transposed(), ctx));
  }
}

TEST(EvalD, Examples) {
  MomentContext ctx(4, 2, 2, 1);
  ColorProfile p(2);
  p.m_count = {1, 1};
  EXPECT_EQ(eval_D(p, ctx), 1);
  p.inner_row(0, 1) = 1;
  p.inner_col(0, 1) = 1;
  EXPECT_EQ(eval_D(p, ctx), 1);
  EXPECT_FALSE(profile_violation(p, 4, 2, 1).has_value());
}

TEST(EvalT, Examples) {
  MomentContext ctx(2, 2, 0, 0);
  EXPECT_EQ(eval_T(ColorProfile(2), ctx), 4);
  MomentContext full(2, 2, 2, 0);
  ColorProfile p(2);
  p.m_count = {2, 0};
  EXPECT_EQ(eval_T(p, full), 2);  // 0! * 2!
}

TEST(ExpectationProduct, Examples) {
  EXPECT_EQ(expectation_product(2, 2, 2, 0).value, Rational(3));
  EXPECT_EQ(expectation_product(2, 2, 1, 1).value, Rational(16));
  EXPECT_EQ(expectation_product(2, 2, 2, 2).value, Rational(10));
  EXPECT_THROW(expectation_product(2, 2, 3, 0), invalid_input);
  EXPECT_THROW(expectation_product(2, 2, 0, 3), invalid_input);
}

TEST(ExpectationProduct, ReducesToSinglePermanent) {
  for (int n = 1; n <= 6; ++n)
    for (int r = 1; r <= 3; ++r)
      for (int m = 0; m <= n; ++m)
        EXPECT_EQ(expectation_product(n, r, m, 0).value, expectation_perm(n, r, m).value);
}

TEST(ExpectationProduct, Symmetric) {
  for (int n = 1; n <= 5; ++n)
    for (int r = 1; r <= 3; ++r)
      for (int m = 0; m <= n; ++m)
        for (int m2 = m + 1; m2 <= n; ++m2)
          EXPECT_EQ(expectation_product(n, r, m, m2).value, expectation_product(n, r, m2, m).value);
}

TEST(ExpectationProduct, MatchesOracleOnSmallGrid) {
  for (int n = 1; n <= 3; ++n)
    for (int r = 1; r <= 3; ++r) {
      const auto sums = ensemble_moment_sums(n, r);
      for (int m = 0; m <= n; ++m)
        for (int m2 = 0; m2 <= n; ++m2)
          EXPECT_EQ(expectation_product(n, r, m, m2).value,
                    Rational(sums[m][m2], tuple_count(n, r)));
    }
}

TEST(ExpectationProduct, ThreadsAndBudget) {
  const auto one = expectation_product(7, 2, 3, 4, 1);
  const auto four = expectation_product(7, 2, 3, 4, 4);
  EXPECT_EQ(one.value, four.value);
  EXPECT_EQ(one.terms, four.terms);
  EXPECT_THROW(expectation_product(4, 2, 2, 2, 1, 5), capacity_error);
}

TEST(ArgmaxProfile, Trivial) {
  const auto best = argmax_profile(2, 2, 0, 0);
  EXPECT_EQ(best.profile, zero_profile(2));
  EXPECT_EQ(best.value, expectation_product(2, 2, 0, 0).value);
}

TEST(ArgmaxProfile, SymmetricInstanceN8) {
  const auto best = argmax_profile(8, 2, 4, 4);
  const auto& p = best.profile;
  EXPECT_LE(std::abs(p.m_count[0] - 2), 1);
  EXPECT_LE(std::abs(p.row_link_total() - p.col_link_total()), 2);
  // value is a summand, so bounded by the total
  EXPECT_LE(best.value, expectation_product(8, 2, 4, 4).value);
  EXPECT_EQ(best.value, term_value(p, MomentContext(8, 2, 4, 4)));
}
