#pragma once

// Exact permanents and permanental-minor sums of small non-negative integer
// matrices, and the brute-force ensemble average over all permutation tuples.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <mutex>
#include <numeric>
#include <thread>
#include <vector>

#include "permex/core_model.hpp"
#include "permex/errors.hpp"
#include "permex/numeric.hpp"

namespace permex {

struct PermanentLimits {
  int max_dp_dimension = 24;
  int max_bruteforce_dimension = 8;
  std::uint64_t tuple_budget = kDefaultTupleBudget;
};

/// perm_0 .. perm_n of one matrix; index m holds the sum of the permanents
/// of all m x m submatrices.
struct SubpermanentVector {
  int n = 0;
  std::vector<BigInt> values;

  const BigInt& operator[](int m) const { return values.at(m); }
};

/// Exact expectation plus diagnostics. `terms` counts summands evaluated
/// (tuples for the oracle, colour profiles for the closed formulas).
struct ExactMoment {
  Rational value;
  std::uint64_t terms = 0;
  int n = 0;
  int r = 0;
  int m = 0;
  int m2 = 0;
};

namespace detail {

inline void check_square_nonneg(const SquareMatrix& a) {
  if (!a.nonnegative()) throw invalid_input("matrix entries must be non-negative");
}

/// max_m C(n,m)^2 m! w^m, an upper bound on every partial sum of the
/// subset DP when all entries are <= w.
inline BigInt profile_bound(int n, int max_entry) {
  BigInt best = 1;
  BigInt binom = 1;  // C(n, m)
  BigInt fact = 1;
  BigInt wpow = 1;
  for (int m = 1; m <= n; ++m) {
    binom = binom * (n - m + 1) / m;
    fact *= m;
    wpow *= max_entry;
    BigInt v = binom * binom * fact * wpow;
    if (v > best) best = v;
  }
  return best;
}

inline BigInt pow2(unsigned k) {
  BigInt p = 1;
  p <<= k;
  return p;
}

// Column-by-column DP over the set S of rows already matched. Processing S
// in decreasing order lets the column update run in place: every write goes
// to a superset, which has already been read for this column.
template <class Acc>
std::vector<Acc> subset_dp(const SquareMatrix& a) {
  const int n = a.n();
  const std::uint32_t full = 1u << n;
  std::vector<Acc> dp(full, Acc(0));
  dp[0] = Acc(1);
  std::vector<std::pair<int, int>> nz;
  for (int j = 0; j < n; ++j) {
    nz.clear();
    for (int i = 0; i < n; ++i)
      if (a.at(i, j) != 0) nz.emplace_back(i, a.at(i, j));
    if (nz.empty()) continue;
    for (std::uint32_t s = full; s-- > 0;) {
      if (std::popcount(s) > j) continue;
      const Acc cur = dp[s];
      if (cur == Acc(0)) continue;
      for (auto [i, w] : nz) {
        const std::uint32_t bit = 1u << i;
        if (s & bit) continue;
        dp[s | bit] += cur * Acc(static_cast<unsigned>(w));
      }
    }
  }
  std::vector<Acc> out(n + 1, Acc(0));
  for (std::uint32_t s = 0; s < full; ++s) out[std::popcount(s)] += dp[s];
  return out;
}

template <class Acc>
SubpermanentVector to_vector(int n, const std::vector<Acc>& v) {
  SubpermanentVector out{n, {}};
  out.values.reserve(v.size());
  for (const auto& x : v) out.values.push_back(to_big(x));
  return out;
}

}  // namespace detail

/// Fixed-width fast path: true when the subset DP for `a` provably fits in
/// 64 bits.
inline bool profile_fits_u64(const SquareMatrix& a) {
  return detail::profile_bound(a.n(), a.max_entry()) < detail::pow2(63);
}

/// perm_m for m = 0..n computed in one subset-DP pass. O(n 2^n * nnz/col).
inline SubpermanentVector subpermanent_profile(const SquareMatrix& a,
                                               const PermanentLimits& lim = {}) {
  detail::check_square_nonneg(a);
  const int n = a.n();
  if (n > lim.max_dp_dimension || n > 30)
    throw capacity_error("subpermanent_profile: dimension " + std::to_string(n) +
                         " above limit " + std::to_string(lim.max_dp_dimension));
  if (n == 0) return {0, {BigInt(1)}};
  const BigInt bound = detail::profile_bound(n, a.max_entry());
  if (bound < detail::pow2(63)) return detail::to_vector(n, detail::subset_dp<std::uint64_t>(a));
  if (bound < detail::pow2(127)) return detail::to_vector(n, detail::subset_dp<u128>(a));
  return detail::to_vector(n, detail::subset_dp<BigInt>(a));
}

/// Fixed-width profile for hot loops; caller guarantees profile_fits_u64.
inline std::vector<std::uint64_t> subpermanent_profile_u64(const SquareMatrix& a) {
  return detail::subset_dp<std::uint64_t>(a);
}

/// Ryser's inclusion-exclusion formula with Gray-code column updates.
inline BigInt permanent(const SquareMatrix& a, const PermanentLimits& lim = {}) {
  detail::check_square_nonneg(a);
  const int n = a.n();
  if (n > lim.max_dp_dimension || n > 30)
    throw capacity_error("permanent: dimension " + std::to_string(n) + " above limit " +
                         std::to_string(lim.max_dp_dimension));
  if (n == 0) return 1;

  BigInt row_prod = 1;
  for (int i = 0; i < n; ++i) row_prod *= a.row_sum(i);
  if (row_prod == 0) return 0;
  // Every Ryser product is bounded by the product of row sums; 2^n of them.
  if (row_prod * detail::pow2(n) >= detail::pow2(126))
    return subpermanent_profile(a, lim)[n];

  std::vector<i128> rowsum(n, 0);
  i128 total = 0;
  const std::uint64_t count = 1ULL << n;
  std::uint64_t gray_prev = 0;
  for (std::uint64_t k = 1; k < count; ++k) {
    const std::uint64_t gray = k ^ (k >> 1);
    const std::uint64_t diff = gray ^ gray_prev;
    const int j = std::countr_zero(diff);
    const int sign = (gray & diff) ? 1 : -1;
    for (int i = 0; i < n; ++i) rowsum[i] += sign * a.at(i, j);
    gray_prev = gray;
    i128 prod = 1;
    for (int i = 0; i < n && prod != 0; ++i) prod *= rowsum[i];
    const bool odd = (std::popcount(gray) & 1) != 0;
    total += odd ? -prod : prod;
  }
  if (n & 1) total = -total;
  return to_big(total);
}

/// Independent oracle: enumerate every m-subset of rows and columns and
/// expand each minor's permanent over all m! bijections.
inline BigInt subpermanent_bruteforce(const SquareMatrix& a, int m,
                                      const PermanentLimits& lim = {}) {
  detail::check_square_nonneg(a);
  const int n = a.n();
  if (n > lim.max_bruteforce_dimension)
    throw capacity_error("subpermanent_bruteforce: dimension " + std::to_string(n) +
                         " above limit " + std::to_string(lim.max_bruteforce_dimension));
  if (m < 0 || m > n) throw invalid_input("subpermanent_bruteforce: need 0 <= m <= n");
  if (m == 0) return 1;

  std::vector<std::vector<int>> subsets;
  std::vector<int> pick(n, 0);
  std::fill(pick.end() - m, pick.end(), 1);
  do {
    std::vector<int> s;
    for (int i = 0; i < n; ++i)
      if (pick[i]) s.push_back(i);
    subsets.push_back(std::move(s));
  } while (std::next_permutation(pick.begin(), pick.end()));

  BigInt total = 0;
  std::vector<int> sigma(m);
  for (const auto& rows : subsets) {
    for (const auto& cols : subsets) {
      std::iota(sigma.begin(), sigma.end(), 0);
      do {
        BigInt prod = 1;
        for (int t = 0; t < m && prod != 0; ++t) prod *= a.at(rows[t], cols[sigma[t]]);
        total += prod;
      } while (std::next_permutation(sigma.begin(), sigma.end()));
    }
  }
  return total;
}

/// Σ over all (n!)^r tuples of perm_m(A) * perm_m'(A), for every (m, m').
/// Entry [m][m'] of the result; the caller divides by (n!)^r.
inline std::vector<std::vector<BigInt>> ensemble_moment_sums(int n, int r, unsigned threads = 1,
                                                             const PermanentLimits& lim = {}) {
  check_tuple_budget(n, r, lim.tuple_budget);
  if (n > lim.max_dp_dimension)
    throw capacity_error("ensemble oracle: dimension above permanent limit");
  const BigInt bound = detail::profile_bound(n, r);
  const BigInt tuples = tuple_count(n, r);
  // Per-worker u128 accumulators are safe when bound^2 * tuples fits;
  // otherwise fall back to big-integer accumulation.
  const bool narrow = bound < detail::pow2(63) && bound * bound * tuples < detail::pow2(127);

  threads = std::max(1u, threads);
  std::vector<std::vector<BigInt>> sums(n + 1, std::vector<BigInt>(n + 1, 0));
  std::mutex merge;
  const auto idx = [n](int i, int k) { return static_cast<std::size_t>(i) * (n + 1) + k; };

  auto worker = [&](unsigned w) {
    std::vector<u128> acc(narrow ? idx(n, n) + 1 : 0, 0);
    std::vector<BigInt> wide(narrow ? 0 : idx(n, n) + 1, BigInt(0));
    enumerate_tuples(
        n, r,
        [&](std::span<const Permutation> perms) {
          const SquareMatrix a = assemble_matrix(perms);
          if (narrow) {
            const auto prof = subpermanent_profile_u64(a);
            for (int i = 0; i <= n; ++i)
              for (int k = i; k <= n; ++k) acc[idx(i, k)] += static_cast<u128>(prof[i]) * prof[k];
          } else {
            const auto prof = subpermanent_profile(a, lim);
            for (int i = 0; i <= n; ++i)
              for (int k = i; k <= n; ++k) wide[idx(i, k)] += prof[i] * prof[k];
          }
        },
        lim.tuple_budget, [&](std::uint64_t rank) { return rank % threads == w; });
    std::lock_guard lock(merge);
    for (int i = 0; i <= n; ++i)
      for (int k = i; k <= n; ++k) {
        sums[i][k] += narrow ? to_big(acc[idx(i, k)]) : wide[idx(i, k)];
        if (k != i) sums[k][i] = sums[i][k];
      }
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
  }
  return sums;
}

/// E(perm_m · perm_m') by exhaustive enumeration of all permutation tuples.
/// m' = 0 gives E(perm_m).
inline ExactMoment ensemble_average_bruteforce(int n, int r, int m, int m2, unsigned threads = 1,
                                               const PermanentLimits& lim = {}) {
  if (m < 0 || m > n || m2 < 0 || m2 > n)
    throw invalid_input("ensemble_average_bruteforce: need 0 <= m, m' <= n");
  const auto sums = ensemble_moment_sums(n, r, threads, lim);
  ExactMoment out;
  out.value = Rational(sums[m][m2], tuple_count(n, r));
  out.terms = tuple_count(n, r).convert_to<std::uint64_t>();
  out.n = n;
  out.r = r;
  out.m = m;
  out.m2 = m2;
  return out;
}

}  // namespace permex
