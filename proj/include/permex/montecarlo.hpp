#pragma once

// Seeded sampling estimates of E(perm_m), E(perm_m') and E(perm_m perm_m').
// Sums and sums of squares are kept as exact integers; only the final
// mean, standard error and logarithms are rounded.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "permex/asymptotics.hpp"
#include "permex/core_model.hpp"
#include "permex/numeric.hpp"
#include "permex/permanent.hpp"

namespace permex {

struct MCEstimate {
  int n = 0, r = 0, m = 0, m2 = 0;
  std::uint64_t samples = 0;
  bool enumerated = false;     // population mean over all tuples
  Rational exact_mean;         // Σx / N
  double mean = 0;
  double stderr_ = 0;
  double log_mean_over_n = 0;  // (1/n) ln(mean)
  double mean_log_over_n = 0;  // (1/n) mean(ln x)
};

struct MomentEstimates {
  MCEstimate first;    // perm_m
  MCEstimate second;   // perm_m'
  MCEstimate product;  // perm_m * perm_m'
};

struct MonteCarloOptions {
  unsigned threads = 1;
  bool allow_enumeration = true;
  PermanentLimits limits{};
};

namespace detail {

struct ExactAccumulator {
  BigInt sum = 0;
  BigInt sum_sq = 0;
  double sum_log = 0;

  void add(const BigInt& x) {
    sum += x;
    sum_sq += x * x;
    sum_log += x > 0 ? log_big(x) : -std::numeric_limits<double>::infinity();
  }
  void merge(const ExactAccumulator& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    sum_log += o.sum_log;
  }

  MCEstimate finish(int n, int r, int m, int m2, std::uint64_t count, bool enumerated) const {
    MCEstimate est;
    est.n = n;
    est.r = r;
    est.m = m;
    est.m2 = m2;
    est.samples = count;
    est.enumerated = enumerated;
    const BigInt N = count;
    est.exact_mean = Rational(sum, N);
    est.mean = to_double(est.exact_mean);
    if (enumerated) {
      est.stderr_ = 0;
    } else {
      // (Σx² - (Σx)²/N) / (N (N - 1))
      const Rational var_of_mean = Rational(sum_sq * N - sum * sum, N * N * (N - 1));
      est.stderr_ = std::sqrt(std::max(0.0, to_double(var_of_mean)));
    }
    est.log_mean_over_n = sum > 0 ? log_rational(est.exact_mean) / n
                                  : -std::numeric_limits<double>::infinity();
    est.mean_log_over_n = sum_log / static_cast<double>(count) / n;
    return est;
  }
};

struct TripleAccumulator {
  ExactAccumulator first, second, product;

  void add(const SubpermanentVector& prof, int m, int m2) {
    first.add(prof[m]);
    second.add(prof[m2]);
    product.add(prof[m] * prof[m2]);
  }
  void merge(const TripleAccumulator& o) {
    first.merge(o.first);
    second.merge(o.second);
    product.merge(o.product);
  }
};

}  // namespace detail

/// Sample means and standard errors of perm_m, perm_m' and their product
/// over `samples` matrices; sample k uses RNG stream k of spec.seed. When
/// (n!)^r <= samples every tuple is visited once instead (exact mean,
/// zero standard error).
inline MomentEstimates estimate_moments(const EnsembleSpec& spec, int m, int m2,
                                        std::uint64_t samples,
                                        const MonteCarloOptions& opt = {}) {
  spec.validate();
  const int n = spec.n;
  const int r = spec.r;
  if (samples < 2) throw invalid_input("estimate_moments: need at least 2 samples");
  if (m < 0 || m > n || m2 < 0 || m2 > n)
    throw invalid_input("estimate_moments: need 0 <= m, m' <= n");
  if (n > opt.limits.max_dp_dimension)
    throw capacity_error("estimate_moments: dimension " + std::to_string(n) +
                         " above permanent limit " +
                         std::to_string(opt.limits.max_dp_dimension));

  const BigInt population = tuple_count(n, r);
  const bool enumerate = opt.allow_enumeration && population <= samples;
  const unsigned threads = std::max(1u, opt.threads);

  // Each block is summed sequentially and blocks are merged in index
  // order, so the floating-point log sums do not depend on the thread count.
  // When enumerating, a block is a run of consecutive first-permutation ranks.
  constexpr std::uint64_t kBlock = 1024;
  const std::uint64_t firsts = factorial_big(n).convert_to<std::uint64_t>();
  const std::uint64_t group = enumerate ? (firsts + 4095) / 4096 : kBlock;
  const std::uint64_t blocks = ((enumerate ? firsts : samples) + group - 1) / group;
  std::vector<detail::TripleAccumulator> partial(blocks);
  auto worker = [&](unsigned w) {
    if (enumerate) {
      std::uint64_t current = 0;
      enumerate_tuples(
          n, r,
          [&](std::span<const Permutation> perms) {
            partial[current].add(subpermanent_profile(assemble_matrix(perms), opt.limits), m, m2);
          },
          std::numeric_limits<std::uint64_t>::max(),
          [&](std::uint64_t rank) {
            current = rank / group;
            return current % threads == w;
          });
    } else {
      for (std::uint64_t b = w; b < blocks; b += threads)
        for (std::uint64_t k = b * group; k < std::min(samples, (b + 1) * group); ++k)
          partial[b].add(subpermanent_profile(sample_matrix(spec, k), opt.limits), m, m2);
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
  }
  detail::TripleAccumulator total;
  for (const auto& block : partial) total.merge(block);

  const std::uint64_t count = enumerate ? population.convert_to<std::uint64_t>() : samples;
  return {total.first.finish(n, r, m, m, count, enumerate),
          total.second.finish(n, r, m2, m2, count, enumerate),
          total.product.finish(n, r, m, m2, count, enumerate)};
}

struct ScanRow {
  int n = 0;
  int m = 0;
  int m2 = 0;
  MCEstimate product;
  double prediction = 0;  // single_rate(p, r) + single_rate(q, r)
  double gap = 0;         // prediction - (1/n) ln(mean)
};

/// Finite-n estimates of (1/n) ln E(perm_m perm_m') with m = round(pn),
/// m' = round(qn), next to the large-n prediction.
inline std::vector<ScanRow> convergence_scan(int r, double p, double q,
                                             const std::vector<int>& n_list,
                                             std::uint64_t samples, std::uint64_t seed,
                                             const MonteCarloOptions& opt = {}) {
  if (!(p >= 0 && p <= 1) || !(q >= 0 && q <= 1))
    throw domain_error("convergence_scan: p and q must lie in [0, 1]");
  const double prediction = single_rate_closed(p, r) + single_rate_closed(q, r);
  std::vector<ScanRow> rows;
  for (int n : n_list) {
    ScanRow row;
    row.n = n;
    row.m = static_cast<int>(std::lround(p * n));
    row.m2 = static_cast<int>(std::lround(q * n));
    row.product = estimate_moments(EnsembleSpec(n, r, seed), row.m, row.m2, samples, opt).product;
    row.prediction = prediction;
    row.gap = prediction - row.product.log_mean_over_n;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace permex
