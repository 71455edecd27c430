#pragma once

// Ensemble of n x n matrices A = P_1 + ... + P_r, each P_k an independent
// uniformly random permutation matrix, plus exhaustive tuple enumeration.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "permex/errors.hpp"
#include "permex/numeric.hpp"

namespace permex {

struct EnsembleSpec {
  int n = 1;
  int r = 1;
  std::uint64_t seed = 0;

  EnsembleSpec() = default;
  EnsembleSpec(int n_, int r_, std::uint64_t seed_ = 0) : n(n_), r(r_), seed(seed_) {
    validate();
  }

  void validate() const {
    if (n < 1) throw invalid_input("ensemble dimension n must be >= 1");
    if (r < 1) throw invalid_input("ensemble count r must be >= 1");
  }
};

using Permutation = std::vector<int>;

class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(int n) : n_(n), entries_(static_cast<std::size_t>(n) * n, 0) {
    if (n < 0) throw invalid_input("negative matrix dimension");
  }
  SquareMatrix(std::initializer_list<std::initializer_list<int>> rows)
      : SquareMatrix(static_cast<int>(rows.size())) {
    int i = 0;
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != n_) throw invalid_input("ragged matrix rows");
      int j = 0;
      for (int v : row) at(i, j++) = v;
      ++i;
    }
  }

  int n() const { return n_; }
  int& at(int i, int j) { return entries_[static_cast<std::size_t>(i) * n_ + j]; }
  int at(int i, int j) const { return entries_[static_cast<std::size_t>(i) * n_ + j]; }
  std::span<const int> row(int i) const {
    return {entries_.data() + static_cast<std::size_t>(i) * n_, static_cast<std::size_t>(n_)};
  }

  int row_sum(int i) const {
    auto rw = row(i);
    return std::accumulate(rw.begin(), rw.end(), 0);
  }
  int col_sum(int j) const {
    int s = 0;
    for (int i = 0; i < n_; ++i) s += at(i, j);
    return s;
  }
  long long total() const {
    return std::accumulate(entries_.begin(), entries_.end(), 0LL);
  }
  int max_entry() const {
    return entries_.empty() ? 0 : *std::max_element(entries_.begin(), entries_.end());
  }
  bool nonnegative() const {
    return std::all_of(entries_.begin(), entries_.end(), [](int v) { return v >= 0; });
  }

  static SquareMatrix identity(int n) {
    SquareMatrix m(n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
  }
  static SquareMatrix constant(int n, int v) {
    SquareMatrix m(n);
    std::fill(m.entries_.begin(), m.entries_.end(), v);
    return m;
  }

  bool operator==(const SquareMatrix&) const = default;

 private:
  int n_ = 0;
  std::vector<int> entries_;
};

inline void to_json(nlohmann::json& j, const SquareMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.n(); ++i) {
    auto rw = m.row(i);
    rows.push_back(std::vector<int>(rw.begin(), rw.end()));
  }
  j = nlohmann::json{{"n", m.n()}, {"entries", rows}};
}

inline void from_json(const nlohmann::json& j, SquareMatrix& m) {
  const int n = j.at("n").get<int>();
  const auto& rows = j.at("entries");
  if (!rows.is_array() || static_cast<int>(rows.size()) != n)
    throw invalid_input("matrix JSON: entries must hold n rows");
  SquareMatrix out(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw invalid_input("matrix JSON: row " + std::to_string(i) + " has wrong length");
    for (int k = 0; k < n; ++k) out.at(i, k) = rows[i][k].get<int>();
  }
  m = std::move(out);
}

namespace detail {
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// SplitMix64 generator keyed by (seed, stream). Stream k for seed s starts
/// from mix64(s) ^ mix64(k * golden + 1), so sample k of a run is a pure
/// function of (s, k) and parallel sampling is independent of worker count.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t seed, std::uint64_t stream)
      : state_(detail::mix64(seed) ^ detail::mix64(stream * kGolden + 1)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += kGolden;
    return detail::mix64(state_);
  }

  // Lemire's nearly-divisionless unbiased draw from [0, bound).
  std::uint64_t bounded(std::uint64_t bound) {
    u128 prod = static_cast<u128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(prod);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        prod = static_cast<u128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(prod);
      }
    }
    return static_cast<std::uint64_t>(prod >> 64);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  std::uint64_t state_;
};

/// Uniform permutation of {0..n-1} by Fisher-Yates.
inline Permutation sample_permutation(int n, StreamRng& rng) {
  if (n < 1) throw invalid_input("permutation length must be >= 1");
  Permutation p(n);
  std::iota(p.begin(), p.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    auto j = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(i) + 1));
    std::swap(p[i], p[j]);
  }
  return p;
}

/// Entry (i, j) counts the permutations sending i to j.
inline SquareMatrix assemble_matrix(std::span<const Permutation> perms) {
  if (perms.empty()) throw invalid_input("assemble_matrix needs at least one permutation");
  const int n = static_cast<int>(perms.front().size());
  SquareMatrix a(n);
  for (const auto& p : perms) {
    if (static_cast<int>(p.size()) != n)
      throw invalid_input("assemble_matrix: permutations of different lengths");
    std::vector<char> seen(n, 0);
    for (int i = 0; i < n; ++i) {
      if (p[i] < 0 || p[i] >= n || seen[p[i]])
        throw invalid_input("assemble_matrix: input is not a permutation");
      seen[p[i]] = 1;
      ++a.at(i, p[i]);
    }
  }
  return a;
}

/// r permutations drawn from stream `index` of the ensemble's seed.
inline std::vector<Permutation> sample_tuple(const EnsembleSpec& spec, std::uint64_t index) {
  StreamRng rng(spec.seed, index);
  std::vector<Permutation> perms;
  perms.reserve(spec.r);
  for (int k = 0; k < spec.r; ++k) perms.push_back(sample_permutation(spec.n, rng));
  return perms;
}

inline SquareMatrix sample_matrix(const EnsembleSpec& spec, std::uint64_t index) {
  return assemble_matrix(sample_tuple(spec, index));
}

inline constexpr std::uint64_t kDefaultTupleBudget = 100'000'000ULL;

inline void check_tuple_budget(int n, int r, std::uint64_t budget) {
  if (n < 1 || r < 1) throw invalid_input("tuple enumeration needs n >= 1 and r >= 1");
  if (tuple_count(n, r) > budget)
    throw capacity_error("enumerating (n!)^r tuples for n=" + std::to_string(n) +
                         ", r=" + std::to_string(r) + " exceeds budget " +
                         std::to_string(budget));
}

/// Every r-tuple of permutations of {0..n-1}, each exactly once, in
/// lexicographic order of (perm_1, ..., perm_r). The visitor receives a
/// span of r permutations that is only valid during the call.
///
/// `first_filter(k)` selects which first permutations (by lexicographic
/// rank k) are visited; used to split the stream across workers.
template <class Visit>
void enumerate_tuples(int n, int r, Visit&& visit,
                      std::uint64_t budget = kDefaultTupleBudget,
                      const std::function<bool(std::uint64_t)>& first_filter = {}) {
  check_tuple_budget(n, r, budget);
  Permutation id(n);
  std::iota(id.begin(), id.end(), 0);
  std::vector<Permutation> tuple(r, id);
  std::uint64_t first_rank = 0;
  while (true) {
    if (!first_filter || first_filter(first_rank)) {
      // odometer over perms 1..r-1 with perm 0 fixed
      for (int k = 1; k < r; ++k) tuple[k] = id;
      while (true) {
        visit(std::span<const Permutation>(tuple));
        int k = r - 1;
        while (k >= 1 && !std::next_permutation(tuple[k].begin(), tuple[k].end())) --k;
        if (k < 1) break;
      }
    }
    if (!std::next_permutation(tuple[0].begin(), tuple[0].end())) break;
    ++first_rank;
  }
}

}  // namespace permex
