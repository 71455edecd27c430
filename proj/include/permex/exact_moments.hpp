#pragma once

// Exact E(perm_m) and E(perm_m * perm_m') for the permutation-sum ensemble
// by summation over colour profiles.
//
// Fix an m-term (m non-attacking coloured placements) and classify each
// element of an m'-term against it:
//   class 1  disjoint   row and column both unused by the m-term
//   class 2  coincide   same colour and location as an m-term element
//   class 3  row_link   row of an m-term element, column unused
//   class 4  col_link   column of an m-term element, row unused
//   class 5  inner      row and column both used, not coinciding
// A colour profile records how many elements fall in each class, by colour
// and, for classes 3-5, by the colour of the m-term element whose row or
// column is shared. The expectation is a sum over profiles of a product of
// seven integer factors (background, disjoint, coincide, row-link,
// col-link, inner, completion) divided by (n!)^r.

#include <algorithm>
#include <cstdint>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "permex/errors.hpp"
#include "permex/numeric.hpp"
#include "permex/permanent.hpp"

namespace permex {

/// r x r count array with an unused diagonal. x(i, k) counts m'-term
/// elements of colour i tied to an m-term element of colour k != i.
class LinkMatrix {
 public:
  LinkMatrix() = default;
  explicit LinkMatrix(int r) : r_(r), cells_(static_cast<std::size_t>(r) * r, 0) {}

  int colors() const { return r_; }
  int& operator()(int i, int k) { return cells_[static_cast<std::size_t>(i) * r_ + k]; }
  int operator()(int i, int k) const { return cells_[static_cast<std::size_t>(i) * r_ + k]; }

  /// Σ_{k≠i} x(i, k): elements of colour i.
  int out(int i) const {
    int s = 0;
    for (int k = 0; k < r_; ++k)
      if (k != i) s += (*this)(i, k);
    return s;
  }
  /// Σ_{k≠i} x(k, i): elements tied to m-term colour i.
  int in(int i) const {
    int s = 0;
    for (int k = 0; k < r_; ++k)
      if (k != i) s += (*this)(k, i);
    return s;
  }
  int total() const {
    int s = 0;
    for (int i = 0; i < r_; ++i) s += out(i);
    return s;
  }
  /// Counts x(k, i) over k ≠ i, the parts of in(i).
  std::vector<int> in_parts(int i) const {
    std::vector<int> v;
    for (int k = 0; k < r_; ++k)
      if (k != i) v.push_back((*this)(k, i));
    return v;
  }
  std::vector<int> out_parts(int i) const {
    std::vector<int> v;
    for (int k = 0; k < r_; ++k)
      if (k != i) v.push_back((*this)(i, k));
    return v;
  }

  bool operator==(const LinkMatrix&) const = default;

 private:
  int r_ = 0;
  std::vector<int> cells_;
};

struct ColorProfile {
  int colors = 0;
  std::vector<int> m_count;    // m-term elements per colour
  std::vector<int> disjoint;   // class 1 per colour
  std::vector<int> coincide;   // class 2 per colour
  LinkMatrix row_link;         // class 3
  LinkMatrix col_link;         // class 4
  LinkMatrix inner_row;        // class 5, by owner of the shared row
  LinkMatrix inner_col;        // class 5, by owner of the shared column

  ColorProfile() = default;
  explicit ColorProfile(int r)
      : colors(r), m_count(r, 0), disjoint(r, 0), coincide(r, 0),
        row_link(r), col_link(r), inner_row(r), inner_col(r) {}

  int m_total() const { return std::accumulate(m_count.begin(), m_count.end(), 0); }
  int disjoint_total() const { return std::accumulate(disjoint.begin(), disjoint.end(), 0); }
  int coincide_total() const { return std::accumulate(coincide.begin(), coincide.end(), 0); }
  int row_link_total() const { return row_link.total(); }
  int col_link_total() const { return col_link.total(); }
  int inner_total() const { return inner_row.total(); }
  int inner(int i) const { return inner_row.out(i); }
  int m2_total() const {
    return disjoint_total() + coincide_total() + row_link_total() + col_link_total() +
           inner_total();
  }
  /// Positions of permutation i pinned by the pair of terms.
  int load(int i) const {
    return m_count[i] + disjoint[i] + row_link.out(i) + col_link.out(i) + inner(i);
  }

  /// Rows and columns interchanged: classes 3 and 4 swap, as do the two
  /// class-5 link arrays.
  ColorProfile transposed() const {
    ColorProfile t = *this;
    std::swap(t.row_link, t.col_link);
    std::swap(t.inner_row, t.inner_col);
    return t;
  }

  bool operator==(const ColorProfile&) const = default;
};

/// Problem parameters plus the exact factorial/binomial tables they need.
struct MomentContext {
  int n;
  int r;
  int m;
  int m2;
  CombinatoricTable table;

  MomentContext(int n_, int r_, int m_, int m2_)
      : n(n_), r(r_), m(m_), m2(m2_), table(std::max(n_, 1)) {
    if (n < 1 || r < 1) throw invalid_input("need n >= 1 and r >= 1");
    if (m < 0 || m > n) throw invalid_input("need 0 <= m <= n");
    if (m2 < 0 || m2 > n) throw invalid_input("need 0 <= m' <= n");
  }
};

/// First violated invariant, or nullopt when the profile is admissible for
/// (n, r, m, m').
inline std::optional<std::string> profile_violation(const ColorProfile& p, int n, int m, int m2) {
  const int r = p.colors;
  auto neg = [](const std::vector<int>& v) {
    return std::any_of(v.begin(), v.end(), [](int x) { return x < 0; });
  };
  if (neg(p.m_count) || neg(p.disjoint) || neg(p.coincide)) return "negative count";
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < r; ++k) {
      const int vals[] = {p.row_link(i, k), p.col_link(i, k), p.inner_row(i, k), p.inner_col(i, k)};
      for (int v : vals) {
        if (v < 0) return "negative link count";
        if (i == k && v != 0) return "diagonal link count";
      }
    }
  if (p.m_total() != m) return "m-term colour counts do not sum to m";
  if (p.m2_total() != m2) return "class counts do not sum to m'";
  const int a = p.disjoint_total();
  for (int i = 0; i < r; ++i) {
    if (p.inner_row.out(i) != p.inner_col.out(i)) return "inner row/column totals differ";
    if (p.load(i) > n) return "load of colour " + std::to_string(i) + " exceeds n";
    if (p.coincide[i] > p.m_count[i]) return "coincide exceeds m-term count";
    const int free_i = p.m_count[i] - p.coincide[i];
    if (p.row_link.in(i) > free_i) return "row links exceed free m-term rows";
    if (p.col_link.in(i) > free_i) return "column links exceed free m-term columns";
    if (p.row_link.in(i) + p.inner_row.in(i) > free_i) return "inner rows exceed free m-term rows";
    if (p.col_link.in(i) + p.inner_col.in(i) > free_i)
      return "inner columns exceed free m-term columns";
  }
  if (a > n - m) return "disjoint count exceeds n - m";
  if (a + p.row_link_total() + m > n) return "a + b + m exceeds n";
  if (a + p.col_link_total() + m > n) return "a + c + m exceeds n";
  return std::nullopt;
}

// ---- per-profile factors ---------------------------------------------------

/// Background factor without the 1/(n!)^r normalisation:
/// C(n,m)^2 m! * m!/(m_1!...m_r!).
inline BigInt eval_M_numerator(const ColorProfile& p, const MomentContext& ctx) {
  const auto& t = ctx.table;
  const BigInt b = t.binomial(ctx.n, ctx.m);
  return b * b * t.factorial(ctx.m) * t.multinomial(p.m_count);
}

inline Rational eval_M(const ColorProfile& p, const MomentContext& ctx) {
  return Rational(eval_M_numerator(p, ctx), tuple_count(ctx.n, ctx.r));
}

inline BigInt eval_A(const ColorProfile& p, const MomentContext& ctx) {
  const auto& t = ctx.table;
  const int a = p.disjoint_total();
  const BigInt choose = t.binomial(ctx.n - ctx.m, a);
  return choose * choose * t.factorial(a) * t.multinomial(p.disjoint);
}

inline BigInt eval_E(const ColorProfile& p, const MomentContext& ctx) {
  BigInt out = 1;
  for (int i = 0; i < p.colors; ++i) out *= ctx.table.binomial(p.m_count[i], p.coincide[i]);
  return out;
}

namespace detail {

// Three bracket factors shared by the row-link and column-link classes:
// labelled choice of fresh lines, labelled choice of m-term lines, and the
// pairing of each label group.
inline BigInt link_factor(const LinkMatrix& x, const ColorProfile& p, const MomentContext& ctx) {
  const auto& t = ctx.table;
  const int r = p.colors;
  const int total = x.total();
  std::vector<int> per_color(r);
  for (int i = 0; i < r; ++i) per_color[i] = x.out(i);

  BigInt fresh = t.binomial(ctx.n - ctx.m - p.disjoint_total(), total) * t.multinomial(per_color);
  for (int i = 0; i < r; ++i) fresh *= t.multinomial(x.out_parts(i));

  BigInt owned = 1;
  for (int i = 0; i < r; ++i)
    owned *= t.binomial(p.m_count[i] - p.coincide[i], x.in(i)) * t.multinomial(x.in_parts(i));

  BigInt pairing = 1;
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < r; ++k)
      if (k != i) pairing *= t.factorial(x(i, k));
  return fresh * owned * pairing;
}

}  // namespace detail

inline BigInt eval_B(const ColorProfile& p, const MomentContext& ctx) {
  return detail::link_factor(p.row_link, p, ctx);
}

inline BigInt eval_C(const ColorProfile& p, const MomentContext& ctx) {
  return detail::link_factor(p.col_link, p, ctx);
}

inline BigInt eval_D(const ColorProfile& p, const MomentContext& ctx) {
  const auto& t = ctx.table;
  BigInt out = 1;
  for (int i = 0; i < p.colors; ++i) {
    const int free_i = p.m_count[i] - p.coincide[i];
    out *= t.binomial(free_i - p.row_link.in(i), p.inner_row.in(i)) *
           t.multinomial(p.inner_row.in_parts(i));
    out *= t.binomial(free_i - p.col_link.in(i), p.inner_col.in(i)) *
           t.multinomial(p.inner_col.in_parts(i));
    out *= t.factorial(p.inner(i));
  }
  return out;
}

inline BigInt eval_T(const ColorProfile& p, const MomentContext& ctx) {
  BigInt out = 1;
  for (int i = 0; i < p.colors; ++i) {
    const int rest = ctx.n - p.load(i);
    if (rest < 0) return 0;
    out *= ctx.table.factorial(rest);
  }
  return out;
}

/// Integer numerator of one summand; the summand is this over (n!)^r.
inline BigInt term_numerator(const ColorProfile& p, const MomentContext& ctx) {
  return eval_M_numerator(p, ctx) * eval_A(p, ctx) * eval_E(p, ctx) * eval_B(p, ctx) *
         eval_C(p, ctx) * eval_D(p, ctx) * eval_T(p, ctx);
}

inline Rational term_value(const ColorProfile& p, const MomentContext& ctx) {
  return Rational(term_numerator(p, ctx), tuple_count(ctx.n, ctx.r));
}

// ---- profile enumeration ---------------------------------------------------

inline constexpr std::uint64_t kDefaultProfileBudget = 1'000'000'000ULL;

namespace detail {

// Every x with 0 <= x[i] <= ub[i] and Σx <= cap (== cap when exact), in
// lexicographic order.
template <class F>
void for_each_bounded(std::vector<int>& x, const std::vector<int>& ub, int cap, bool exact,
                      F&& f, std::size_t i = 0) {
  if (i == x.size()) {
    if (!exact || cap == 0) f();
    return;
  }
  if (exact && i + 1 == x.size()) {
    if (cap <= ub[i]) {
      x[i] = cap;
      f();
      x[i] = 0;
    }
    return;
  }
  const int hi = std::min(ub[i], cap);
  for (int v = 0; v <= hi; ++v) {
    x[i] = v;
    for_each_bounded(x, ub, cap - v, exact, f, i + 1);
  }
  x[i] = 0;
}

// Every link matrix with in(k) <= col_cap[k], total <= total_cap (== when
// total_exact), and out(i) == row_target[i] when row_target is given.
template <class F>
void for_each_links(LinkMatrix& x, std::vector<int>& col_cap, int total_cap, bool total_exact,
                    std::vector<int>* row_rem, F&& f, int cell = 0) {
  const int r = x.colors();
  if (cell == r * r) {
    if (total_exact && total_cap != 0) return;
    if (row_rem && std::any_of(row_rem->begin(), row_rem->end(), [](int v) { return v != 0; }))
      return;
    f();
    return;
  }
  const int i = cell / r;
  const int k = cell % r;
  if (i == k) {
    for_each_links(x, col_cap, total_cap, total_exact, row_rem, f, cell + 1);
    return;
  }
  int hi = std::min(col_cap[k], total_cap);
  int lo = 0;
  if (row_rem) {
    hi = std::min(hi, (*row_rem)[i]);
    const int last_k = (i == r - 1) ? r - 2 : r - 1;
    if (k == last_k) lo = (*row_rem)[i];  // closes the row
  }
  for (int v = lo; v <= hi; ++v) {
    x(i, k) = v;
    col_cap[k] -= v;
    if (row_rem) (*row_rem)[i] -= v;
    for_each_links(x, col_cap, total_cap - v, total_exact, row_rem, f, cell + 1);
    col_cap[k] += v;
    if (row_rem) (*row_rem)[i] += v;
  }
  x(i, k) = 0;
}

// Nested enumeration m -> disjoint -> coincide -> row links -> col links ->
// inner rows -> inner cols. With Weighted, each stage multiplies in its
// factor so the innermost loop only applies the completion factor.
template <bool Weighted, class Visit>
class ProfileWalker {
 public:
  ProfileWalker(const MomentContext& ctx, Visit& visit, std::uint64_t budget, unsigned stride,
                unsigned offset)
      : ctx_(ctx), visit_(visit), budget_(budget), stride_(stride), offset_(offset), p_(ctx.r) {}

  std::uint64_t run() {
    const int r = ctx_.r;
    std::vector<int> ub(r, ctx_.m);
    std::uint64_t comp_index = 0;
    for_each_bounded(p_.m_count, ub, ctx_.m, true, [&] {
      if (comp_index++ % stride_ != offset_) return;
      BigInt w;
      if constexpr (Weighted) w = eval_M_numerator(p_, ctx_);
      stage_disjoint(w);
    });
    return terms_;
  }

 private:
  void stage_disjoint(const BigInt& w_prev) {
    const int r = ctx_.r;
    std::vector<int> ub(r, ctx_.n);
    const int cap = std::min(ctx_.n - ctx_.m, ctx_.m2);
    for_each_bounded(p_.disjoint, ub, cap, false, [&] {
      BigInt w;
      if constexpr (Weighted) w = w_prev * eval_A(p_, ctx_);
      stage_coincide(w);
    });
  }

  void stage_coincide(const BigInt& w_prev) {
    const int cap = ctx_.m2 - p_.disjoint_total();
    for_each_bounded(p_.coincide, p_.m_count, cap, false, [&] {
      BigInt w;
      if constexpr (Weighted) w = w_prev * eval_E(p_, ctx_);
      stage_row_link(w);
    });
  }

  std::vector<int> free_lines() const {
    std::vector<int> f(ctx_.r);
    for (int i = 0; i < ctx_.r; ++i) f[i] = p_.m_count[i] - p_.coincide[i];
    return f;
  }

  void stage_row_link(const BigInt& w_prev) {
    const int a = p_.disjoint_total();
    const int used = a + p_.coincide_total();
    const int cap = std::min(ctx_.m2 - used, ctx_.n - ctx_.m - a);
    auto col_cap = free_lines();
    for_each_links(p_.row_link, col_cap, cap, false, nullptr, [&] {
      BigInt w;
      if constexpr (Weighted) w = w_prev * eval_B(p_, ctx_);
      stage_col_link(w);
    });
  }

  void stage_col_link(const BigInt& w_prev) {
    const int a = p_.disjoint_total();
    const int used = a + p_.coincide_total() + p_.row_link_total();
    const int cap = std::min(ctx_.m2 - used, ctx_.n - ctx_.m - a);
    auto col_cap = free_lines();
    for_each_links(p_.col_link, col_cap, cap, false, nullptr, [&] {
      for (int i = 0; i < ctx_.r; ++i)
        if (p_.m_count[i] + p_.disjoint[i] + p_.row_link.out(i) + p_.col_link.out(i) > ctx_.n)
          return;
      BigInt w;
      if constexpr (Weighted) w = w_prev * eval_C(p_, ctx_);
      stage_inner_row(w);
    });
  }

  void stage_inner_row(const BigInt& w_prev) {
    const int d = ctx_.m2 - p_.disjoint_total() - p_.coincide_total() - p_.row_link_total() -
                  p_.col_link_total();
    auto col_cap = free_lines();
    for (int i = 0; i < ctx_.r; ++i) col_cap[i] -= p_.row_link.in(i);
    for_each_links(p_.inner_row, col_cap, d, true, nullptr, [&] { stage_inner_col(w_prev); });
  }

  void stage_inner_col(const BigInt& w_prev) {
    const int r = ctx_.r;
    auto col_cap = free_lines();
    std::vector<int> row_rem(r);
    for (int i = 0; i < r; ++i) {
      col_cap[i] -= p_.col_link.in(i);
      row_rem[i] = p_.inner_row.out(i);
    }
    for_each_links(p_.inner_col, col_cap, p_.inner_total(), true, &row_rem, [&] {
      for (int i = 0; i < r; ++i)
        if (p_.load(i) > ctx_.n) return;
      if (++terms_ > budget_)
        throw capacity_error("colour-profile enumeration exceeded budget of " +
                             std::to_string(budget_) + " terms");
      if constexpr (Weighted) {
        const BigInt w = w_prev * eval_D(p_, ctx_) * eval_T(p_, ctx_);
        visit_(static_cast<const ColorProfile&>(p_), w);
      } else {
        visit_(static_cast<const ColorProfile&>(p_));
      }
    });
  }

  const MomentContext& ctx_;
  Visit& visit_;
  std::uint64_t budget_;
  unsigned stride_;
  unsigned offset_;
  ColorProfile p_;
  std::uint64_t terms_ = 0;
};

}  // namespace detail

/// Every admissible colour profile for (n, r, m, m'), each once, in nested
/// lexicographic order (m-term counts, disjoint, coincide, row links,
/// column links, inner rows, inner columns). Returns the number visited.
template <class Visit>
std::uint64_t for_each_profile(const MomentContext& ctx, Visit&& visit,
                               std::uint64_t budget = kDefaultProfileBudget) {
  detail::ProfileWalker<false, Visit> walker(ctx, visit, budget, 1, 0);
  return walker.run();
}

inline std::vector<ColorProfile> profiles(int n, int r, int m, int m2,
                                          std::uint64_t budget = kDefaultProfileBudget) {
  MomentContext ctx(n, r, m, m2);
  std::vector<ColorProfile> out;
  for_each_profile(ctx, [&](const ColorProfile& p) { out.push_back(p); }, budget);
  return out;
}

/// Visits (profile, summand numerator) pairs; same order as for_each_profile.
template <class Visit>
std::uint64_t for_each_weighted_profile(const MomentContext& ctx, Visit&& visit,
                                        std::uint64_t budget = kDefaultProfileBudget,
                                        unsigned stride = 1, unsigned offset = 0) {
  detail::ProfileWalker<true, Visit> walker(ctx, visit, budget, stride, offset);
  return walker.run();
}

// ---- expectations ----------------------------------------------------------

/// E(perm_m) as a single sum over colour compositions of m.
inline ExactMoment expectation_perm(int n, int r, int m) {
  if (n < 1 || r < 1) throw invalid_input("need n >= 1 and r >= 1");
  if (m < 0 || m > n) throw invalid_input("expectation_perm: need 0 <= m <= n");
  CombinatoricTable t(n);
  std::vector<int> parts(r, 0);
  std::vector<int> ub(r, m);
  BigInt sum = 0;
  std::uint64_t terms = 0;
  detail::for_each_bounded(parts, ub, m, true, [&] {
    BigInt term = t.multinomial(parts);
    for (int k : parts) term *= t.factorial(n - k);
    sum += term;
    ++terms;
  });
  const BigInt c = t.binomial(n, m);
  ExactMoment out;
  out.value = Rational(c * c * t.factorial(m) * sum, tuple_count(n, r));
  out.terms = terms;
  out.n = n;
  out.r = r;
  out.m = m;
  out.m2 = 0;
  return out;
}

/// E(perm_m · perm_m') as the sum of all colour-profile summands.
inline ExactMoment expectation_product(int n, int r, int m, int m2, unsigned threads = 1,
                                       std::uint64_t budget = kDefaultProfileBudget) {
  MomentContext ctx(n, r, m, m2);
  threads = std::max(1u, threads);
  BigInt total = 0;
  std::uint64_t terms = 0;
  std::mutex merge;
  auto worker = [&](unsigned w) {
    BigInt local = 0;
    auto add = [&](const ColorProfile&, const BigInt& num) { local += num; };
    const auto count = for_each_weighted_profile(ctx, add, budget, threads, w);
    std::lock_guard lock(merge);
    total += local;
    terms += count;
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
  }
  if (terms > budget)
    throw capacity_error("colour-profile enumeration exceeded budget");
  ExactMoment out;
  out.value = Rational(total, tuple_count(n, r));
  out.terms = terms;
  out.n = n;
  out.r = r;
  out.m = m;
  out.m2 = m2;
  return out;
}

struct ArgmaxResult {
  ColorProfile profile;
  Rational value;
  std::uint64_t terms = 0;
};

/// Largest summand; ties go to the earliest profile in iteration order.
inline ArgmaxResult argmax_profile(int n, int r, int m, int m2,
                                   std::uint64_t budget = kDefaultProfileBudget) {
  MomentContext ctx(n, r, m, m2);
  ArgmaxResult best;
  BigInt best_num = -1;
  best.terms = for_each_weighted_profile(
      ctx,
      [&](const ColorProfile& p, const BigInt& num) {
        if (num > best_num) {
          best_num = num;
          best.profile = p;
        }
      },
      budget);
  best.value = Rational(best_num, tuple_count(n, r));
  return best;
}

}  // namespace permex
