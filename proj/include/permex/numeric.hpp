#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <boost/multiprecision/gmp.hpp>

#include "permex/errors.hpp"

namespace permex {

using BigInt = boost::multiprecision::mpz_int;
using Rational = boost::multiprecision::mpq_rational;
using u128 = unsigned __int128;
using i128 = __int128;

inline BigInt to_big(u128 v) {
  BigInt hi = static_cast<std::uint64_t>(v >> 64);
  hi <<= 64;
  return hi + BigInt(static_cast<std::uint64_t>(v));
}

inline BigInt to_big(i128 v) {
  if (v < 0) return -to_big(static_cast<u128>(-v));
  return to_big(static_cast<u128>(v));
}

inline BigInt to_big(std::uint64_t v) { return BigInt(v); }
inline BigInt to_big(const BigInt& v) { return v; }

/// Natural log of a positive big integer, accurate to double precision
/// regardless of magnitude.
inline double log_big(const BigInt& x) {
  if (x <= 0) throw domain_error("log of non-positive integer");
  long exp = 0;
  double mant = mpz_get_d_2exp(&exp, x.backend().data());
  return std::log(mant) + static_cast<double>(exp) * std::numbers::ln2;
}

inline double log_rational(const Rational& q) {
  return log_big(boost::multiprecision::numerator(q)) -
         log_big(boost::multiprecision::denominator(q));
}

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

inline std::string numerator_str(const Rational& q) {
  return boost::multiprecision::numerator(q).str();
}
inline std::string denominator_str(const Rational& q) {
  return boost::multiprecision::denominator(q).str();
}

inline Rational parse_rational(const std::string& num, const std::string& den) {
  return Rational(BigInt(num), BigInt(den));
}

/// Factorials and a Pascal triangle up to a fixed order, all exact.
class CombinatoricTable {
 public:
  explicit CombinatoricTable(int max_n) : max_n_(max_n) {
    if (max_n < 0) throw invalid_input("negative table order");
    fact_.resize(max_n + 1);
    fact_[0] = 1;
    for (int i = 1; i <= max_n; ++i) fact_[i] = fact_[i - 1] * i;
    pascal_.resize(max_n + 1);
    for (int i = 0; i <= max_n; ++i) {
      pascal_[i].resize(i + 1);
      pascal_[i][0] = pascal_[i][i] = 1;
      for (int k = 1; k < i; ++k)
        pascal_[i][k] = pascal_[i - 1][k - 1] + pascal_[i - 1][k];
    }
  }

  int max_n() const { return max_n_; }

  const BigInt& factorial(int k) const {
    check(k);
    return fact_[k];
  }

  // Zero outside 0 <= k <= n, so infeasible selections drop out of sums.
  BigInt binomial(int n, int k) const {
    if (n < 0 || k < 0 || k > n) return 0;
    check(n);
    return pascal_[n][k];
  }

  /// (Σ parts)! / Π parts!, built as a product of binomials.
  template <class Range>
  BigInt multinomial(const Range& parts) const {
    BigInt out = 1;
    int running = 0;
    for (int p : parts) {
      if (p < 0) return 0;
      running += p;
      out *= binomial(running, p);
    }
    return out;
  }

 private:
  void check(int k) const {
    if (k < 0 || k > max_n_)
      throw invalid_input("combinatoric table index " + std::to_string(k) +
                          " outside 0.." + std::to_string(max_n_));
  }

  int max_n_;
  std::vector<BigInt> fact_;
  std::vector<std::vector<BigInt>> pascal_;
};

inline BigInt factorial_big(int n) {
  BigInt f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

/// (n!)^r as an exact integer.
inline BigInt tuple_count(int n, int r) {
  return boost::multiprecision::pow(factorial_big(n), static_cast<unsigned>(r));
}

}  // namespace permex
