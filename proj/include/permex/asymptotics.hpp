#pragma once

// Large-n rates for E(perm_m) and E(perm_m perm_m') with m = pn, m' = qn.
// All counts are densities (divided by n); every Stirling sum here is
// homogeneous, so the n ln n pieces cancel and densities are exact.
//
// Scaled variables of the dominant profile, with b = c:
//   a  disjoint elements           b  row-link (= column-link) elements
//   d  inner elements              e  coinciding elements
//   L  exponentiated multiplier for the constraint a + e + 2b + d = q.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "permex/errors.hpp"

namespace permex {

/// Stirling form z ln z - z of ln z!, continuous at 0.
inline double stirling_F(double z) {
  if (std::isnan(z) || z < 0) throw domain_error("stirling_F: negative argument");
  if (z == 0) return 0.0;
  return z * std::log(z) - z;
}

namespace detail {
inline void check_r(int r) {
  if (r < 1) throw domain_error("rate: r must be >= 1");
}
inline double xlogx(double x) { return x == 0 ? 0.0 : x * std::log(x); }
}  // namespace detail

/// lim (1/n) ln E(perm_{pn}) for 0 < p < 1.
inline double single_rate(double p, int r) {
  detail::check_r(r);
  if (!(p > 0 && p < 1)) throw domain_error("single_rate: p must lie in (0, 1)");
  return -p * std::log(p) + (2 * p - r) * std::log(r) + 2 * (p - 1) * std::log(1 - p) +
         (r - p) * std::log(r - p);
}

/// single_rate extended to the closed interval by continuity.
inline double single_rate_closed(double p, int r) {
  detail::check_r(r);
  if (!(p >= 0 && p <= 1)) throw domain_error("single_rate_closed: p must lie in [0, 1]");
  return -detail::xlogx(p) + (2 * p - r) * std::log(r) - 2 * detail::xlogx(1 - p) +
         detail::xlogx(r - p);
}

/// R/n for an explicit real split m_1 + ... + m_r = m of the m-term colours.
inline double finite_rate_composition(double n, std::span<const double> parts) {
  if (!(n > 0)) throw domain_error("finite rate: n must be positive");
  const auto r = static_cast<double>(parts.size());
  double m = 0;
  for (double x : parts) m += x;
  double R = -r * stirling_F(n) + 2 * stirling_F(n) - 2 * stirling_F(n - m);
  for (double x : parts) R += -stirling_F(x) + stirling_F(n - x);
  return R / n;
}

/// R_0/n at the symmetric split m_i = m/r.
inline double finite_rate_single(double n, double m, int r) {
  detail::check_r(r);
  if (!(m > 0 && m < n)) throw domain_error("finite_rate_single: need 0 < m < n");
  std::vector<double> parts(r, m / r);
  return finite_rate_composition(n, parts);
}

struct SComponents {
  double LM = 0, LA = 0, LE = 0, LB = 0, LD = 0, LT = 0;

  /// The row-link and column-link blocks contribute equally.
  double total() const { return LM + LA + LE + 2 * LB + LD + LT; }
};

/// Point in the (a, b, d, e) density space of the dominant profile.
struct ProfileDensities {
  double a = 0, b = 0, d = 0, e = 0;
};

namespace detail {

struct Feasibility {
  double value;
  const char* inequality;
};

inline std::optional<std::string> infeasibility(double p, double q, int r,
                                                const ProfileDensities& x) {
  const Feasibility checks[] = {
      {p, "m >= 0"},
      {q, "m' >= 0"},
      {x.a, "a >= 0"},
      {x.b, "b >= 0"},
      {x.d, "d >= 0"},
      {x.e, "e >= 0"},
      {1 - p - x.a, "a <= n - m"},
      {1 - p - x.a - x.b, "a + b + m <= n"},
      {p - x.e, "e_i <= m_i"},
      {p - x.e - x.b, "e_i + b~_i <= m_i"},
      {p - x.e - x.b - x.d, "e_i + b~_i + l~_i <= m_i"},
      {1 - (p + x.a + 2 * x.b + x.d) / r, "m_i + a_i + b_i + c_i + d_i <= n"},
  };
  for (const auto& c : checks)
    if (std::isnan(c.value) || c.value < 0) return std::string(c.inequality);
  return std::nullopt;
}

}  // namespace detail

/// The six Stirling blocks of S/n at the symmetric profile with b = c.
inline SComponents s_components(double p, double q, int r, const ProfileDensities& x) {
  detail::check_r(r);
  if (r < 2) throw domain_error("s_components: r must be >= 2");
  if (auto bad = detail::infeasibility(p, q, r, x))
    throw domain_error("infeasible point: violates " + *bad);
  const auto F = stirling_F;
  const double rr = r;
  const double pairs = rr * (rr - 1);
  SComponents s;
  s.LM = -rr * F(1) + 2 * F(1) - 2 * F(1 - p) - rr * F(p / rr);
  s.LA = 2 * F(1 - p) - 2 * F(1 - p - x.a) - rr * F(x.a / rr);
  s.LE = rr * F(p / rr) - rr * F((p - x.e) / rr) - rr * F(x.e / rr);
  s.LB = F(1 - p - x.a) - F(1 - p - x.a - x.b) - pairs * F(x.b / pairs) +
         rr * F((p - x.e) / rr) - rr * F((p - x.e - x.b) / rr);
  s.LD = 2 * rr * F((p - x.e - x.b) / rr) - 2 * pairs * F(x.d / pairs) + rr * F(x.d / rr) -
         2 * rr * F((p - x.e - x.b - x.d) / rr);
  s.LT = rr * F(1 - (p + x.a + 2 * x.b + x.d) / rr);
  return s;
}

struct StationarySolution {
  double a = 0, b = 0, d = 0, e = 0;
  double L = 0;
  double S_over_n = 0;
  std::array<double, 5> residuals{};
  int iterations = 0;
  std::string init = "analytic";

  ProfileDensities densities() const { return {a, b, d, e}; }
  double residual_max() const {
    double m = 0;
    for (double v : residuals) m = std::max(m, std::abs(v));
    return m;
  }
};

/// Root-finder did not reach tolerance; carries the best point seen.
class solver_failure : public std::runtime_error {
 public:
  solver_failure(const std::string& what, StationarySolution best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const StationarySolution& best() const { return best_; }

 private:
  StationarySolution best_;
};

/// Left sides of the four stationarity conditions, each divided by its
/// first term, and the constraint a + e + 2b + d - q.
inline std::array<double, 5> stationarity_residuals(const ProfileDensities& x, double L, double p,
                                                    double q, int r) {
  if (r < 2) throw domain_error("stationarity_residuals: r must be >= 2");
  if (auto bad = detail::infeasibility(p, q, r, x))
    throw domain_error("infeasible point: violates " + *bad);
  const double rr = r;
  const double free_cols = 1 - p - x.a - x.b;
  const double tail = 1 - (p + x.a + 2 * x.b + x.d) / rr;
  const double u = (p - x.e - x.b - x.d) / rr;
  auto rel = [](double lead, double other) {
    return lead == 0 ? other : (lead - other) / std::abs(lead);
  };
  return {
      rel(free_cols * free_cols, L * (x.a / rr) * tail),
      rel(free_cols * u, L * (x.b / (rr * (rr - 1))) * tail),
      rel(u * u, L * x.d / (rr * (rr - 1) * (rr - 1)) * tail),
      rel(u * u, L * ((p - x.e) / rr) * (x.e / rr)),
      x.a + x.e + 2 * x.b + x.d - q,
  };
}

namespace detail {
inline void check_open_unit(double p, double q, int r) {
  if (!(p > 0 && p < 1) || !(q > 0 && q < 1))
    throw domain_error("need 0 < p < 1 and 0 < q < 1");
  if (r < 2) throw domain_error("need r >= 2");
}

inline StationarySolution finish(StationarySolution s, double p, double q, int r) {
  s.residuals = stationarity_residuals(s.densities(), s.L, p, q, r);
  s.S_over_n = s_components(p, q, r, s.densities()).total();
  return s;
}
}  // namespace detail

/// Closed-form stationary point.
inline StationarySolution analytic_solution(double p, double q, int r) {
  detail::check_open_unit(p, q, r);
  const double rr = r;
  StationarySolution s;
  s.a = q * (1 - p) * (1 - p) * rr / (rr - p);
  s.b = (1 - p) * (rr - 1) * p * q / (rr - p);
  s.d = (rr - 1) * (rr - 1) * p * p * q / (rr * (rr - p));
  s.e = p * q / rr;
  s.L = (1 - q) * (1 - q) * rr * rr / (q * (rr - q));
  s.init = "analytic";
  return detail::finish(s, p, q, r);
}

struct SolverOptions {
  std::optional<ProfileDensities> init;  // default a = q/2, b = d = e = q/8
  double init_L = 1.0;
  double tol = 1e-10;
  int max_iterations = 200;
};

namespace detail {

using Vec5 = Eigen::Matrix<double, 5, 1>;

// Log-space residuals: the four stationarity conditions as ln(lead) -
// ln(other), and the constraint relative to q.
inline std::optional<Vec5> log_residuals(const Vec5& z, double p, double q, int r) {
  const double a = std::exp(z[0]), b = std::exp(z[1]), d = std::exp(z[2]), e = std::exp(z[3]);
  const double lnL = z[4];
  const ProfileDensities x{a, b, d, e};
  if (infeasibility(p, q, r, x)) return std::nullopt;
  const double rr = r;
  const double free_cols = 1 - p - a - b;
  const double tail = 1 - (p + a + 2 * b + d) / rr;
  const double u = (p - e - b - d) / rr;
  if (free_cols <= 0 || tail <= 0 || u <= 0 || p - e <= 0) return std::nullopt;
  Vec5 g;
  g[0] = 2 * std::log(free_cols) - lnL - std::log(a / rr) - std::log(tail);
  g[1] = std::log(free_cols) + std::log(u) - lnL - std::log(b / (rr * (rr - 1))) - std::log(tail);
  g[2] = 2 * std::log(u) - lnL - std::log(d / (rr * (rr - 1) * (rr - 1))) - std::log(tail);
  g[3] = 2 * std::log(u) - lnL - std::log((p - e) / rr) - std::log(e / rr);
  g[4] = (a + e + 2 * b + d) / q - 1;
  return g;
}

inline std::optional<StationarySolution> newton(const ProfileDensities& x0, double L0, double p,
                                                double q, int r, const SolverOptions& opt,
                                                StationarySolution& best) {
  if (x0.a <= 0 || x0.b <= 0 || x0.d <= 0 || x0.e <= 0 || L0 <= 0) return std::nullopt;
  Vec5 z;
  z << std::log(x0.a), std::log(x0.b), std::log(x0.d), std::log(x0.e), std::log(L0);
  auto g = log_residuals(z, p, q, r);
  if (!g) return std::nullopt;

  auto to_solution = [&](const Vec5& v, int it) {
    StationarySolution s;
    s.a = std::exp(v[0]);
    s.b = std::exp(v[1]);
    s.d = std::exp(v[2]);
    s.e = std::exp(v[3]);
    s.L = std::exp(v[4]);
    s.iterations = it;
    return finish(s, p, q, r);
  };

  for (int it = 1; it <= opt.max_iterations; ++it) {
    Eigen::Matrix<double, 5, 5> J;
    for (int k = 0; k < 5; ++k) {
      const double h = 1e-6;
      Vec5 zp = z, zm = z;
      zp[k] += h;
      zm[k] -= h;
      auto gp = log_residuals(zp, p, q, r);
      auto gm = log_residuals(zm, p, q, r);
      if (!gp || !gm) return std::nullopt;
      J.col(k) = (*gp - *gm) / (2 * h);
    }
    const Vec5 step = J.fullPivLu().solve(-*g);
    if (!step.allFinite()) return std::nullopt;

    double t = 1.0;
    std::optional<Vec5> g_next;
    Vec5 z_next;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      z_next = z + t * step;
      g_next = log_residuals(z_next, p, q, r);
      if (g_next && g_next->norm() < (1 - 1e-4 * t) * g->norm()) break;
      g_next.reset();
    }
    if (!g_next) {
      // no descent: either converged to roundoff or stuck
      auto s = to_solution(z, it);
      if (s.residual_max() < best.residual_max() || best.iterations == 0) best = s;
      return s.residual_max() < opt.tol ? std::optional(s) : std::nullopt;
    }
    z = z_next;
    g = g_next;
    auto s = to_solution(z, it);
    if (best.iterations == 0 || s.residual_max() < best.residual_max()) best = s;
    if (s.residual_max() < opt.tol && (t * step).norm() < 1e-13) return s;
  }
  auto s = to_solution(z, opt.max_iterations);
  return s.residual_max() < opt.tol ? std::optional(s) : std::nullopt;
}

}  // namespace detail

/// Damped Newton in log variables (ln a, ln b, ln d, ln e, ln L) on the
/// five stationarity conditions. Start points, in order: the caller's (or
/// the default a = q/2, b = d = e = q/8, L = 1), a fixed multistart of
/// feasible splits of q, and finally the closed form perturbed by 10%.
inline StationarySolution solve_stationary(double p, double q, int r,
                                           const SolverOptions& opt = {}) {
  detail::check_open_unit(p, q, r);
  StationarySolution best;
  best.residuals.fill(std::numeric_limits<double>::infinity());

  if (opt.init) {
    if (auto bad = detail::infeasibility(p, q, r, *opt.init))
      throw domain_error("solve_stationary: infeasible initial point violates " + *bad);
    if (auto s = detail::newton(*opt.init, opt.init_L, p, q, r, opt, best)) {
      s->init = "user";
      return *s;
    }
  } else {
    ProfileDensities x{q / 2, q / 8, q / 8, q / 8};
    if (auto s = detail::newton(x, opt.init_L, p, q, r, opt, best)) {
      s->init = "default";
      return *s;
    }
    // Generic multistart: split a multiple of q over (a, e, 2b, d) by fixed
    // weights and take L from the coincide condition at that point.
    constexpr double kSplits[][4] = {{4, 1, 2, 1}, {1, 1, 1, 1}, {1, 4, 2, 1}, {1, 2, 2, 4},
                                     {8, 1, 1, 1}, {1, 8, 1, 1}, {1, 1, 8, 1}, {1, 1, 1, 8},
                                     {1, 4, 2, 4}, {1, 8, 2, 6}};
    for (double scale : {1.0, 0.5, 0.25, 0.1}) {
      for (const auto& w : kSplits) {
        const double sum = w[0] + w[1] + w[2] + w[3];
        ProfileDensities y;
        y.e = q * scale * w[1] / sum;
        y.b = q * scale * w[2] / sum / 2;
        y.d = q * scale * w[3] / sum;
        y.a = q * scale * w[0] / sum;
        if (detail::infeasibility(p, q, r, y)) continue;
        const double u = (p - y.e - y.b - y.d) / r;
        const double L0 = u * u / (((p - y.e) / r) * (y.e / r));
        if (!(L0 > 0) || !std::isfinite(L0)) continue;
        if (auto s = detail::newton(y, L0, p, q, r, opt, best)) {
          s->init = "multistart";
          return *s;
        }
      }
    }
  }
  const auto ref = analytic_solution(p, q, r);
  const ProfileDensities x{ref.a * 1.1, ref.b * 0.9, ref.d * 1.1, ref.e * 0.9};
  if (!detail::infeasibility(p, q, r, x)) {
    if (auto s = detail::newton(x, ref.L * 1.1, p, q, r, opt, best)) {
      s->init = "perturbed-analytic";
      return *s;
    }
  }
  throw solver_failure("solve_stationary: no convergence at p=" + std::to_string(p) +
                           ", q=" + std::to_string(q) + ", r=" + std::to_string(r),
                       best);
}

/// lim (1/n) ln E(perm_{pn} perm_{qn}) from the closed-form stationary point.
inline double product_rate(double p, double q, int r) {
  return analytic_solution(p, q, r).S_over_n;
}

/// Same limit from the numerically solved stationary point.
inline double product_rate_numeric(double p, double q, int r, const SolverOptions& opt = {}) {
  return solve_stationary(p, q, r, opt).S_over_n;
}

/// S/n as a function of (a, b, d, e).
inline double s_over_n(double p, double q, int r, const ProfileDensities& x) {
  return s_components(p, q, r, x).total();
}

/// Hessian of S/n restricted to the constraint plane a + e + 2b + d = q,
/// by central differences in a fixed orthonormal tangent basis.
inline Eigen::Matrix3d constrained_hessian(double p, double q, int r, const ProfileDensities& x,
                                           double h = 1e-4) {
  Eigen::Vector4d normal(1, 2, 1, 1);  // (a, b, d, e)
  normal.normalize();
  Eigen::Matrix4d seed = Eigen::Matrix4d::Identity();
  seed.col(0) = normal;
  const Eigen::Matrix4d G = Eigen::HouseholderQR<Eigen::Matrix4d>(seed).householderQ();
  const Eigen::Matrix<double, 4, 3> T = G.rightCols<3>();
  auto f = [&](const Eigen::Vector3d& y) {
    const Eigen::Vector4d v = Eigen::Vector4d(x.a, x.b, x.d, x.e) + T * y;
    return s_over_n(p, q, r, {v[0], v[1], v[2], v[3]});
  };
  Eigen::Matrix3d H;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      Eigen::Vector3d ei = Eigen::Vector3d::Unit(i) * h, ej = Eigen::Vector3d::Unit(j) * h;
      const double v = (f(ei + ej) - f(ei - ej) - f(-ei + ej) + f(-ei - ej)) / (4 * h * h);
      H(i, j) = H(j, i) = v;
    }
  return H;
}

/// True when the constrained Hessian at the closed-form stationary point is
/// negative definite.
inline bool stationary_point_is_local_max(double p, double q, int r) {
  const auto s = analytic_solution(p, q, r);
  const double h = 1e-4 * std::min({s.a, s.b, s.d, s.e, 1.0});
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(constrained_hessian(p, q, r, s.densities(), h));
  return eig.eigenvalues().maxCoeff() < 0;
}

}  // namespace permex
