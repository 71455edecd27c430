#pragma once

// `permex` command-line dispatcher. Exit codes: 0 success, 1 usage or
// domain error, 2 capacity or solver failure, 3 a verify suite found a
// mismatch.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "permex/permex.hpp"

namespace permex::cli {

enum ExitCode : int { kOk = 0, kDomain = 1, kCapacity = 2, kCheckFailed = 3 };

struct RunConfig {
  std::string subcommand;
  int n = 0;
  int r = 0;
  int m = 0;
  int m2 = 0;
  double p = 0;
  std::optional<double> q;
  std::uint64_t samples = 10000;
  std::uint64_t seed = 0;
  std::optional<double> tol;
  std::string format = "json";
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::optional<std::uint64_t> budget;
  std::string suite;
  std::string n_list = "8,10,12";
  std::optional<int> r_opt;
  std::optional<int> n_opt;
};

namespace detail {

inline std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used != tok.size()) throw invalid_input("bad integer list entry '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw invalid_input("empty integer list");
  return out;
}

inline std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

inline std::string header_and_rows(const std::vector<std::string>& header,
                                   const std::vector<std::vector<std::string>>& rows) {
  std::string out = csv_line(header);
  for (const auto& row : rows) out += csv_line(row);
  return out;
}

inline std::vector<double> unit_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 9; ++i) g.push_back(i / 10.0);
  return g;
}

struct SuiteResult {
  ojson report;
  std::string csv;
  bool pass = true;
};

inline std::vector<int> suite_rs(const RunConfig& c) {
  if (c.r_opt) return {*c.r_opt};
  return {2, 3, 4, 5, 6};
}

inline SuiteResult suite_factorization(const RunConfig& c) {
  const double tol_analytic = c.tol.value_or(1e-9);
  const double tol_numeric = 1e-6;
  SuiteResult res;
  ojson points = ojson::array();
  std::vector<std::vector<std::string>> rows;
  double worst_a = 0, worst_n = 0;
  for (int r : suite_rs(c))
    for (double p : unit_grid())
      for (double q : unit_grid()) {
        const auto s = analytic_solution(p, q, r);
        const double sum = single_rate(p, r) + single_rate(q, r);
        const double gap_a = std::abs(s.S_over_n - sum);
        const double gap_n = std::abs(product_rate_numeric(p, q, r) - sum);
        worst_a = std::max(worst_a, gap_a);
        worst_n = std::max(worst_n, gap_n);
        points.push_back(ojson{{"p", p},
                               {"q", q},
                               {"r", r},
                               {"product_rate", s.S_over_n},
                               {"single_sum", sum},
                               {"analytic_gap", gap_a},
                               {"numeric_gap", gap_n},
                               {"residual_max", s.residual_max()}});
        auto row = rate_csv_row(s, p, q, r);
        row.push_back(format_real(gap_a));
        row.push_back(format_real(gap_n));
        rows.push_back(std::move(row));
      }
  res.pass = worst_a < tol_analytic && worst_n < tol_numeric;
  res.report = ojson{{"tolerance_analytic", tol_analytic},
                     {"tolerance_numeric", tol_numeric},
                     {"max_analytic_gap", worst_a},
                     {"max_numeric_gap", worst_n},
                     {"pass", res.pass},
                     {"points", points}};
  auto header = rate_csv_header();
  header.push_back("analytic_gap");
  header.push_back("numeric_gap");
  res.csv = header_and_rows(header, rows);
  return res;
}

inline SuiteResult suite_stationarity(const RunConfig& c) {
  const double tol = c.tol.value_or(1e-9);
  SuiteResult res;
  ojson points = ojson::array();
  std::vector<std::vector<std::string>> rows;
  double worst = 0;
  for (int r : suite_rs(c))
    for (double p : unit_grid())
      for (double q : unit_grid()) {
        const auto s = analytic_solution(p, q, r);
        worst = std::max(worst, s.residual_max());
        points.push_back(to_ojson(s, p, q, r));
        rows.push_back(rate_csv_row(s, p, q, r));
      }
  res.pass = worst < tol;
  res.report = ojson{{"tolerance", tol}, {"max_residual", worst}, {"pass", res.pass},
                     {"points", points}};
  res.csv = header_and_rows(rate_csv_header(), rows);
  return res;
}

inline SuiteResult suite_solver(const RunConfig& c) {
  const double tol = c.tol.value_or(1e-8);
  SuiteResult res;
  ojson points = ojson::array();
  std::vector<std::vector<std::string>> rows;
  StreamRng rng(c.seed, 0);
  auto uniform = [&] { return 0.05 + 0.9 * static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  double worst = 0;
  for (int k = 0; k < 20; ++k) {
    const double p = uniform(), q = uniform();
    const int r = c.r_opt ? *c.r_opt : 2 + static_cast<int>(rng.bounded(5));
    const auto a = analytic_solution(p, q, r);
    const auto s = solve_stationary(p, q, r);
    const double diff = std::max({std::abs(a.a - s.a), std::abs(a.b - s.b), std::abs(a.d - s.d),
                                  std::abs(a.e - s.e), std::abs(a.L - s.L)});
    worst = std::max(worst, diff);
    auto j = to_ojson(s, p, q, r);
    j["max_coordinate_diff"] = diff;
    points.push_back(j);
    rows.push_back(rate_csv_row(s, p, q, r));
  }
  res.pass = worst < tol;
  res.report = ojson{{"tolerance", tol}, {"max_coordinate_diff", worst}, {"pass", res.pass},
                     {"points", points}};
  res.csv = header_and_rows(rate_csv_header(), rows);
  return res;
}

inline SuiteResult suite_oracle(const RunConfig& c) {
  if (!c.n_opt || !c.r_opt) throw invalid_input("verify --suite oracle needs --n and --r");
  const int n = *c.n_opt, r = *c.r_opt;
  PermanentLimits lim;
  if (c.budget) lim.tuple_budget = *c.budget;
  const auto sums = ensemble_moment_sums(n, r, c.threads, lim);
  const BigInt pop = tuple_count(n, r);
  SuiteResult res;
  ojson points = ojson::array();
  std::vector<std::vector<std::string>> rows;
  for (int m = 0; m <= n; ++m)
    for (int m2 = 0; m2 <= n; ++m2) {
      const Rational oracle(sums[m][m2], pop);
      const auto formula =
          expectation_product(n, r, m, m2, c.threads, c.budget.value_or(kDefaultProfileBudget));
      bool ok = formula.value == oracle;
      if (m2 == 0) ok = ok && expectation_perm(n, r, m).value == oracle;
      res.pass = res.pass && ok;
      auto j = to_ojson(formula);
      j["oracle_num"] = numerator_str(oracle);
      j["oracle_den"] = denominator_str(oracle);
      j["equal"] = ok;
      points.push_back(j);
      rows.push_back(exact_csv_row(formula));
    }
  res.report = ojson{{"n", n}, {"r", r}, {"pass", res.pass}, {"points", points}};
  res.csv = header_and_rows(exact_csv_header(), rows);
  return res;
}

inline ojson moment_report(const std::string& cmd, const ExactMoment& x) {
  auto j = envelope(cmd);
  j.update(to_ojson(x));
  return j;
}

}  // namespace detail

/// Runs one subcommand on an already-validated config.
inline int execute(const RunConfig& c, std::ostream& out) {
  using namespace detail;
  const bool csv = c.format == "csv";
  const std::uint64_t profile_budget = c.budget.value_or(kDefaultProfileBudget);
  const auto& s = c.subcommand;

  if (s == "expect" || s == "product" || s == "oracle") {
    ExactMoment x;
    if (s == "expect") {
      x = expectation_perm(c.n, c.r, c.m);
    } else if (s == "product") {
      x = expectation_product(c.n, c.r, c.m, c.m2, c.threads, profile_budget);
    } else {
      PermanentLimits lim;
      if (c.budget) lim.tuple_budget = *c.budget;
      x = ensemble_average_bruteforce(c.n, c.r, c.m, c.m2, c.threads, lim);
    }
    out << (csv ? header_and_rows(exact_csv_header(), {exact_csv_row(x)})
                : dump(moment_report(s, x)));
    return kOk;
  }

  if (s == "rate") {
    const double single = single_rate(c.p, c.r);
    if (csv) {
      if (c.q) {
        const auto sol = analytic_solution(c.p, *c.q, c.r);
        out << header_and_rows(rate_csv_header(), {rate_csv_row(sol, c.p, *c.q, c.r)});
      } else {
        out << header_and_rows({"p", "r", "rate"},
                               {{format_real(c.p), std::to_string(c.r), format_real(single)}});
      }
      return kOk;
    }
    auto j = envelope(s);
    j["r"] = c.r;
    j["p"] = c.p;
    j["rate"] = single;
    if (c.q) {
      const double single_q = single_rate(*c.q, c.r);
      const double prod = product_rate(c.p, *c.q, c.r);
      j["q"] = *c.q;
      j["rate_q"] = single_q;
      j["product_rate"] = prod;
      j["factorization_gap"] = prod - single - single_q;
    }
    out << dump(j);
    return kOk;
  }

  if (s == "solve" || s == "analytic") {
    const double q = c.q.value_or(0);
    StationarySolution sol;
    if (s == "analytic") {
      sol = analytic_solution(c.p, q, c.r);
    } else {
      SolverOptions opt;
      if (c.tol) opt.tol = *c.tol;
      sol = solve_stationary(c.p, q, c.r, opt);
    }
    if (csv) {
      out << header_and_rows(rate_csv_header(), {rate_csv_row(sol, c.p, q, c.r)});
    } else {
      auto j = envelope(s);
      j.update(to_ojson(sol, c.p, q, c.r));
      j["single_rate_sum"] = single_rate(c.p, c.r) + single_rate(q, c.r);
      out << dump(j);
    }
    return kOk;
  }

  if (s == "mc") {
    MonteCarloOptions opt;
    opt.threads = c.threads;
    const auto est = estimate_moments(EnsembleSpec(c.n, c.r, c.seed), c.m, c.m2, c.samples, opt);
    if (csv) {
      out << header_and_rows(mc_csv_header(), {mc_csv_row("perm_m", est.first),
                                               mc_csv_row("perm_m2", est.second),
                                               mc_csv_row("product", est.product)});
    } else {
      auto j = envelope(s);
      j["seed"] = c.seed;
      j["perm_m"] = to_ojson(est.first);
      j["perm_m2"] = to_ojson(est.second);
      j["product"] = to_ojson(est.product);
      out << dump(j);
    }
    return kOk;
  }

  if (s == "scan") {
    MonteCarloOptions opt;
    opt.threads = c.threads;
    const double q = c.q.value_or(0);
    const auto rows = convergence_scan(c.r, c.p, q, parse_int_list(c.n_list), c.samples, c.seed, opt);
    if (csv) {
      std::vector<std::vector<std::string>> lines;
      for (const auto& row : rows) {
        auto cells = mc_csv_row("product", row.product);
        cells.push_back(format_real(row.prediction));
        cells.push_back(format_real(row.gap));
        lines.push_back(std::move(cells));
      }
      auto header = mc_csv_header();
      header.push_back("prediction");
      header.push_back("gap");
      out << header_and_rows(header, lines);
    } else {
      auto j = envelope(s);
      j["r"] = c.r;
      j["p"] = c.p;
      j["q"] = q;
      j["seed"] = c.seed;
      ojson arr = ojson::array();
      for (const auto& row : rows) arr.push_back(to_ojson(row));
      j["rows"] = arr;
      out << dump(j);
    }
    return kOk;
  }

  if (s == "argmax") {
    const auto best = argmax_profile(c.n, c.r, c.m, c.m2, profile_budget);
    if (csv) {
      const auto& p = best.profile;
      out << header_and_rows(
          {"n", "r", "m", "m2", "a", "e", "b", "c", "d", "value_num", "value_den", "terms"},
          {{std::to_string(c.n), std::to_string(c.r), std::to_string(c.m), std::to_string(c.m2),
            std::to_string(p.disjoint_total()), std::to_string(p.coincide_total()),
            std::to_string(p.row_link_total()), std::to_string(p.col_link_total()),
            std::to_string(p.inner_total()), numerator_str(best.value),
            denominator_str(best.value), std::to_string(best.terms)}});
    } else {
      auto j = envelope(s);
      j["n"] = c.n;
      j["r"] = c.r;
      j["m"] = c.m;
      j["m2"] = c.m2;
      j["profile"] = to_ojson(best.profile);
      j["value_num"] = numerator_str(best.value);
      j["value_den"] = denominator_str(best.value);
      j["terms"] = best.terms;
      out << dump(j);
    }
    return kOk;
  }

  if (s == "verify") {
    SuiteResult res;
    if (c.suite == "factorization") res = suite_factorization(c);
    else if (c.suite == "stationarity") res = suite_stationarity(c);
    else if (c.suite == "solver") res = suite_solver(c);
    else if (c.suite == "oracle") res = suite_oracle(c);
    else throw invalid_input("unknown suite '" + c.suite + "'");
    if (csv) {
      out << res.csv;
    } else {
      auto j = envelope(s);
      j["suite"] = c.suite;
      j.update(res.report);
      out << dump(j);
    }
    return res.pass ? kOk : kCheckFailed;
  }

  throw invalid_input("unknown subcommand '" + s + "'");
}

/// Parses argv-style arguments (without the program name), runs the
/// command and returns the process exit code.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Exact and asymptotic moments of subpermanents of permutation-sum matrices",
               "permex"};
  app.require_subcommand(1);

  auto fmt = [&](CLI::App* sub) {
    sub->add_option("--format", c.format, "Output format")
        ->check(CLI::IsMember({"json", "csv"}));
  };
  auto exact_dims = [&](CLI::App* sub, bool with_m2) {
    sub->add_option("--n", c.n, "Matrix dimension")->required();
    sub->add_option("--r", c.r, "Number of permutation matrices")->required();
    sub->add_option("--m", c.m, "Minor size m")->required();
    if (with_m2) sub->add_option("--m2", c.m2, "Second minor size m'")->required();
  };
  auto threads = [&](CLI::App* sub) {
    sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto budget = [&](CLI::App* sub) {
    sub->add_option("--budget", c.budget, "Enumeration budget (terms or tuples)");
  };

  auto* expect = app.add_subcommand("expect", "E(perm_m) from the composition sum");
  exact_dims(expect, false);
  fmt(expect);

  auto* product = app.add_subcommand("product", "E(perm_m perm_m') from the colour-profile sum");
  exact_dims(product, true);
  threads(product);
  budget(product);
  fmt(product);

  auto* oracle = app.add_subcommand("oracle", "E(perm_m perm_m') by enumerating all tuples");
  exact_dims(oracle, true);
  threads(oracle);
  budget(oracle);
  fmt(oracle);

  auto* rate = app.add_subcommand("rate", "Large-n rate of E(perm_pn), optionally of the product");
  rate->add_option("--r", c.r)->required();
  rate->add_option("--p", c.p)->required();
  rate->add_option("--q", c.q);
  fmt(rate);

  auto* solve = app.add_subcommand("solve", "Numerically solve the stationarity system");
  auto* analytic = app.add_subcommand("analytic", "Closed-form stationary point");
  for (auto* sub : {solve, analytic}) {
    sub->add_option("--p", c.p)->required();
    sub->add_option("--q", c.q)->required();
    sub->add_option("--r", c.r)->required();
    fmt(sub);
  }
  solve->add_option("--tol", c.tol, "Max relative residual");

  auto* mc = app.add_subcommand("mc", "Monte Carlo moment estimates");
  exact_dims(mc, true);
  mc->add_option("--samples", c.samples)->check(CLI::Range(std::uint64_t{2}, UINT64_MAX));
  mc->add_option("--seed", c.seed);
  threads(mc);
  fmt(mc);

  auto* scan = app.add_subcommand("scan", "Finite-n convergence scan toward the large-n rate");
  scan->add_option("--r", c.r)->required();
  scan->add_option("--p", c.p)->required();
  scan->add_option("--q", c.q);
  scan->add_option("--samples", c.samples)->check(CLI::Range(std::uint64_t{2}, UINT64_MAX));
  scan->add_option("--seed", c.seed);
  scan->add_option("--n-list", c.n_list, "Comma-separated dimensions");
  threads(scan);
  fmt(scan);

  auto* argmax = app.add_subcommand("argmax", "Largest colour-profile summand");
  exact_dims(argmax, true);
  budget(argmax);
  fmt(argmax);

  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->add_option("--suite", c.suite)
      ->required()
      ->check(CLI::IsMember({"factorization", "stationarity", "solver", "oracle"}));
  verify->add_option("--r", c.r_opt);
  verify->add_option("--n", c.n_opt);
  verify->add_option("--tol", c.tol);
  verify->add_option("--seed", c.seed);
  threads(verify);
  budget(verify);
  fmt(verify);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kDomain;
  }
  c.subcommand = app.get_subcommands().front()->get_name();

  try {
    return execute(c, out);
  } catch (const invalid_input& e) {
    err << "error: " << e.what() << "\n";
    return kDomain;
  } catch (const domain_error& e) {
    err << "error: " << e.what() << "\n";
    return kDomain;
  } catch (const capacity_error& e) {
    err << "capacity: " << e.what() << "\n";
    return kCapacity;
  } catch (const solver_failure& e) {
    err << "solver: " << e.what() << " (best residual " << e.best().residual_max() << ")\n";
    return kCapacity;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kDomain;
  }
}

}  // namespace permex::cli
