#pragma once

// JSON and CSV emission for CLI reports. Rationals travel as decimal
// numerator/denominator strings; key order is fixed by insertion.

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "permex/asymptotics.hpp"
#include "permex/exact_moments.hpp"
#include "permex/montecarlo.hpp"
#include "permex/numeric.hpp"

namespace permex {

using ojson = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// %.17g round-trips every IEEE double.
inline std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_real(const std::string& s) { return std::stod(s); }

inline ojson to_ojson(const ExactMoment& x) {
  return ojson{{"n", x.n},
               {"r", x.r},
               {"m", x.m},
               {"m2", x.m2},
               {"value_num", numerator_str(x.value)},
               {"value_den", denominator_str(x.value)},
               {"terms", x.terms}};
}

inline ExactMoment exact_moment_from_json(const nlohmann::json& j) {
  ExactMoment x;
  x.n = j.at("n").get<int>();
  x.r = j.at("r").get<int>();
  x.m = j.at("m").get<int>();
  x.m2 = j.at("m2").get<int>();
  x.value = parse_rational(j.at("value_num").get<std::string>(),
                           j.at("value_den").get<std::string>());
  x.terms = j.at("terms").get<std::uint64_t>();
  return x;
}

inline ojson to_ojson(const LinkMatrix& x) {
  ojson rows = ojson::array();
  for (int i = 0; i < x.colors(); ++i) {
    ojson row = ojson::array();
    for (int k = 0; k < x.colors(); ++k) row.push_back(x(i, k));
    rows.push_back(row);
  }
  return rows;
}

inline ojson to_ojson(const ColorProfile& p) {
  return ojson{{"m_count", p.m_count},
               {"disjoint", p.disjoint},
               {"coincide", p.coincide},
               {"row_link", to_ojson(p.row_link)},
               {"col_link", to_ojson(p.col_link)},
               {"inner_row", to_ojson(p.inner_row)},
               {"inner_col", to_ojson(p.inner_col)},
               {"totals",
                {{"a", p.disjoint_total()},
                 {"e", p.coincide_total()},
                 {"b", p.row_link_total()},
                 {"c", p.col_link_total()},
                 {"d", p.inner_total()}}}};
}

inline ojson to_ojson(const StationarySolution& s, double p, double q, int r) {
  ojson res = ojson::array();
  for (double v : s.residuals) res.push_back(v);
  return ojson{{"p", p},
               {"q", q},
               {"r", r},
               {"a", s.a},
               {"b", s.b},
               {"d", s.d},
               {"e", s.e},
               {"L", s.L},
               {"rate", s.S_over_n},
               {"residuals", res},
               {"residual_max", s.residual_max()},
               {"iterations", s.iterations},
               {"init", s.init}};
}

inline ojson to_ojson(const MCEstimate& e) {
  return ojson{{"n", e.n},
               {"r", e.r},
               {"m", e.m},
               {"m2", e.m2},
               {"samples", e.samples},
               {"enumerated", e.enumerated},
               {"mean_num", numerator_str(e.exact_mean)},
               {"mean_den", denominator_str(e.exact_mean)},
               {"mean", e.mean},
               {"stderr", e.stderr_},
               {"log_mean_over_n", e.log_mean_over_n},
               {"mean_log_over_n", e.mean_log_over_n}};
}

inline ojson to_ojson(const ScanRow& row) {
  return ojson{{"n", row.n},
               {"m", row.m},
               {"m2", row.m2},
               {"estimate", to_ojson(row.product)},
               {"prediction", row.prediction},
               {"gap", row.gap}};
}

/// Report envelope: schema version first, then the named command.
inline ojson envelope(const std::string& command) {
  return ojson{{"schema_version", kSchemaVersion}, {"command", command}};
}

// ---- CSV -------------------------------------------------------------------

inline std::string csv_line(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
  return out;
}

inline const std::vector<std::string>& exact_csv_header() {
  static const std::vector<std::string> h{"n",         "r",         "m",          "m2",
                                          "value_num", "value_den", "value_float", "terms"};
  return h;
}

inline std::vector<std::string> exact_csv_row(const ExactMoment& x) {
  return {std::to_string(x.n),       std::to_string(x.r),         std::to_string(x.m),
          std::to_string(x.m2),      numerator_str(x.value),      denominator_str(x.value),
          format_real(to_double(x.value)), std::to_string(x.terms)};
}

inline const std::vector<std::string>& rate_csv_header() {
  static const std::vector<std::string> h{"p", "q", "r", "a",    "b",
                                          "d", "e", "L", "rate", "residual_max"};
  return h;
}

inline std::vector<std::string> rate_csv_row(const StationarySolution& s, double p, double q,
                                             int r) {
  return {format_real(p),   format_real(q),   std::to_string(r), format_real(s.a),
          format_real(s.b), format_real(s.d), format_real(s.e),  format_real(s.L),
          format_real(s.S_over_n), format_real(s.residual_max())};
}

inline const std::vector<std::string>& mc_csv_header() {
  static const std::vector<std::string> h{
      "statistic", "n",    "r",      "m",      "m2",           "samples", "enumerated",
      "mean_num",  "mean_den", "mean", "stderr", "log_mean_over_n", "mean_log_over_n"};
  return h;
}

inline std::vector<std::string> mc_csv_row(const std::string& statistic, const MCEstimate& e) {
  return {statistic,
          std::to_string(e.n),
          std::to_string(e.r),
          std::to_string(e.m),
          std::to_string(e.m2),
          std::to_string(e.samples),
          e.enumerated ? "1" : "0",
          numerator_str(e.exact_mean),
          denominator_str(e.exact_mean),
          format_real(e.mean),
          format_real(e.stderr_),
          format_real(e.log_mean_over_n),
          format_real(e.mean_log_over_n)};
}

}  // namespace permex
