#pragma once

#include "dataset.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace dualmargin {

/// Per-iteration diagnostics. Quantities that do not apply to a method are NaN.
struct TraceRow {
  std::size_t t = 0;
  double margin = 0.0;
  double neg_psi = 0.0;  // -psi(Z w_t)
  double w_norm = 0.0;
  double phi_mu = std::numeric_limits<double>::quiet_NaN();
  double cert_lower = std::numeric_limits<double>::quiet_NaN();
  double cert_upper = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t kernel_calls = 0;
  std::int64_t wall_ns = 0;
};

inline constexpr const char* kTraceHeader = "t,margin,neg_psi,w_norm,phi_mu,cert_lower,cert_upper,kernel_calls,wall_ns";

/// 17 significant digits, so that parsing reproduces the double exactly.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

// strtod rather than std::stod: subnormal values must parse, not throw.
inline double parse_trace_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw std::invalid_argument("bad number");
  return v;
}

}  // namespace detail

inline void write_trace_row(std::ostream& out, const TraceRow& r) {
  out << r.t << ',' << format_double(r.margin) << ',' << format_double(r.neg_psi) << ',' << format_double(r.w_norm)
      << ',' << format_double(r.phi_mu) << ',' << format_double(r.cert_lower) << ',' << format_double(r.cert_upper)
      << ',' << r.kernel_calls << ',' << r.wall_ns << '\n';
}

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << kTraceHeader << '\n';
  for (const auto& r : rows) write_trace_row(out, r);
}

inline std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw DataError("missing or unexpected trace header", 1);
  std::vector<TraceRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 9) throw DataError("expected 9 trace fields", lineno);
    try {
      TraceRow r;
      r.t = std::stoull(f[0]);
      r.margin = detail::parse_trace_double(f[1]);
      r.neg_psi = detail::parse_trace_double(f[2]);
      r.w_norm = detail::parse_trace_double(f[3]);
      r.phi_mu = detail::parse_trace_double(f[4]);
      r.cert_lower = detail::parse_trace_double(f[5]);
      r.cert_upper = detail::parse_trace_double(f[6]);
      r.kernel_calls = std::stoull(f[7]);
      r.wall_ns = std::stoll(f[8]);
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw DataError("malformed trace row", lineno);
    }
  }
  return rows;
}

}  // namespace dualmargin
