#pragma once

#include "dataset.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace dualmargin {

// Readers for the sparse text format
//   <label> <index>:<value> <index>:<value> ...
// with 1-based strictly ascending indices, and for dense CSV with a leading
// label column. Blank lines and lines starting with '#' are skipped.

struct SparseRecord {
  int label = 0;
  std::vector<std::pair<std::size_t, double>> features;  // 0-based index
  std::size_t line = 0;
};

struct SparseFile {
  std::vector<SparseRecord> records;
  std::size_t dimension = 0;  // max index seen
};

namespace detail {

inline bool skippable(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

inline double parse_double(const std::string& token, std::size_t line, const char* what) {
  if (token.empty()) throw DataError(std::string("empty ") + what, line);
  const char* begin = token.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE)
    throw DataError(std::string("cannot parse ") + what + " '" + token + "'", line);
  if (!std::isfinite(v)) throw DataError(std::string("non-finite ") + what + " '" + token + "'", line);
  return v;
}

inline int parse_label(const std::string& token, std::size_t line) {
  const double v = parse_double(token, line, "label");
  if (v != std::floor(v) || std::abs(v) > 1e9) throw DataError("label '" + token + "' is not an integer", line);
  return static_cast<int>(v);
}

}  // namespace detail

inline SparseFile parse_sparse_text(std::istream& in) {
  SparseFile out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::skippable(line)) continue;
    std::istringstream tokens(line);
    std::string token;
    tokens >> token;
    SparseRecord rec;
    rec.line = lineno;
    rec.label = detail::parse_label(token, lineno);
    std::size_t prev = 0;
    while (tokens >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos || colon == 0)
        throw DataError("malformed feature '" + token + "', expected index:value", lineno);
      const std::string idx_str = token.substr(0, colon);
      char* end = nullptr;
      errno = 0;
      const unsigned long long idx = std::strtoull(idx_str.c_str(), &end, 10);
      if (*end != '\0' || errno == ERANGE || idx_str[0] == '-' || idx_str[0] == '+')
        throw DataError("malformed feature index '" + idx_str + "'", lineno);
      if (idx == 0) throw DataError("feature indices are 1-based", lineno);
      if (idx <= prev) throw DataError("feature indices must be strictly ascending", lineno);
      prev = static_cast<std::size_t>(idx);
      const double value = detail::parse_double(token.substr(colon + 1), lineno, "feature value");
      rec.features.emplace_back(prev - 1, value);
    }
    out.dimension = std::max(out.dimension, prev);
    out.records.push_back(std::move(rec));
  }
  return out;
}

/// Densifies binary-labeled records. Labels must be -1 or +1.
inline std::vector<LabeledInput> to_binary_inputs(const SparseFile& file, std::size_t min_dimension = 0) {
  const std::size_t d = std::max({file.dimension, min_dimension, std::size_t{1}});
  std::vector<LabeledInput> out;
  out.reserve(file.records.size());
  for (const auto& rec : file.records) {
    if (rec.label != 1 && rec.label != -1)
      throw DataError("label " + std::to_string(rec.label) + " outside {-1,+1}", rec.line);
    LabeledInput ex{Vector::Zero(static_cast<Eigen::Index>(d)), rec.label};
    for (const auto& [idx, value] : rec.features) ex.x[static_cast<Eigen::Index>(idx)] = value;
    out.push_back(std::move(ex));
  }
  return out;
}

inline std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

inline std::vector<LabeledInput> load_sparse_text(const std::string& path, std::size_t min_dimension = 0) {
  auto in = open_or_throw(path);
  return to_binary_inputs(parse_sparse_text(in), min_dimension);
}

/// Dense CSV: first column is the label, remaining columns are features. A
/// first line whose label field is not numeric is treated as a header.
inline SparseFile parse_csv(std::istream& in) {
  SparseFile out;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::skippable(line)) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      const auto b = field.find_first_not_of(" \t");
      const auto e = field.find_last_not_of(" \t");
      fields.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (first) {
      first = false;
      char* end = nullptr;
      std::strtod(fields.front().c_str(), &end);
      if (fields.front().empty() || *end != '\0') continue;
    }
    if (fields.size() < 2) throw DataError("expected a label and at least one feature", lineno);
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw DataError("expected " + std::to_string(width) + " fields, got " + std::to_string(fields.size()), lineno);
    SparseRecord rec;
    rec.line = lineno;
    rec.label = detail::parse_label(fields[0], lineno);
    for (std::size_t j = 1; j < fields.size(); ++j)
      rec.features.emplace_back(j - 1, detail::parse_double(fields[j], lineno, "feature value"));
    out.records.push_back(std::move(rec));
  }
  out.dimension = width == 0 ? 0 : width - 1;
  return out;
}

inline std::vector<LabeledInput> load_csv(const std::string& path) {
  auto in = open_or_throw(path);
  return to_binary_inputs(parse_csv(in));
}

/// One sparse text line; zero features are omitted, values use 17 significant digits.
inline void write_sparse_record(std::ostream& out, int label, const Vector& x) {
  out << label;
  char buf[64];
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x[j] == 0.0) continue;
    std::snprintf(buf, sizeof buf, " %lld:%.17g", static_cast<long long>(j + 1), x[j]);
    out << buf;
  }
  out << '\n';
}

inline void write_sparse_text(std::ostream& out, const std::vector<LabeledInput>& inputs) {
  for (const auto& ex : inputs) write_sparse_record(out, ex.y, ex.x);
}

}  // namespace dualmargin
