#pragma once

// Numeric CSV input and output: comma separated, '.' decimal point, optional
// single header row, fields optionally wrapped in double quotes.

#include "error.hpp"
#include "sample_set.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace lsdd {

namespace detail {

inline std::string_view
trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view>
split_fields(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return out;
}

} // namespace detail

inline SampleSet
parse_csv(std::istream& in, bool has_header, const std::string& source = "<stream>")
{
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (detail::trim(line).empty()) {
      continue;
    }
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto fields = detail::split_fields(line);
    if (cols < 0) {
      cols = static_cast<Index>(fields.size());
    } else if (static_cast<Index>(fields.size()) != cols) {
      throw DataError(source + ": row " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(cols));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      auto f = fields[c];
      if (f.size() >= 2 && f.front() == '"' && f.back() == '"') {
        f = detail::trim(f.substr(1, f.size() - 2));
      }
      if (!f.empty() && f.front() == '+') {
        f.remove_prefix(1);
      }
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || res.ec != std::errc() || res.ptr != f.data() + f.size() ||
          !std::isfinite(v)) {
        throw DataError(source + ": row " + std::to_string(line_no) + ", column " +
                        std::to_string(c + 1) + ": not a finite number: '" +
                        std::string(fields[c]) + "'");
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (rows == 0) {
    throw DataError(source + ": no data rows");
  }
  PointMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index k = 0; k < cols; ++k) {
      m(i, k) = values[static_cast<std::size_t>(i * cols + k)];
    }
  }
  return SampleSet(std::move(m));
}

inline SampleSet
load_csv(const std::string& path, bool has_header)
{
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open '" + path + "'");
  }
  return parse_csv(in, has_header, path);
}

//! Writes with 17 significant digits, which round-trips doubles exactly.
inline void
write_csv(std::ostream& out, const PointMatrix& points,
          const std::vector<std::string>& header = {})
{
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      out << (c ? "," : "") << header[c];
    }
    out << '\n';
  }
  out << std::setprecision(17);
  for (Index i = 0; i < points.rows(); ++i) {
    for (Index k = 0; k < points.cols(); ++k) {
      out << (k ? "," : "") << points(i, k);
    }
    out << '\n';
  }
}

inline void
save_csv(const std::string& path, const PointMatrix& points,
         const std::vector<std::string>& header = {})
{
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write '" + path + "'");
  }
  write_csv(out, points, header);
  if (!out) {
    throw DataError("write failed for '" + path + "'");
  }
}

} // namespace lsdd
