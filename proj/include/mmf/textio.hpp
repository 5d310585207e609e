#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "mmf/errors.hpp"

namespace mmf {

/// Shortest decimal form that parses back to the same double. All on-disk
/// numbers go through this so save/load roundtrips are bitwise lossless and
/// outputs are byte-deterministic.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw DataError(where + ": cannot parse number '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s, const std::string& where) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError(where + ": cannot parse integer '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string join_csv(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << content;
  if (!out) throw DataError("write failed: " + path);
}

/// Whitespace-separated tokens of one line.
inline std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> toks;
  std::string t;
  while (is >> t) toks.push_back(t);
  return toks;
}

inline std::vector<double> parse_double_list(const std::string& s,
                                             const std::string& where) {
  std::vector<double> out;
  for (const std::string& f : split_csv_line(s)) out.push_back(parse_double(f, where));
  return out;
}

inline std::vector<std::size_t> parse_size_list(const std::string& s,
                                                const std::string& where) {
  std::vector<std::size_t> out;
  for (const std::string& f : split_csv_line(s)) {
    long long v = parse_int(f, where);
    if (v < 0) throw DataError(where + ": expected non-negative integer, got '" + f + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

}  // namespace mmf
