// Copyright 2026 The encdb Authors.
// SPDX-License-Identifier: Apache-2.0

// Table files: a header of `name:width` fields, then one row of unsigned
// decimal integers per line. Comma separated, no quoting, blank lines ignored.
//
//   model:12,speed:4,price:12
//   1001,3,2114

#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "encdb/table.hpp"

namespace encdb {

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    auto b = field.find_first_not_of(" \t\r");
    auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::uint64_t parse_u64(const std::string& s, std::size_t line) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw Error(Errc::kParseError, "line " + std::to_string(line) + ": '" + s +
                                       "' is not an unsigned integer");
  return v;
}

}  // namespace detail

/// A header field without `:width` takes `default_width`.
inline PlainTable read_csv(std::istream& in, std::string name, std::size_t default_width = 8) {
  PlainTable t{std::move(name), {}, {}};
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = detail::split_fields(line);
    if (!have_header) {
      std::vector<Column> cols;
      for (const auto& f : fields) {
        auto colon = f.find(':');
        Column c{f.substr(0, colon), default_width};
        if (colon != std::string::npos) c.width = detail::parse_u64(f.substr(colon + 1), lineno);
        if (c.name.empty()) throw Error(Errc::kParseError, "line 1: empty column name");
        cols.push_back(std::move(c));
      }
      t.schema = Schema(std::move(cols));
      have_header = true;
      continue;
    }
    if (fields.size() != t.schema.size())
      throw Error(Errc::kParseError, "line " + std::to_string(lineno) + ": expected " +
                                         std::to_string(t.schema.size()) + " fields");
    Row row;
    for (const auto& f : fields) row.push_back(detail::parse_u64(f, lineno));
    t.rows.push_back(std::move(row));
  }
  if (!have_header) throw Error(Errc::kParseError, "missing header row");
  t.validate();
  return t;
}

inline PlainTable read_csv_file(const std::string& path, std::string name, std::size_t default_width = 8) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kInvalidArgument, "cannot open " + path);
  return read_csv(in, std::move(name), default_width);
}

inline void write_csv(std::ostream& out, const PlainTable& t) {
  for (std::size_t c = 0; c < t.schema.size(); ++c)
    out << (c ? "," : "") << t.schema.column(c).name << ':' << t.schema.column(c).width;
  out << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << r[c];
    out << '\n';
  }
}

}  // namespace encdb
