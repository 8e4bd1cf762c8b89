/*
 *  Copyright (C) 2026 The gravprior Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE.txt for more information.
 */

#pragma once

#include "gravprior/error.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace gravprior::csv
{

inline std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',')
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true)
  {
    const std::size_t pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out)
{
  s = trim(s);
  if (s.empty())
    return false;
  if (s.front() == '+')
    s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline bool parse_int64(std::string_view s, std::int64_t& out)
{
  s = trim(s);
  if (s.empty())
    return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

/// Shortest text that parses back to the identical double.
inline std::string format_double(double v)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string join(const std::vector<double>& values)
{
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i)
  {
    if (i)
      out += ',';
    out += format_double(values[i]);
  }
  return out;
}

/// A data row: 1-based source line and its numeric fields.
struct Row
{
  std::size_t line{0};
  std::vector<double> values;
};

inline std::ifstream open_input(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::MissingFile, "cannot open " + path.string());
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path)
{
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorKind::MissingFile, "cannot write " + path.string());
  return out;
}

/// Reads a numeric CSV. Blank lines and lines starting with '#' are skipped;
/// a first non-comment line that does not parse as numbers is taken as the
/// header. Rows must have a field count in [min_fields, max_fields].
inline std::vector<Row> read_numeric(const std::filesystem::path& path, std::size_t min_fields,
                                     std::size_t max_fields, std::vector<std::string>* header = nullptr)
{
  std::ifstream in = open_input(path);
  std::vector<Row> rows;
  std::string line;
  std::size_t lineno = 0;
  bool seen_content = false;
  while (std::getline(in, line))
  {
    ++lineno;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#')
      continue;
    const auto fields = split(view);
    Row row;
    row.line = lineno;
    row.values.resize(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i)
      numeric = numeric && parse_double(fields[i], row.values[i]);
    if (!seen_content && !numeric)
    {
      seen_content = true;
      if (header)
        for (auto f : fields)
          header->emplace_back(f);
      continue;
    }
    seen_content = true;
    if (fields.size() < min_fields || fields.size() > max_fields)
      throw MalformedRowError(path.string(), lineno,
                              "expected " + std::to_string(min_fields) + " fields, got " + std::to_string(fields.size()));
    if (!numeric)
      throw MalformedRowError(path.string(), lineno, "non-numeric field");
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace gravprior::csv
