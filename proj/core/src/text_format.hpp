#pragma once

// Private helpers shared by the CSV readers and writers.

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "odbguard/error.hpp"

namespace odbguard::detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Parses a whole field as a double; empty fields yield nullopt.
inline std::optional<double> parse_optional_double(std::string_view field, std::size_t line,
                                                   std::string_view column) {
  field = trim(field);
  if (field.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError("cannot parse " + std::string(column) + " value '" + std::string(field) + "'",
                     line);
  }
  return v;
}

inline double parse_double(std::string_view field, std::size_t line, std::string_view column) {
  auto v = parse_optional_double(field, line, column);
  if (!v) throw ParseError("missing " + std::string(column) + " value", line);
  return *v;
}

template <typename Int = std::int64_t>
Int parse_int(std::string_view field, std::size_t line, std::string_view column) {
  field = trim(field);
  Int v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError("cannot parse " + std::string(column) + " value '" + std::string(field) + "'",
                     line);
  }
  return v;
}

inline std::optional<bool> parse_label(std::string_view field, std::size_t line) {
  field = trim(field);
  if (field.empty()) return std::nullopt;
  if (field == "0") return false;
  if (field == "1") return true;
  throw ParseError("label must be 0, 1 or empty, got '" + std::string(field) + "'", line);
}

}  // namespace odbguard::detail
