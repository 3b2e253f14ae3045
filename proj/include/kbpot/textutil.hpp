#pragma once

// Small text helpers shared by the file-format code: strict numeric parsing
// (the whole field must be consumed) and round-trip-exact double printing.

#include <charconv>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kbpot::text {

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

inline std::optional<double> parse_double(std::string_view field) {
  const std::string_view t = trim(field);
  if (t.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

inline std::optional<long> parse_long(std::string_view field) {
  const std::string_view t = trim(field);
  if (t.empty()) return std::nullopt;
  long value = 0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

/// Prints a double with 17 significant digits, enough for an exact
/// binary64 round trip through parse_double.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Shorter formatting for human-facing CSV output.
inline std::string format_g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

/// Splits on single-character separators, keeping empty fields.
inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

/// Splits on runs of whitespace, dropping empty tokens.
inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

/// Iterates lines of a buffer without copying; strips a trailing '\r'.
template <typename Fn>
inline void for_each_line(std::string_view buffer, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= buffer.size()) {
    std::size_t end = buffer.find('\n', start);
    if (end == std::string_view::npos) end = buffer.size();
    std::string_view line = buffer.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!(end == buffer.size() && line.empty())) fn(line_no, line);
    if (end == buffer.size()) break;
    start = end + 1;
  }
}

}  // namespace kbpot::text
