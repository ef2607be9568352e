#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "jitgp/error.hpp"

namespace jitgp::csv {

/// One parsed row with the physical line it started on (1-based).
struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// Comma-delimited reader with RFC 4180 quoting. Quoted fields may span
/// lines. A trailing CR before LF is dropped. Blank lines are skipped.
inline std::vector<Row> parse(std::string_view text) {
  std::vector<Row> rows;
  std::size_t i = 0;
  std::size_t line = 1;
  const std::size_t n = text.size();
  while (i < n) {
    if (text[i] == '\n') {
      ++i;
      ++line;
      continue;
    }
    if (text[i] == '\r' && i + 1 < n && text[i + 1] == '\n') {
      i += 2;
      ++line;
      continue;
    }
    Row row;
    row.line = line;
    std::string field;
    bool quoted = false;
    bool field_was_quoted = false;
    for (; i < n; ++i) {
      const char c = text[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < n && text[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
        }
        continue;
      }
      if (c == '"' && field.empty() && !field_was_quoted) {
        quoted = true;
        field_was_quoted = true;
      } else if (c == ',') {
        row.fields.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
      } else if (c == '\n') {
        break;
      } else if (c == '\r' && i + 1 < n && text[i + 1] == '\n') {
        ++i;
        break;
      } else {
        field.push_back(c);
      }
    }
    if (quoted) fail(ErrorKind::parse, "unterminated quoted field starting on line " + std::to_string(row.line));
    row.fields.push_back(std::move(field));
    rows.push_back(std::move(row));
    if (i < n) {
      ++i;
      ++line;
    }
  }
  return rows;
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void append_row(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += quote(fields[i]);
  }
  out.push_back('\n');
}

/// Column lookup by header name; missing names raise a schema error.
class Header {
 public:
  explicit Header(const Row& row) : names_(row.fields) {}

  std::size_t index(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    fail(ErrorKind::schema, "missing column '" + std::string(name) + "'");
  }

  std::size_t size() const noexcept { return names_.size(); }

 private:
  std::vector<std::string> names_;
};

inline bool parse_int64(std::string_view text, std::int64_t& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

inline bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

/// Shortest representation that round-trips through parse_double.
inline std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

}  // namespace jitgp::csv
