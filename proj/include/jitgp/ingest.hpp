#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "jitgp/csv.hpp"
#include "jitgp/error.hpp"

namespace jitgp {

using Timestamp = std::int64_t;

/// One (commit, author, file, timestamp) incidence, optionally labeled
/// defect-prone (1) or clean (0).
struct ChangeRecord {
  std::string commit_id;
  std::string author_id;
  std::string file_path;
  Timestamp timestamp = 0;
  std::optional<int> label;

  friend bool operator==(const ChangeRecord&, const ChangeRecord&) = default;
};

/// Change records ordered by timestamp, with the project time span.
class ChangeSet {
 public:
  ChangeSet() = default;

  /// Validates the record invariants, sorts stably by timestamp and derives
  /// the span from the record timestamps.
  static ChangeSet from_records(std::vector<ChangeRecord> records) {
    std::set<std::pair<std::string_view, std::string_view>> seen;
    for (const auto& r : records) {
      if (r.commit_id.empty()) fail(ErrorKind::value, "change record with empty commit id");
      if (r.timestamp < 0) fail(ErrorKind::value, "negative timestamp on commit " + r.commit_id);
      if (r.label && *r.label != 0 && *r.label != 1)
        fail(ErrorKind::value, "label outside {0,1} on commit " + r.commit_id);
      if (!seen.emplace(r.commit_id, r.file_path).second)
        fail(ErrorKind::value, "duplicate (commit, file) pair (" + r.commit_id + ", " + r.file_path + ")");
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const ChangeRecord& a, const ChangeRecord& b) { return a.timestamp < b.timestamp; });
    ChangeSet set;
    if (!records.empty()) {
      set.start_ = records.front().timestamp;
      set.end_ = records.back().timestamp;
    }
    set.records_ = std::move(records);
    return set;
  }

  const std::vector<ChangeRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  Timestamp project_start() const noexcept { return start_; }
  Timestamp project_end() const noexcept { return end_; }

  /// Copy with labels replaced; `labels` is indexed like records().
  ChangeSet with_labels(const std::vector<std::optional<int>>& labels) const {
    if (labels.size() != records_.size()) fail(ErrorKind::shape, "label vector does not match record count");
    ChangeSet out = *this;
    for (std::size_t i = 0; i < labels.size(); ++i) out.records_[i].label = labels[i];
    return out;
  }

  friend bool operator==(const ChangeSet&, const ChangeSet&) = default;

 private:
  std::vector<ChangeRecord> records_;
  Timestamp start_ = 0;
  Timestamp end_ = 0;
};

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

/// Canonical author identity: trimmed, ASCII-lowercased. Idempotent.
inline std::string normalize_author(std::string_view raw) {
  std::string out = trim(raw);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// Email when present, otherwise the author name.
inline std::string author_identity(std::string_view email, std::string_view name) {
  std::string id = normalize_author(email);
  return id.empty() ? normalize_author(name) : id;
}

namespace detail {

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

}  // namespace detail

/// Parses `git log --name-only --format=%H|%ae|%at` style output: a header
/// line per commit followed by its file paths, commits separated by one
/// blank line. An optional fourth header field carries the author name and
/// is used when the email is empty.
inline ChangeSet parse_changelog(std::string_view raw_log) {
  const auto lines = detail::split_lines(raw_log);
  std::size_t last = lines.size();
  while (last > 0 && lines[last - 1].empty()) --last;

  std::vector<ChangeRecord> records;
  std::set<std::string> commits;
  std::size_t i = 0;
  while (i < last) {
    const std::size_t header_line = i + 1;
    const std::string_view header = lines[i];
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
      const std::size_t bar = header.find('|', start);
      if (bar == std::string_view::npos) {
        parts.push_back(header.substr(start));
        break;
      }
      parts.push_back(header.substr(start, bar - start));
      start = bar + 1;
    }
    if (parts.size() < 3 || parts.size() > 4 || trim(parts[0]).empty())
      fail(ErrorKind::parse, "line " + std::to_string(header_line) +
                                 ": malformed commit header, expected 'commit_id|author_email|unix_timestamp'");
    std::int64_t ts = 0;
    if (!csv::parse_int64(trim(parts[2]), ts) || ts < 0)
      fail(ErrorKind::parse, "line " + std::to_string(header_line) + ": timestamp '" + std::string(parts[2]) +
                                 "' is not a non-negative integer");
    const std::string commit = trim(parts[0]);
    const std::string author = author_identity(parts[1], parts.size() == 4 ? parts[3] : std::string_view{});
    if (!commits.insert(commit).second)
      fail(ErrorKind::parse, "line " + std::to_string(header_line) + ": commit '" + commit + "' appears twice");

    std::set<std::string> files;
    ++i;
    while (i < last && !lines[i].empty()) {
      std::string path(lines[i]);
      if (files.insert(path).second) records.push_back({commit, author, std::move(path), ts, std::nullopt});
      ++i;
    }
    if (i < last) {
      ++i;  // the single separating blank line
      if (i < last && lines[i].empty())
        fail(ErrorKind::parse, "line " + std::to_string(i + 1) + ": records must be separated by exactly one blank line");
    }
  }
  return ChangeSet::from_records(std::move(records));
}

inline constexpr std::string_view kChangeTableHeader = "commit,author,timestamp,file,label";

namespace detail {

inline ChangeSet read_change_table(std::string_view table, bool require_labels) {
  const auto rows = csv::parse(table);
  if (rows.empty()) fail(ErrorKind::schema, "change table has no header row");
  const csv::Header header(rows.front());
  const std::size_t c_commit = header.index("commit");
  const std::size_t c_author = header.index("author");
  const std::size_t c_time = header.index("timestamp");
  const std::size_t c_file = header.index("file");
  const std::size_t c_label = header.index("label");

  std::vector<ChangeRecord> records;
  records.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "row on line " + std::to_string(row.line);
    if (row.fields.size() != header.size())
      fail(ErrorKind::schema, where + " has " + std::to_string(row.fields.size()) + " fields, expected " +
                                  std::to_string(header.size()));
    ChangeRecord rec;
    rec.commit_id = row.fields[c_commit];
    if (rec.commit_id.empty()) fail(ErrorKind::value, where + ": empty commit id");
    rec.author_id = normalize_author(row.fields[c_author]);
    rec.file_path = row.fields[c_file];
    if (!csv::parse_int64(row.fields[c_time], rec.timestamp) || rec.timestamp < 0)
      fail(ErrorKind::value, where + ": timestamp '" + row.fields[c_time] + "' is not a non-negative integer");
    const std::string& label = row.fields[c_label];
    if (label == "0" || label == "1") {
      rec.label = label[0] - '0';
    } else if (!label.empty() || require_labels) {
      fail(ErrorKind::value, where + ": label '" + label + "' outside {0,1}");
    }
    records.push_back(std::move(rec));
  }
  return ChangeSet::from_records(std::move(records));
}

}  // namespace detail

/// Loads a `commit,author,timestamp,file,label` table where every row is labeled.
inline ChangeSet load_labeled_changes(std::string_view table) { return detail::read_change_table(table, true); }

/// Same format, but an empty label cell leaves the record unlabeled.
inline ChangeSet load_change_table(std::string_view table) { return detail::read_change_table(table, false); }

inline std::string write_change_table(const ChangeSet& changes) {
  std::string out(kChangeTableHeader);
  out.push_back('\n');
  for (const auto& r : changes.records()) {
    csv::append_row(out, {r.commit_id, r.author_id, std::to_string(r.timestamp), r.file_path,
                          r.label ? std::to_string(*r.label) : std::string{}});
  }
  return out;
}

}  // namespace jitgp
