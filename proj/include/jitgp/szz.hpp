#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "jitgp/csv.hpp"
#include "jitgp/error.hpp"
#include "jitgp/ingest.hpp"

namespace jitgp::szz {

inline constexpr double kSecondsPerWeek = 7.0 * 86400.0;
inline constexpr double kMaxExposureThreshold = 4.0 * kSecondsPerWeek;

/// A defect-fixing commit, found through issue references or the fix keyword.
struct FixCommit {
  std::string commit_id;
  std::set<std::string> linked_issue_ids;
  Timestamp fix_timestamp = 0;

  friend bool operator==(const FixCommit&, const FixCommit&) = default;
};

/// One blamed hunk: the commit that last touched lines later changed by a fix.
struct BlameRecord {
  std::string fix_commit_id;
  std::string file_path;
  std::int64_t line_start = 0;
  std::int64_t line_end = 0;
  std::string origin_commit_id;
  std::string origin_author_id;
  Timestamp origin_timestamp = 0;
  /// Set by the blame producer when the lines are whitespace or comments only.
  bool cosmetic = false;
};

struct DefectPair {
  std::string introducing_commit_id;
  std::string fixing_commit_id;
  double exposure_duration = 0.0;  // seconds

  friend bool operator==(const DefectPair&, const DefectPair&) = default;
  friend auto operator<=>(const DefectPair& a, const DefectPair& b) {
    if (auto c = a.introducing_commit_id <=> b.introducing_commit_id; c != 0) return c;
    return a.fixing_commit_id <=> b.fixing_commit_id;
  }
};

class ExposureThreshold {
 public:
  explicit ExposureThreshold(double theta_seconds) : theta_(theta_seconds) {
    if (!(theta_ > 0.0) || theta_ > kMaxExposureThreshold)
      fail(ErrorKind::domain, "exposure threshold must lie in (0, 4 weeks], got " + csv::format_double(theta_) + " s");
  }
  double seconds() const noexcept { return theta_; }

 private:
  double theta_;
};

struct CommitMessage {
  std::string commit_id;
  std::string message;
  std::optional<Timestamp> timestamp;
};

struct FixPattern {
  std::string issue_pattern = "[A-Z][A-Z0-9]+-[0-9]+";
  bool keyword_fallback = true;
};

namespace detail {

inline std::regex compile(const std::string& pattern, std::regex::flag_type flags = std::regex::ECMAScript) {
  try {
    return std::regex(pattern, flags);
  } catch (const std::regex_error& e) {
    fail(ErrorKind::config, "invalid issue pattern '" + pattern + "': " + e.what());
  }
}

}  // namespace detail

/// Commits whose message references an issue, or (with the fallback) uses
/// the word fix/fixes/fixed/fixing. Timestamps come from the message itself
/// when present, otherwise from `commit_times`; a fix with neither is skipped
/// and counted in `skipped`. Output is sorted by commit id.
inline std::vector<FixCommit> identify_fix_commits(const std::vector<CommitMessage>& messages,
                                                   const FixPattern& pattern,
                                                   const std::map<std::string, Timestamp>& commit_times = {},
                                                   std::size_t* skipped = nullptr) {
  const std::regex issue_re = detail::compile(pattern.issue_pattern);
  static const std::regex keyword_re(R"(\bfix(es|ed|ing)?\b)", std::regex::ECMAScript | std::regex::icase);

  std::map<std::string, FixCommit> found;
  std::size_t dropped = 0;
  for (const auto& m : messages) {
    std::set<std::string> issues;
    if (!pattern.issue_pattern.empty()) {
      for (auto it = std::sregex_iterator(m.message.begin(), m.message.end(), issue_re); it != std::sregex_iterator();
           ++it)
        issues.insert(it->str());
    }
    const bool is_fix = !issues.empty() || (pattern.keyword_fallback && std::regex_search(m.message, keyword_re));
    if (!is_fix) continue;

    std::optional<Timestamp> when = m.timestamp;
    if (!when) {
      if (auto it = commit_times.find(m.commit_id); it != commit_times.end()) when = it->second;
    }
    if (!when) {
      ++dropped;
      continue;
    }
    auto& fix = found[m.commit_id];
    fix.commit_id = m.commit_id;
    fix.fix_timestamp = *when;
    fix.linked_issue_ids.insert(issues.begin(), issues.end());
  }
  if (skipped) *skipped = dropped;

  std::vector<FixCommit> out;
  out.reserve(found.size());
  for (auto& [id, fix] : found) out.push_back(std::move(fix));
  return out;
}

struct TraceOptions {
  /// Earliest known repository timestamp; blame older than this is corrupt.
  Timestamp repository_start = 0;
  /// Bug report creation time per issue id, when the tracker export is available.
  std::map<std::string, Timestamp> report_created;
};

/// Defect pairs for one fix commit from its blame records. Candidates are
/// discarded when they postdate the earliest linked bug report, or when the
/// blame producer flagged the hunk as cosmetic.
inline std::vector<DefectPair> trace_bug_introducers(const FixCommit& fix, const std::vector<BlameRecord>& blame,
                                                     const TraceOptions& options = {}) {
  std::optional<Timestamp> report_time;
  for (const auto& issue : fix.linked_issue_ids) {
    if (auto it = options.report_created.find(issue); it != options.report_created.end())
      report_time = report_time ? std::min(*report_time, it->second) : it->second;
  }

  std::map<std::string, Timestamp> origins;
  for (const auto& b : blame) {
    if (b.fix_commit_id != fix.commit_id)
      fail(ErrorKind::consistency, "blame record for fix '" + b.fix_commit_id + "' passed while tracing '" +
                                       fix.commit_id + "'");
    if (b.line_start > b.line_end)
      fail(ErrorKind::data, "blame line range " + std::to_string(b.line_start) + "-" + std::to_string(b.line_end) +
                                " is inverted in " + b.file_path);
    if (b.origin_timestamp < options.repository_start)
      fail(ErrorKind::data, "blame origin " + b.origin_commit_id + " predates the repository start");
    if (b.origin_timestamp > fix.fix_timestamp)
      fail(ErrorKind::data, "blame origin " + b.origin_commit_id + " is newer than fix " + fix.commit_id);
    if (b.cosmetic) continue;
    if (report_time && b.origin_timestamp > *report_time) continue;
    origins.emplace(b.origin_commit_id, b.origin_timestamp);
  }

  std::vector<DefectPair> pairs;
  pairs.reserve(origins.size());
  for (const auto& [origin, ts] : origins)
    pairs.push_back({origin, fix.commit_id, static_cast<double>(fix.fix_timestamp - ts)});
  return pairs;
}

/// theta = min(4 weeks, 1% of the project span).
inline ExposureThreshold compute_exposure_threshold(const ChangeSet& changes) {
  const Timestamp span = changes.project_end() - changes.project_start();
  if (span <= 0) fail(ErrorKind::domain, "project span must be positive to derive the exposure threshold");
  return ExposureThreshold(std::min(kMaxExposureThreshold, static_cast<double>(span) / 100.0));
}

/// Labels every record: 1 when its commit introduced at least one defect
/// fixed within theta, else 0.
inline ChangeSet label_early_exposed(const ChangeSet& changes, const std::vector<DefectPair>& pairs,
                                     const ExposureThreshold& threshold) {
  std::set<std::string_view> known;
  for (const auto& r : changes.records()) known.insert(r.commit_id);

  std::set<std::string> unknown;
  std::set<std::string_view> early;
  for (const auto& p : pairs) {
    if (!known.contains(p.introducing_commit_id)) {
      unknown.insert(p.introducing_commit_id);
      continue;
    }
    if (p.exposure_duration < threshold.seconds()) early.insert(p.introducing_commit_id);
  }
  if (!unknown.empty()) {
    std::string ids;
    for (const auto& id : unknown) ids += (ids.empty() ? "" : ", ") + id;
    fail(ErrorKind::consistency, "defect pairs reference commits missing from the change set: " + ids);
  }

  std::vector<std::optional<int>> labels;
  labels.reserve(changes.size());
  for (const auto& r : changes.records()) labels.emplace_back(early.contains(r.commit_id) ? 1 : 0);
  return changes.with_labels(labels);
}

// ---------------------------------------------------------------------------
// File formats

inline std::vector<BlameRecord> load_blame_records(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) return {};
  const csv::Header h(rows.front());
  const std::size_t c_fix = h.index("fix_commit"), c_file = h.index("file"), c_start = h.index("start_line"),
                    c_end = h.index("end_line"), c_origin = h.index("origin_commit"),
                    c_author = h.index("origin_author"), c_time = h.index("origin_timestamp");
  std::optional<std::size_t> c_cosmetic;
  try {
    c_cosmetic = h.index("cosmetic");
  } catch (const Error&) {
  }

  std::vector<BlameRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    const std::string where = "blame row on line " + std::to_string(rows[r].line);
    if (f.size() != h.size()) fail(ErrorKind::schema, where + " has the wrong number of fields");
    BlameRecord b;
    b.fix_commit_id = f[c_fix];
    b.file_path = f[c_file];
    b.origin_commit_id = f[c_origin];
    b.origin_author_id = normalize_author(f[c_author]);
    if (!csv::parse_int64(f[c_start], b.line_start) || !csv::parse_int64(f[c_end], b.line_end))
      fail(ErrorKind::value, where + ": non-integer line range");
    if (!csv::parse_int64(f[c_time], b.origin_timestamp)) fail(ErrorKind::value, where + ": non-integer timestamp");
    if (c_cosmetic) b.cosmetic = f[*c_cosmetic] == "1" || f[*c_cosmetic] == "true";
    out.push_back(std::move(b));
  }
  return out;
}

inline std::vector<CommitMessage> load_commit_messages(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) return {};
  const csv::Header h(rows.front());
  const std::size_t c_commit = h.index("commit"), c_msg = h.index("message");
  std::optional<std::size_t> c_time;
  try {
    c_time = h.index("timestamp");
  } catch (const Error&) {
  }
  std::vector<CommitMessage> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    if (f.size() != h.size())
      fail(ErrorKind::schema, "message row on line " + std::to_string(rows[r].line) + " has the wrong number of fields");
    CommitMessage m{f[c_commit], f[c_msg], std::nullopt};
    if (c_time && !f[*c_time].empty()) {
      Timestamp t = 0;
      if (!csv::parse_int64(f[*c_time], t))
        fail(ErrorKind::value, "message row on line " + std::to_string(rows[r].line) + ": non-integer timestamp");
      m.timestamp = t;
    }
    out.push_back(std::move(m));
  }
  return out;
}

/// `issue,created_timestamp` table of bug-report creation times.
inline std::map<std::string, Timestamp> load_issue_reports(std::string_view text) {
  const auto rows = csv::parse(text);
  std::map<std::string, Timestamp> out;
  if (rows.empty()) return out;
  const csv::Header h(rows.front());
  const std::size_t c_issue = h.index("issue"), c_time = h.index("created_timestamp");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    Timestamp t = 0;
    if (f.size() != h.size() || !csv::parse_int64(f[c_time], t))
      fail(ErrorKind::value, "issue report row on line " + std::to_string(rows[r].line) + " is malformed");
    out[f[c_issue]] = t;
  }
  return out;
}

inline std::string write_defect_pairs(const std::vector<DefectPair>& pairs) {
  std::string out = "introducing_commit,fixing_commit,exposure_seconds\n";
  for (const auto& p : pairs)
    csv::append_row(out, {p.introducing_commit_id, p.fixing_commit_id, csv::format_double(p.exposure_duration)});
  return out;
}

struct SzzInputs {
  std::vector<CommitMessage> messages;
  std::vector<BlameRecord> blame;
  std::map<std::string, Timestamp> report_created;
  FixPattern pattern;
};

struct SzzResult {
  std::vector<FixCommit> fixes;
  std::vector<DefectPair> pairs;
  std::optional<ExposureThreshold> threshold;
  ChangeSet labeled;
  std::size_t skipped_fixes = 0;
};

/// Fix identification, origin tracing and early-exposure labeling in one pass.
inline SzzResult label_changes(const ChangeSet& changes, const SzzInputs& in) {
  SzzResult result;
  std::map<std::string, Timestamp> times;
  for (const auto& r : changes.records()) times.emplace(r.commit_id, r.timestamp);
  result.fixes = identify_fix_commits(in.messages, in.pattern, times, &result.skipped_fixes);

  std::map<std::string, std::vector<BlameRecord>> by_fix;
  for (const auto& b : in.blame) by_fix[b.fix_commit_id].push_back(b);

  TraceOptions options{changes.project_start(), in.report_created};
  std::set<DefectPair> pairs;
  for (const auto& fix : result.fixes) {
    auto it = by_fix.find(fix.commit_id);
    if (it == by_fix.end()) continue;
    for (auto& p : trace_bug_introducers(fix, it->second, options)) pairs.insert(std::move(p));
  }
  result.pairs.assign(pairs.begin(), pairs.end());
  result.threshold = compute_exposure_threshold(changes);
  result.labeled = label_early_exposed(changes, result.pairs, *result.threshold);
  return result;
}

}  // namespace jitgp::szz
