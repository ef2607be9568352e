#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "jitgp/csv.hpp"
#include "jitgp/error.hpp"
#include "jitgp/features.hpp"
#include "jitgp/graph.hpp"
#include "jitgp/ingest.hpp"
#include "jitgp/model.hpp"

namespace jitgp {

enum class GraphScope { full, train_only };
/// `search` cross-validates over the hyperparameter grids; `preset` skips the
/// search and uses a fixed best-known point of each grid.
enum class GridMode { search, preset };

inline constexpr std::string_view kToolVersion = "0.1.0";

struct PipelineConfig {
  std::string changelog;
  std::string labeled;
  std::string messages;
  std::string blame;
  std::string issue_reports;
  std::string issue_pattern = "[A-Z][A-Z0-9]+-[0-9]+";
  bool fix_keyword_fallback = true;

  FeatureSetting setting = FeatureSetting::centralities;
  std::vector<ClassifierKind> classifiers{ClassifierKind::random_forest};
  ProjectionWeight projection_weight = ProjectionWeight::endpoint_sum;
  GraphScope graph_scope = GraphScope::full;
  GridMode grid = GridMode::search;

  std::uint64_t seed = 42;
  std::string output = "jitgp-out";
  std::size_t threads = 1;
  std::size_t folds = 10;
  double train_fraction = 0.75;
  bool smote = true;
  std::size_t smote_k = 5;
  bool cache = true;
};

namespace detail {

inline bool parse_bool(const std::string& key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorKind::config, key + " must be a boolean, got '" + std::string(v) + "'");
}

inline std::uint64_t parse_u64(const std::string& key, std::string_view v) {
  std::int64_t x = 0;
  if (!csv::parse_int64(v, x) || x < 0) fail(ErrorKind::config, key + " must be a non-negative integer");
  return static_cast<std::uint64_t>(x);
}

}  // namespace detail

inline std::vector<ClassifierKind> parse_classifier_list(std::string_view text) {
  if (text == "all")
    return {ClassifierKind::logistic_regression, ClassifierKind::random_forest, ClassifierKind::gradient_boosted_trees};
  std::vector<ClassifierKind> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    const ClassifierKind k = parse_classifier(trim(text.substr(start, comma - start)));
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    start = comma + 1;
  }
  return out;
}

inline std::string classifier_list_string(const std::vector<ClassifierKind>& kinds) {
  std::string out;
  for (auto k : kinds) out += (out.empty() ? "" : ",") + std::string(to_string(k));
  return out;
}

/// Applies one key = value setting.
inline void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "changelog") cfg.changelog = value;
  else if (key == "labeled") cfg.labeled = value;
  else if (key == "messages") cfg.messages = value;
  else if (key == "blame") cfg.blame = value;
  else if (key == "issue_reports") cfg.issue_reports = value;
  else if (key == "issue_pattern") cfg.issue_pattern = value;
  else if (key == "fix_keyword_fallback") cfg.fix_keyword_fallback = detail::parse_bool(key, value);
  else if (key == "setting") cfg.setting = parse_setting(value);
  else if (key == "classifier") cfg.classifiers = parse_classifier_list(value);
  else if (key == "projection_weight") cfg.projection_weight = parse_projection_weight(value);
  else if (key == "graph_scope") {
    if (value == "full") cfg.graph_scope = GraphScope::full;
    else if (value == "train-only") cfg.graph_scope = GraphScope::train_only;
    else fail(ErrorKind::config, "graph_scope must be 'full' or 'train-only'");
  } else if (key == "grid") {
    if (value == "search") cfg.grid = GridMode::search;
    else if (value == "preset") cfg.grid = GridMode::preset;
    else fail(ErrorKind::config, "grid must be 'search' or 'preset'");
  } else if (key == "seed") cfg.seed = detail::parse_u64(key, value);
  else if (key == "output") cfg.output = value;
  else if (key == "threads") cfg.threads = std::max<std::uint64_t>(1, detail::parse_u64(key, value));
  else if (key == "folds") cfg.folds = detail::parse_u64(key, value);
  else if (key == "train_fraction") {
    if (!csv::parse_double(value, cfg.train_fraction) || !(cfg.train_fraction > 0 && cfg.train_fraction < 1))
      fail(ErrorKind::config, "train_fraction must be a number in (0, 1)");
  } else if (key == "smote") cfg.smote = detail::parse_bool(key, value);
  else if (key == "smote_k") cfg.smote_k = detail::parse_u64(key, value);
  else if (key == "cache") cfg.cache = detail::parse_bool(key, value);
  else fail(ErrorKind::config, "unknown configuration key '" + key + "'");
}

/// Flat `key = value` text; `#` starts a comment line.
inline PipelineConfig parse_config(std::string_view text, PipelineConfig cfg = {}) {
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string line = trim(text.substr(pos, nl - pos));
    ++line_no;
    pos = nl + 1;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::config, "config line " + std::to_string(line_no) + ": expected 'key = value'");
    apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

/// JITGP_SEED, when set, replaces the configured seed.
inline void apply_environment(PipelineConfig& cfg) {
  if (const char* env = std::getenv("JITGP_SEED"); env && *env) cfg.seed = detail::parse_u64("JITGP_SEED", env);
}

inline void validate(const PipelineConfig& cfg) {
  if (cfg.changelog.empty() == cfg.labeled.empty())
    fail(ErrorKind::config, "exactly one of 'changelog' or 'labeled' must be given");
  for (const auto* path : {&cfg.changelog, &cfg.labeled, &cfg.messages, &cfg.blame, &cfg.issue_reports})
    if (!path->empty() && !std::filesystem::exists(*path)) fail(ErrorKind::config, "input path does not exist: " + *path);
  if (!cfg.changelog.empty() && (cfg.messages.empty() || cfg.blame.empty()))
    fail(ErrorKind::config, "a raw changelog needs 'messages' and 'blame' inputs for labeling");
  if (cfg.classifiers.empty()) fail(ErrorKind::config, "no classifier selected");
  if (cfg.folds < 2) fail(ErrorKind::config, "folds must be at least 2");
  if (cfg.smote && cfg.smote_k < 1) fail(ErrorKind::config, "smote_k must be at least 1");
}

/// Every setting, defaults included, for the run manifest.
inline nlohmann::json config_to_json(const PipelineConfig& cfg) {
  return {
      {"changelog", cfg.changelog},
      {"labeled", cfg.labeled},
      {"messages", cfg.messages},
      {"blame", cfg.blame},
      {"issue_reports", cfg.issue_reports},
      {"issue_pattern", cfg.issue_pattern},
      {"fix_keyword_fallback", cfg.fix_keyword_fallback},
      {"setting", to_int(cfg.setting)},
      {"classifier", classifier_list_string(cfg.classifiers)},
      {"projection_weight", to_string(cfg.projection_weight)},
      {"graph_scope", cfg.graph_scope == GraphScope::full ? "full" : "train-only"},
      {"grid", cfg.grid == GridMode::search ? "search" : "preset"},
      {"seed", cfg.seed},
      {"output", cfg.output},
      {"threads", cfg.threads},
      {"folds", cfg.folds},
      {"train_fraction", cfg.train_fraction},
      {"smote", cfg.smote},
      {"smote_k", cfg.smote_k},
      {"cache", cfg.cache},
  };
}

}  // namespace jitgp
