#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "jitgp/config.hpp"
#include "jitgp/dataset.hpp"
#include "jitgp/error.hpp"
#include "jitgp/features.hpp"
#include "jitgp/graph.hpp"
#include "jitgp/grid_search.hpp"
#include "jitgp/ingest.hpp"
#include "jitgp/metrics.hpp"
#include "jitgp/model.hpp"
#include "jitgp/preprocess.hpp"
#include "jitgp/reference.hpp"
#include "jitgp/rng.hpp"
#include "jitgp/szz.hpp"

namespace jitgp {

namespace fs = std::filesystem;
using nlohmann::json;

/// An error raised inside a named pipeline stage.
class StageError : public Error {
 public:
  StageError(const Error& cause, std::string stage, std::string hint)
      : Error(cause.kind(), "stage '" + stage + "': " + strip_prefix(cause.what()) + " (hint: " + hint + ")"),
        stage_(std::move(stage)),
        hint_(std::move(hint)) {}

  const std::string& stage() const noexcept { return stage_; }
  const std::string& hint() const noexcept { return hint_; }

 private:
  static std::string strip_prefix(const std::string& s) { return s; }
  std::string stage_;
  std::string hint_;
};

inline std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::data, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorKind::data, "short write to " + path.string());
}

inline std::string hex64(std::uint64_t x) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, x >>= 4) s[static_cast<std::size_t>(i)] = digits[x & 0xF];
  return s;
}

/// Per-component seeds fanned out from the master seed.
struct SeedPlan {
  std::uint64_t master = 0;
  std::uint64_t split = 0, features = 0, smote = 0, grid = 0;

  static SeedPlan from(std::uint64_t master) {
    return {master, derive_seed(master, "split"), derive_seed(master, "features"), derive_seed(master, "smote"),
            derive_seed(master, "grid")};
  }

  json to_json() const {
    return {{"master", master},
            {"derivation", "splitmix64(master ^ fnv1a(component))"},
            {"split", split},
            {"features", features},
            {"smote", smote},
            {"grid", grid}};
  }
};

/// Settings that determine results; excludes paths, thread count and caching.
inline json reproducible_config(const PipelineConfig& cfg) {
  json j = config_to_json(cfg);
  for (const char* k : {"output", "threads", "cache", "changelog", "labeled", "messages", "blame", "issue_reports"})
    j.erase(k);
  return j;
}

// ---------------------------------------------------------------------------
// Stages

inline ChangeSet ingest_stage(const PipelineConfig& cfg) {
  if (!cfg.labeled.empty()) return load_change_table(read_text_file(cfg.labeled));
  return parse_changelog(read_text_file(cfg.changelog));
}

struct LabelOutput {
  ChangeSet changes;
  std::vector<szz::DefectPair> pairs;
  std::optional<double> theta;
  bool ran_szz = false;
};

/// Labels the change set with SZZ when the input is not already labeled.
inline LabelOutput label_stage(const PipelineConfig& cfg, const ChangeSet& changes) {
  const bool labeled = !changes.empty() && std::all_of(changes.records().begin(), changes.records().end(),
                                                       [](const ChangeRecord& r) { return r.label.has_value(); });
  if (labeled || cfg.messages.empty() || cfg.blame.empty()) return {changes, {}, std::nullopt, false};
  szz::SzzInputs in;
  in.messages = szz::load_commit_messages(read_text_file(cfg.messages));
  in.blame = szz::load_blame_records(read_text_file(cfg.blame));
  if (!cfg.issue_reports.empty()) in.report_created = szz::load_issue_reports(read_text_file(cfg.issue_reports));
  in.pattern = {cfg.issue_pattern, cfg.fix_keyword_fallback};
  auto result = szz::label_changes(changes, in);
  return {std::move(result.labeled), std::move(result.pairs), result.threshold->seconds(), true};
}

/// Labeled records only, in change-set order; these become the feature rows.
inline std::vector<int> labels_of(const ChangeSet& changes) {
  std::vector<int> out;
  for (const auto& r : changes.records())
    if (r.label) out.push_back(*r.label);
  return out;
}

/// Records that feed the graph: everything, or the training rows only.
inline ChangeSet graph_population(const ChangeSet& changes, GraphScope scope, const SplitIndices& split) {
  if (scope == GraphScope::full) return changes;
  std::vector<ChangeRecord> keep;
  std::size_t row = 0, next = 0;
  for (const auto& r : changes.records()) {
    if (!r.label) continue;
    if (next < split.train.size() && split.train[next] == row) {
      keep.push_back(r);
      ++next;
    }
    ++row;
  }
  return ChangeSet::from_records(std::move(keep));
}

struct GraphOutput {
  ContributionGraph contribution;
  ProjectionGraph projection;
};

inline GraphOutput graph_stage(const ChangeSet& population, ProjectionWeight weight) {
  GraphOutput g{build_contribution_graph(population), {}};
  g.projection = project_developer_graph(g.contribution, weight);
  return g;
}

inline FeatureMatrix features_stage(const ChangeSet& changes, const ProjectionGraph& projection,
                                    FeatureSetting setting, std::uint64_t seed) {
  return assemble_features(changes, compute_graph_features(projection, setting, seed));
}

inline Dataset to_dataset(const FeatureMatrix& m) { return Dataset(m.cols(), m.values(), m.labels()); }

/// Fixed best-known point of each grid.
inline Hyperparameters preset_hyperparameters(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::logistic_regression: return {{"C", 100.0}};
    case ClassifierKind::random_forest: return {{"n_estimators", 100.0}};
    case ClassifierKind::gradient_boosted_trees: return {{"learning_rate", 0.01}, {"n_estimators", 1000.0}};
  }
  return {};
}

struct PreparedData {
  ScalerState scaler;
  Dataset train_scaled;  // scaled, not resampled
  Dataset train_balanced;  // scaled and SMOTE-balanced
  TestPartition test;  // raw rows; models rescale internally
};

inline PreparedData prepare_stage(const FeatureMatrix& m, const SplitIndices& split, const PipelineConfig& cfg,
                                  const SeedPlan& seeds) {
  const Dataset all = to_dataset(m);
  Dataset train = all.subset(split.train);
  train.set_role(Partition::train);
  PreparedData p;
  p.test = TestPartition(all.subset(split.test));
  p.scaler = minmax_fit(train);
  p.train_scaled = minmax_apply(p.scaler, train);
  p.train_balanced = cfg.smote ? smote_oversample(p.train_scaled, {cfg.smote_k, seeds.smote}).data : p.train_scaled;
  return p;
}

struct TrainOutput {
  TrainedModel model;
  std::vector<GridPointScore> cv;
};

inline TrainOutput train_stage(ClassifierKind kind, const PreparedData& data, const PipelineConfig& cfg,
                               const SeedPlan& seeds) {
  TrainOutput out;
  ClassifierSpec spec{kind, preset_hyperparameters(kind), derive_seed(seeds.grid, "model")};
  if (cfg.grid == GridMode::search) {
    GridSearchOptions opt;
    opt.folds = cfg.folds;
    opt.seed = seeds.grid;
    opt.smote_k = cfg.smote ? std::optional<std::size_t>(cfg.smote_k) : std::nullopt;
    opt.threads = cfg.threads;
    auto result = grid_search(kind, search_grid(kind), data.train_scaled, opt);
    spec = result.best;
    out.cv = std::move(result.scores);
  }
  out.model = train_classifier(spec, data.train_balanced, cfg.threads);
  out.model.scaler = data.scaler;
  json cv = json::array();
  for (const auto& s : out.cv) cv.push_back({{"hyperparameters", s.hyperparameters}, {"mean_f1", s.mean_f1}});
  out.model.manifest = {{"seeds", seeds.to_json()},
                        {"grid", cfg.grid == GridMode::search ? "search" : "preset"},
                        {"folds", cfg.folds},
                        {"smote", cfg.smote},
                        {"smote_k", cfg.smote_k},
                        {"train_rows", data.train_scaled.rows()},
                        {"train_rows_balanced", data.train_balanced.rows()},
                        {"cv", cv}};
  return out;
}

struct ClassifierResult {
  ClassifierKind kind;
  EvaluationReport report;
  PrCurve curve;
  Hyperparameters hyperparameters;
  std::vector<GridPointScore> cv;
};

inline json report_to_json(const ClassifierResult& r, FeatureSetting setting) {
  json cv = json::array();
  for (const auto& s : r.cv) cv.push_back({{"hyperparameters", s.hyperparameters}, {"mean_f1", s.mean_f1}});
  json j = {{"precision", r.report.precision},
            {"recall", r.report.recall},
            {"f1", r.report.f1},
            {"mcc", r.report.mcc},
            {"auc_pr", r.report.auc_pr},
            {"chosen_threshold", r.report.chosen_threshold},
            {"confusion_at_0.5",
             {{"tp", r.report.at_default.tp}, {"fp", r.report.at_default.fp}, {"fn", r.report.at_default.fn},
              {"tn", r.report.at_default.tn}}},
            {"samples", r.report.samples},
            {"hyperparameters", r.hyperparameters},
            {"cv", cv}};
  if (const auto* ref = reference::means_for(to_int(setting), to_string(r.kind)))
    j["reference_mean"] = {{"precision", ref->precision}, {"recall", ref->recall}, {"f1", ref->f1},
                           {"mcc", ref->mcc}, {"auc_pr", ref->auc_pr}};
  return j;
}

/// Scores every model in a single pass over the test partition.
inline std::vector<ClassifierResult> evaluate_stage(const std::vector<TrainOutput>& models, const TestPartition& test) {
  const Dataset& rows = test.read();
  std::vector<ClassifierResult> out;
  for (const auto& t : models) {
    const auto scores = predict_proba(t.model, rows);
    ClassifierResult r{t.model.kind, evaluate_scores(scores, rows.labels()), pr_curve(scores, rows.labels()),
                       t.model.hyperparameters, t.cv};
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bundle

struct ReportBundle {
  fs::path directory;
  FeatureSetting setting = FeatureSetting::centralities;
  std::vector<ClassifierResult> results;
  json report;
  json manifest;
};

inline constexpr std::string_view kReportFormat = "jitgp-report/1";

/// PR curve per classifier plus one comparison row per classifier.
inline std::vector<fs::path> emit_plot_data(const ReportBundle& bundle) {
  std::vector<fs::path> written;
  std::string comparison = "classifier,precision,recall,f1,mcc,auc_pr,chosen_threshold\n";
  for (const auto& r : bundle.results) {
    if (r.curve.empty()) fail(ErrorKind::data, "no PR curve for classifier " + std::string(to_string(r.kind)));
    const fs::path curve = bundle.directory / ("pr-curve-" + std::string(to_string(r.kind)) + ".csv");
    write_text_file(curve, write_pr_curve_csv(r.curve));
    written.push_back(curve);
    csv::append_row(comparison, {std::string(to_string(r.kind)), csv::format_double(r.report.precision),
                                 csv::format_double(r.report.recall), csv::format_double(r.report.f1),
                                 csv::format_double(r.report.mcc), csv::format_double(r.report.auc_pr),
                                 csv::format_double(r.report.chosen_threshold)});
  }
  const fs::path cmp = bundle.directory / "comparison.csv";
  write_text_file(cmp, comparison);
  written.push_back(cmp);
  return written;
}

struct RunResult {
  ReportBundle bundle;
  std::size_t test_reads = 0;
  bool features_cache_hit = false;
  std::map<std::string, bool> model_cache_hit;
  std::size_t excluded_unlabeled = 0;
};

namespace detail {

/// Tracks files written by a run so a failure can park them under failed/.
class Workspace {
 public:
  explicit Workspace(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  const fs::path& root() const noexcept { return root_; }

  fs::path write(const std::string& name, std::string_view content) {
    const fs::path p = root_ / name;
    write_text_file(p, content);
    if (std::find(written_.begin(), written_.end(), p) == written_.end()) written_.push_back(p);
    return p;
  }

  void track(const fs::path& p) {
    if (std::find(written_.begin(), written_.end(), p) == written_.end()) written_.push_back(p);
  }

  /// Moves everything written so far to failed/ next to an error.json.
  void park_failure(const StageError& e) noexcept {
    try {
      const fs::path failed = root_ / "failed";
      fs::create_directories(failed);
      for (const auto& p : written_) {
        std::error_code ec;
        if (fs::exists(p, ec)) fs::rename(p, failed / p.filename(), ec);
      }
      const json err = {{"stage", e.stage()}, {"error", e.what()}, {"hint", e.hint()}};
      write_text_file(failed / "error.json", err.dump(2) + "\n");
    } catch (...) {
    }
  }

 private:
  fs::path root_;
  std::vector<fs::path> written_;
};

inline const char* stage_hint(std::string_view stage) {
  if (stage == "ingest") return "check the changelog grammar or the labeled table header";
  if (stage == "label") return "check the message and blame files and the issue pattern";
  if (stage == "split") return "the labeled data needs both classes";
  if (stage == "graph") return "the change set must be non-empty";
  if (stage == "features") return "setting 2 needs at least one co-editing developer pair";
  if (stage == "train") return "reduce folds or smote_k for small minority classes";
  if (stage == "evaluate") return "the test partition needs at least one positive row";
  return "see the error message";
}

template <class Fn>
auto in_stage(std::string_view stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(e, std::string(stage), stage_hint(stage));
  } catch (const std::exception& e) {
    throw StageError(Error(ErrorKind::internal, e.what()), std::string(stage), stage_hint(stage));
  }
}

}  // namespace detail

/// End-to-end run: ingest, label, split, graph, features, train, evaluate.
/// Writes the bundle to cfg.output and returns it.
inline RunResult run_pipeline(const PipelineConfig& cfg) {
  detail::in_stage("config", [&] {
    validate(cfg);
    return 0;
  });
  detail::Workspace ws(cfg.output);
  std::string stage = "ingest";
  try {
    using clock = std::chrono::steady_clock;
    json timings = json::object();
    auto timed = [&](const char* name, auto&& fn) {
      stage = name;
      const auto t0 = clock::now();
      auto value = detail::in_stage(name, fn);
      timings[name] = std::chrono::duration<double>(clock::now() - t0).count();
      return value;
    };

    RunResult result;
    const SeedPlan seeds = SeedPlan::from(cfg.seed);

    const ChangeSet raw = timed("ingest", [&] { return ingest_stage(cfg); });
    const LabelOutput labeled = timed("label", [&] { return label_stage(cfg, raw); });
    const ChangeSet& changes = labeled.changes;
    const std::string change_table = write_change_table(changes);
    ws.write("changes.csv", change_table);
    if (labeled.ran_szz) ws.write("defect-pairs.csv", szz::write_defect_pairs(labeled.pairs));

    const SplitIndices split =
        timed("split", [&] { return stratified_split(labels_of(changes), cfg.train_fraction, seeds.split); });
    ws.write("split.json", json({{"train", split.train}, {"test", split.test}}).dump() + "\n");

    const GraphOutput graphs = timed("graph", [&] {
      return graph_stage(graph_population(changes, cfg.graph_scope, split), cfg.projection_weight);
    });
    ws.write("bipartite.csv", write_bipartite_edge_list(graphs.contribution));
    ws.write("projection.csv", write_projection_edge_list(graphs.projection));

    // Content-addressed feature cache.
    const json repro = reproducible_config(cfg);
    std::uint64_t features_key = fnv1a(kToolVersion);
    features_key = fnv1a(change_table, features_key);
    features_key = fnv1a(repro.dump(), features_key);
    const fs::path cache_dir = ws.root() / "cache";
    const fs::path features_cache = cache_dir / ("features-" + hex64(features_key) + ".csv");

    const FeatureMatrix features = timed("features", [&] {
      if (cfg.cache && fs::exists(features_cache)) {
        result.features_cache_hit = true;
        return load_feature_csv(read_text_file(features_cache));
      }
      auto m = features_stage(changes, graphs.projection, cfg.setting, seeds.features);
      if (cfg.cache) write_text_file(features_cache, write_feature_csv(m));
      return m;
    });
    result.excluded_unlabeled = changes.size() - features.rows();
    ws.write("features.csv", write_feature_csv(features));
    const json features_manifest = {{"setting", to_int(cfg.setting)},
                                    {"columns", features.columns()},
                                    {"rows", features.rows()},
                                    {"seed", seeds.features},
                                    {"projection_weight", to_string(cfg.projection_weight)},
                                    {"graph_scope", cfg.graph_scope == GraphScope::full ? "full" : "train-only"},
                                    {"node2vec",
                                     {{"dimensions", Node2VecParams{}.dimensions},
                                      {"walk_length", Node2VecParams{}.walk_length},
                                      {"walks_per_node", Node2VecParams{}.walks_per_node},
                                      {"window", Node2VecParams{}.window},
                                      {"return_p", Node2VecParams{}.return_p},
                                      {"in_out_q", Node2VecParams{}.in_out_q},
                                      {"negative", Node2VecParams{}.negative},
                                      {"epochs", Node2VecParams{}.epochs},
                                      {"learning_rate", Node2VecParams{}.learning_rate}}},
                                    {"pagerank_damping", kPageRankDamping}};
    ws.write("features.manifest.json", features_manifest.dump(2) + "\n");

    const PreparedData prepared = timed("prepare", [&] { return prepare_stage(features, split, cfg, seeds); });

    std::vector<TrainOutput> models;
    for (ClassifierKind kind : cfg.classifiers) {
      const std::string name(to_string(kind));
      const fs::path model_cache = cache_dir / ("model-" + name + "-" + hex64(fnv1a(name, features_key)) + ".json");
      models.push_back(timed("train", [&] {
        if (cfg.cache && fs::exists(model_cache)) {
          result.model_cache_hit[name] = true;
          TrainOutput t;
          t.model = model_from_json(json::parse(read_text_file(model_cache)));
          for (const auto& s : t.model.manifest.value("cv", json::array()))
            t.cv.push_back({s.at("hyperparameters").get<Hyperparameters>(), {}, s.at("mean_f1").get<double>()});
          return t;
        }
        result.model_cache_hit[name] = false;
        auto t = train_stage(kind, prepared, cfg, seeds);
        if (cfg.cache) write_text_file(model_cache, model_to_json(t.model).dump() + "\n");
        return t;
      }));
      ws.write("model-" + name + ".json", model_to_json(models.back().model).dump() + "\n");
    }

    auto results = timed("evaluate", [&] { return evaluate_stage(models, prepared.test); });
    result.test_reads = prepared.test.reads();

    ReportBundle& bundle = result.bundle;
    bundle.directory = ws.root();
    bundle.setting = cfg.setting;
    bundle.results = std::move(results);

    const std::uint64_t manifest_hash = fnv1a(repro.dump(), fnv1a(change_table, fnv1a(kToolVersion)));
    json classifiers = json::object();
    for (const auto& r : bundle.results) classifiers[std::string(to_string(r.kind))] = report_to_json(r, cfg.setting);
    const auto positives_test = static_cast<std::size_t>(std::count(
        prepared.test.peek().labels().begin(), prepared.test.peek().labels().end(), 1));
    bundle.report = {{"format", kReportFormat},
                     {"setting", to_int(cfg.setting)},
                     {"seed", cfg.seed},
                     {"manifest", "manifest.json"},
                     {"manifest_hash", hex64(manifest_hash)},
                     {"rows",
                      {{"changes", changes.size()},
                       {"labeled", features.rows()},
                       {"train", split.train.size()},
                       {"test", split.test.size()},
                       {"test_positive", positives_test}}},
                     {"graph",
                      {{"developers", graphs.contribution.developers().size()},
                       {"files", graphs.contribution.files().size()},
                       {"contribution_edges", graphs.contribution.edge_count()},
                       {"projection_edges", graphs.projection.edge_count()}}},
                     {"baseline_f1", reference::kBaselineF1},
                     {"classifiers", classifiers}};
    if (labeled.theta) bundle.report["exposure_threshold_seconds"] = *labeled.theta;
    ws.write("report.json", bundle.report.dump(2) + "\n");

    stage = "emit";
    for (const auto& p : detail::in_stage("emit", [&] { return emit_plot_data(bundle); })) ws.track(p);

    json cache_info = {{"features_key", hex64(features_key)}, {"features_hit", result.features_cache_hit},
                       {"models_hit", result.model_cache_hit}};
    bundle.manifest = {{"tool", "jitgp"},
                       {"version", kToolVersion},
                       {"config", config_to_json(cfg)},
                       {"manifest_hash", hex64(manifest_hash)},
                       {"seeds", seeds.to_json()},
                       {"cache", cache_info},
                       {"timings_seconds", timings},
                       {"test_partition_reads", result.test_reads}};
    ws.write("manifest.json", bundle.manifest.dump(2) + "\n");
    return result;
  } catch (const StageError& e) {
    ws.park_failure(e);
    throw;
  } catch (const Error& e) {
    StageError wrapped(e, stage, detail::stage_hint(stage));
    ws.park_failure(wrapped);
    throw wrapped;
  }
}

}  // namespace jitgp
