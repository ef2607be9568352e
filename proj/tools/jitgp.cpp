// jitgp command-line driver.
#include <cstdio>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "jitgp/pipeline.hpp"

namespace {

using namespace jitgp;
using nlohmann::json;

void write_or_print(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") std::cout << content;
  else write_text_file(path, content);
}

Dataset load_dataset(const std::string& path) { return to_dataset(load_feature_csv(read_text_file(path))); }

struct Options {
  std::string config_path;
  std::string changelog, labeled, messages, blame, issues;
  std::string setting, classifier, weight, scope, grid, output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads, folds;
  bool no_cache = false, no_smote = false;
};

// Precedence: command-line flags, then JITGP_SEED, then the config file.
PipelineConfig resolve_config(const Options& o) {
  PipelineConfig cfg;
  if (!o.config_path.empty()) cfg = parse_config(read_text_file(o.config_path));
  apply_environment(cfg);
  auto set = [&](const char* key, const std::string& v) {
    if (!v.empty()) apply_setting(cfg, key, v);
  };
  set("changelog", o.changelog);
  set("labeled", o.labeled);
  set("messages", o.messages);
  set("blame", o.blame);
  set("issue_reports", o.issues);
  set("setting", o.setting);
  set("classifier", o.classifier);
  set("projection_weight", o.weight);
  set("graph_scope", o.scope);
  set("grid", o.grid);
  set("output", o.output);
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = std::max<std::size_t>(1, *o.threads);
  if (o.folds) cfg.folds = *o.folds;
  if (o.no_cache) cfg.cache = false;
  if (o.no_smote) cfg.smote = false;
  if (!o.labeled.empty() && o.changelog.empty()) cfg.changelog.clear();
  if (!o.changelog.empty() && o.labeled.empty()) cfg.labeled.clear();
  return cfg;
}

int run_aggregate(const std::vector<std::string>& reports, const std::string& metric, const std::string& out) {
  static const std::set<std::string> metrics{"precision", "recall", "f1", "mcc", "auc_pr"};
  if (!metrics.contains(metric))
    fail(ErrorKind::config, "unknown metric '" + metric + "' (expected precision, recall, f1, mcc or auc_pr)");
  RepoMetrics per_repo;
  for (const auto& path : reports) {
    const json r = json::parse(read_text_file(path));
    for (const auto& [name, c] : r.at("classifiers").items()) per_repo[path][name] = c.at(metric).get<double>();
  }
  std::string table = "classifier,mean,average_rank\n";
  for (const auto& [name, s] : aggregate_ranks(per_repo))
    csv::append_row(table, {name, csv::format_double(s.mean), csv::format_double(s.average_rank)});
  write_or_print(out, table);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Just-in-time defect prediction from developer contribution graphs"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  Options o;
  std::string in, out, model_path, pairs_out, metric = "f1";
  std::vector<std::string> aggregate;
  std::uint64_t seed = 42;
  double train_fraction = 0.75;

  auto* ingest = app.add_subcommand("ingest", "Parse a changelog into a change table");
  ingest->add_option("changelog", in, "Changelog file")->required()->check(CLI::ExistingFile);
  ingest->add_option("-o,--out", out, "Change table (default stdout)");

  auto* label = app.add_subcommand("label", "Label changes with SZZ and the early-exposure threshold");
  label->add_option("changes", in, "Change table or changelog")->required()->check(CLI::ExistingFile);
  label->add_option("--messages", o.messages, "commit,message[,timestamp] table")->required()->check(CLI::ExistingFile);
  label->add_option("--blame", o.blame, "Blame table")->required()->check(CLI::ExistingFile);
  label->add_option("--issues", o.issues, "issue,created_timestamp table")->check(CLI::ExistingFile);
  label->add_option("--pairs", pairs_out, "Write defect pairs here");
  label->add_option("-o,--out", out, "Labeled change table (default stdout)");

  auto* graph = app.add_subcommand("graph", "Build the contribution graph and developer projection");
  graph->add_option("changes", in, "Change table")->required()->check(CLI::ExistingFile);
  graph->add_option("--projection-weight", o.weight, "endpoint-sum or common-neighbors");
  graph->add_option("-o,--out", out, "Output directory")->required();

  auto* features = app.add_subcommand("features", "Compute per-change graph features");
  features->add_option("changes", in, "Labeled change table")->required()->check(CLI::ExistingFile);
  features->add_option("--setting", o.setting, "1 (centralities) or 2 (communities and embeddings)");
  features->add_option("--projection-weight", o.weight, "endpoint-sum or common-neighbors");
  features->add_option("--seed", seed, "Master seed");
  features->add_option("-o,--out", out, "Feature CSV (default stdout)");

  auto* train = app.add_subcommand("train", "Split features, tune and fit a classifier");
  train->add_option("features", in, "Feature CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--classifier", o.classifier, "logreg, rf or gbdt");
  train->add_option("--grid", o.grid, "search or preset");
  train->add_option("--seed", seed, "Master seed");
  train->add_option("--folds", o.folds, "Cross-validation folds");
  train->add_option("--train-fraction", train_fraction, "Training share of the stratified split");
  train->add_flag("--no-smote", o.no_smote, "Train on the unbalanced rows");
  train->add_option("--threads", o.threads, "Worker threads");
  train->add_option("-o,--out", out, "Output directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Score a model on held-out rows, or rank saved reports");
  evaluate->add_option("--model", model_path, "Model JSON")->check(CLI::ExistingFile);
  evaluate->add_option("--features", in, "Held-out feature CSV")->check(CLI::ExistingFile);
  evaluate->add_option("--aggregate", aggregate, "report.json files to rank across")->check(CLI::ExistingFile);
  evaluate->add_option("--metric", metric, "Metric to rank by");
  evaluate->add_option("-o,--out", out, "Output (default stdout)");

  auto* run = app.add_subcommand("run", "Run the whole pipeline");
  run->add_option("--config", o.config_path, "key = value config file")->check(CLI::ExistingFile);
  run->add_option("--changelog", o.changelog, "Raw changelog")->check(CLI::ExistingFile);
  run->add_option("--labeled", o.labeled, "Labeled change table")->check(CLI::ExistingFile);
  run->add_option("--messages", o.messages, "Commit message table")->check(CLI::ExistingFile);
  run->add_option("--blame", o.blame, "Blame table")->check(CLI::ExistingFile);
  run->add_option("--issues", o.issues, "Issue report table")->check(CLI::ExistingFile);
  run->add_option("--setting", o.setting, "1 or 2");
  run->add_option("--classifier", o.classifier, "logreg, rf, gbdt, a comma list or all");
  run->add_option("--projection-weight", o.weight, "endpoint-sum or common-neighbors");
  run->add_option("--graph-scope", o.scope, "full or train-only");
  run->add_option("--grid", o.grid, "search or preset");
  run->add_option("--seed", o.seed, "Master seed");
  run->add_option("--threads", o.threads, "Worker threads");
  run->add_option("--folds", o.folds, "Cross-validation folds");
  run->add_flag("--no-cache", o.no_cache, "Ignore and do not write the cache");
  run->add_flag("--no-smote", o.no_smote, "Train on the unbalanced rows");
  run->add_option("-o,--out", o.output, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ingest) {
      write_or_print(out, write_change_table(parse_changelog(read_text_file(in))));
    } else if (*label) {
      const std::string text = read_text_file(in);
      const ChangeSet changes =
          text.rfind(kChangeTableHeader, 0) == 0 ? load_change_table(text) : parse_changelog(text);
      szz::SzzInputs inputs;
      inputs.messages = szz::load_commit_messages(read_text_file(o.messages));
      inputs.blame = szz::load_blame_records(read_text_file(o.blame));
      if (!o.issues.empty()) inputs.report_created = szz::load_issue_reports(read_text_file(o.issues));
      const auto result = szz::label_changes(changes, inputs);
      if (!pairs_out.empty()) write_text_file(pairs_out, szz::write_defect_pairs(result.pairs));
      std::cerr << "fixes=" << result.fixes.size() << " pairs=" << result.pairs.size()
                << " skipped_fixes=" << result.skipped_fixes << " theta_seconds="
                << csv::format_double(result.threshold->seconds()) << "\n";
      write_or_print(out, write_change_table(result.labeled));
    } else if (*graph) {
      const ChangeSet changes = load_change_table(read_text_file(in));
      const auto g = graph_stage(changes, o.weight.empty() ? ProjectionWeight::endpoint_sum : parse_projection_weight(o.weight));
      write_text_file(fs::path(out) / "bipartite.csv", write_bipartite_edge_list(g.contribution));
      write_text_file(fs::path(out) / "projection.csv", write_projection_edge_list(g.projection));
    } else if (*features) {
      const ChangeSet changes = load_change_table(read_text_file(in));
      const auto g = graph_stage(changes, o.weight.empty() ? ProjectionWeight::endpoint_sum : parse_projection_weight(o.weight));
      const auto setting = o.setting.empty() ? FeatureSetting::centralities : parse_setting(o.setting);
      const auto m = features_stage(changes, g.projection, setting, SeedPlan::from(seed).features);
      if (m.excluded_unlabeled() > 0) std::cerr << "excluded_unlabeled=" << m.excluded_unlabeled() << "\n";
      write_or_print(out, write_feature_csv(m));
    } else if (*train) {
      PipelineConfig cfg;
      cfg.seed = seed;
      cfg.train_fraction = train_fraction;
      if (!o.classifier.empty()) apply_setting(cfg, "classifier", o.classifier);
      if (!o.grid.empty()) apply_setting(cfg, "grid", o.grid);
      if (o.folds) cfg.folds = *o.folds;
      if (o.threads) cfg.threads = std::max<std::size_t>(1, *o.threads);
      if (o.no_smote) cfg.smote = false;
      const SeedPlan seeds = SeedPlan::from(cfg.seed);
      const FeatureMatrix m = load_feature_csv(read_text_file(in));
      const SplitIndices split = stratified_split(m.labels(), cfg.train_fraction, seeds.split);
      const PreparedData data = prepare_stage(m, split, cfg, seeds);
      FeatureMatrix test_rows(m.setting(), m.columns());
      for (std::size_t i : split.test) test_rows.add_row(m.ids()[i], m.row(i), m.labels()[i]);
      write_text_file(fs::path(out) / "test-features.csv", write_feature_csv(test_rows));
      for (ClassifierKind kind : cfg.classifiers) {
        const auto t = train_stage(kind, data, cfg, seeds);
        write_text_file(fs::path(out) / ("model-" + std::string(to_string(kind)) + ".json"),
                        model_to_json(t.model).dump() + "\n");
      }
    } else if (*evaluate) {
      if (!aggregate.empty()) return run_aggregate(aggregate, metric, out);
      if (model_path.empty() || in.empty())
        fail(ErrorKind::config, "evaluate needs --model and --features, or --aggregate");
      const TrainedModel model = model_from_json(json::parse(read_text_file(model_path)));
      const Dataset rows = load_dataset(in);
      const auto scores = predict_proba(model, rows);
      ClassifierResult r{model.kind, evaluate_scores(scores, rows.labels()), pr_curve(scores, rows.labels()),
                         model.hyperparameters, {}};
      write_or_print(out, report_to_json(r, FeatureSetting::centralities).dump(2) + "\n");
    } else if (*run) {
      const RunResult r = run_pipeline(resolve_config(o));
      for (const auto& c : r.bundle.results)
        std::cout << to_string(c.kind) << " precision=" << csv::format_double(c.report.precision)
                  << " recall=" << csv::format_double(c.report.recall) << " f1=" << csv::format_double(c.report.f1)
                  << " mcc=" << csv::format_double(c.report.mcc) << " auc_pr=" << csv::format_double(c.report.auc_pr)
                  << "\n";
      std::cout << "output: " << r.bundle.directory.string() << "\n";
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
