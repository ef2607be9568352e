#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "jitgp/boosting.hpp"
#include "jitgp/dataset.hpp"
#include "jitgp/error.hpp"
#include "jitgp/forest.hpp"
#include "jitgp/logistic.hpp"
#include "jitgp/preprocess.hpp"

namespace jitgp {

enum class ClassifierKind { logistic_regression, random_forest, gradient_boosted_trees };

inline std::string_view to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::logistic_regression: return "logreg";
    case ClassifierKind::random_forest: return "rf";
    case ClassifierKind::gradient_boosted_trees: return "gbdt";
  }
  return "?";
}

inline ClassifierKind parse_classifier(std::string_view text) {
  if (text == "logreg" || text == "logistic_regression") return ClassifierKind::logistic_regression;
  if (text == "rf" || text == "random_forest") return ClassifierKind::random_forest;
  if (text == "gbdt" || text == "gradient_boosted_trees") return ClassifierKind::gradient_boosted_trees;
  fail(ErrorKind::config, "unknown classifier '" + std::string(text) + "' (expected logreg, rf or gbdt)");
}

using Hyperparameters = std::map<std::string, double>;

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::random_forest;
  Hyperparameters hyperparameters;
  std::uint64_t seed = 0;
};

/// Hyperparameter names each kind accepts.
inline const std::set<std::string>& allowed_hyperparameters(ClassifierKind kind) {
  static const std::set<std::string> logreg{"C"};
  static const std::set<std::string> rf{"n_estimators"};
  static const std::set<std::string> gbdt{"n_estimators", "learning_rate"};
  switch (kind) {
    case ClassifierKind::logistic_regression: return logreg;
    case ClassifierKind::random_forest: return rf;
    default: return gbdt;
  }
}

/// Search grids for model selection.
inline std::vector<Hyperparameters> search_grid(ClassifierKind kind) {
  std::vector<Hyperparameters> grid;
  switch (kind) {
    case ClassifierKind::logistic_regression:
      for (double c : {0.01, 0.1, 1.0, 10.0, 100.0}) grid.push_back({{"C", c}});
      break;
    case ClassifierKind::random_forest:
      for (double t : {10.0, 100.0, 1000.0}) grid.push_back({{"n_estimators", t}});
      break;
    case ClassifierKind::gradient_boosted_trees:
      for (double lr : {0.001, 0.01, 0.1})
        for (double t : {10.0, 100.0, 1000.0}) grid.push_back({{"learning_rate", lr}, {"n_estimators", t}});
      break;
  }
  return grid;
}

inline double hyperparameter(const ClassifierSpec& spec, const std::string& name, double fallback) {
  for (const auto& [key, value] : spec.hyperparameters)
    if (!allowed_hyperparameters(spec.kind).contains(key))
      fail(ErrorKind::config, "unknown hyperparameter '" + key + "' for " + std::string(to_string(spec.kind)));
  auto it = spec.hyperparameters.find(name);
  return it == spec.hyperparameters.end() ? fallback : it->second;
}

inline std::size_t tree_count(double value) {
  if (!(value >= 1.0) || value != std::floor(value)) fail(ErrorKind::config, "n_estimators must be a positive integer");
  return static_cast<std::size_t>(value);
}

using ModelParameters = std::variant<LogisticModel, ForestModel, BoostedModel>;

inline constexpr std::string_view kModelFormat = "jitgp-model/1";

struct TrainedModel {
  ClassifierKind kind = ClassifierKind::random_forest;
  Hyperparameters hyperparameters;
  std::uint64_t seed = 0;
  std::size_t width = 0;
  /// Applied to incoming rows before scoring when present.
  std::optional<ScalerState> scaler;
  ModelParameters parameters;
  nlohmann::json manifest = nlohmann::json::object();
};

inline TrainedModel train_classifier(const ClassifierSpec& spec, const Dataset& train, std::size_t threads = 1) {
  require_fit_rows(train, "classifier");
  TrainedModel model;
  model.kind = spec.kind;
  model.hyperparameters = spec.hyperparameters;
  model.seed = spec.seed;
  model.width = train.cols();
  switch (spec.kind) {
    case ClassifierKind::logistic_regression: {
      LogisticParams p;
      p.C = hyperparameter(spec, "C", 1.0);
      model.hyperparameters["C"] = p.C;
      model.parameters = fit_logistic(train, p);
      break;
    }
    case ClassifierKind::random_forest: {
      ForestParams p;
      p.n_estimators = tree_count(hyperparameter(spec, "n_estimators", 100.0));
      p.seed = spec.seed;
      p.threads = threads;
      model.hyperparameters["n_estimators"] = static_cast<double>(p.n_estimators);
      model.parameters = fit_forest(train, p);
      break;
    }
    case ClassifierKind::gradient_boosted_trees: {
      BoostingParams p;
      p.n_estimators = tree_count(hyperparameter(spec, "n_estimators", 100.0));
      p.learning_rate = hyperparameter(spec, "learning_rate", 0.1);
      p.seed = spec.seed;
      model.hyperparameters["n_estimators"] = static_cast<double>(p.n_estimators);
      model.hyperparameters["learning_rate"] = p.learning_rate;
      model.parameters = fit_boosting(train, p);
      break;
    }
  }
  return model;
}

/// Probability of the defect-prone class for one row. `use_trees` scores a
/// prefix of a tree ensemble (0 = all trees).
inline double predict_row(const TrainedModel& model, std::span<const double> row, std::size_t use_trees = 0) {
  if (row.size() != model.width)
    fail(ErrorKind::shape, "row has " + std::to_string(row.size()) + " features, model expects " +
                               std::to_string(model.width));
  std::vector<double> scaled;
  if (model.scaler) {
    scaled.assign(row.begin(), row.end());
    minmax_apply_row(*model.scaler, scaled);
    row = scaled;
  }
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LogisticModel>) return p.predict_proba(row);
        else return p.predict_proba(row, use_trees);
      },
      model.parameters);
}

inline std::vector<double> predict_proba(const TrainedModel& model, const Dataset& rows, std::size_t use_trees = 0) {
  if (rows.cols() != model.width)
    fail(ErrorKind::shape, "dataset has " + std::to_string(rows.cols()) + " features, model expects " +
                               std::to_string(model.width));
  std::vector<double> out(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = predict_row(model, rows.row(i), use_trees);
  return out;
}

// ---------------------------------------------------------------------------
// JSON container

namespace detail {

inline nlohmann::json tree_to_json(const DecisionTree& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
  return nodes;
}

inline DecisionTree tree_from_json(const nlohmann::json& j) {
  DecisionTree t;
  for (const auto& n : j)
    t.nodes.push_back({n.at(0).get<std::int32_t>(), n.at(1).get<double>(), n.at(2).get<std::int32_t>(),
                       n.at(3).get<std::int32_t>(), n.at(4).get<double>()});
  if (t.nodes.empty()) fail(ErrorKind::data, "model file contains an empty tree");
  return t;
}

}  // namespace detail

inline nlohmann::json model_to_json(const TrainedModel& m) {
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["kind"] = to_string(m.kind);
  j["hyperparameters"] = m.hyperparameters;
  j["seed"] = m.seed;
  j["width"] = m.width;
  if (m.scaler) j["scaler"] = {{"min", m.scaler->min}, {"max", m.scaler->max}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LogisticModel>) {
          j["parameters"] = {{"coefficients", p.coefficients}, {"intercept", p.intercept}};
        } else if constexpr (std::is_same_v<T, ForestModel>) {
          nlohmann::json trees = nlohmann::json::array();
          for (const auto& t : p.trees) trees.push_back(detail::tree_to_json(t));
          j["parameters"] = {{"trees", trees}};
        } else {
          nlohmann::json trees = nlohmann::json::array();
          for (const auto& t : p.trees) trees.push_back(detail::tree_to_json(t));
          j["parameters"] = {
              {"initial_log_odds", p.initial_log_odds}, {"learning_rate", p.learning_rate}, {"trees", trees}};
        }
      },
      m.parameters);
  j["manifest"] = m.manifest;
  return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat)
      fail(ErrorKind::data, "unsupported model format '" + j.at("format").get<std::string>() + "'");
    TrainedModel m;
    m.kind = parse_classifier(j.at("kind").get<std::string>());
    m.hyperparameters = j.at("hyperparameters").get<Hyperparameters>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.width = j.at("width").get<std::size_t>();
    if (j.contains("scaler"))
      m.scaler = ScalerState{j["scaler"].at("min").get<std::vector<double>>(),
                             j["scaler"].at("max").get<std::vector<double>>()};
    const auto& p = j.at("parameters");
    switch (m.kind) {
      case ClassifierKind::logistic_regression: {
        LogisticModel lm;
        lm.coefficients = p.at("coefficients").get<std::vector<double>>();
        lm.intercept = p.at("intercept").get<double>();
        m.parameters = lm;
        break;
      }
      case ClassifierKind::random_forest: {
        ForestModel fm;
        for (const auto& t : p.at("trees")) fm.trees.push_back(detail::tree_from_json(t));
        m.parameters = fm;
        break;
      }
      case ClassifierKind::gradient_boosted_trees: {
        BoostedModel bm;
        bm.initial_log_odds = p.at("initial_log_odds").get<double>();
        bm.learning_rate = p.at("learning_rate").get<double>();
        for (const auto& t : p.at("trees")) bm.trees.push_back(detail::tree_from_json(t));
        m.parameters = bm;
        break;
      }
    }
    if (j.contains("manifest")) m.manifest = j["manifest"];
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, std::string("malformed model file: ") + e.what());
  }
}

}  // namespace jitgp
