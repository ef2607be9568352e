#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "jitgp/grid_search.hpp"
#include "jitgp/metrics.hpp"
#include "jitgp/model.hpp"
#include "jitgp/preprocess.hpp"

using namespace jitgp;

namespace {

Dataset train_rows(std::size_t cols, std::vector<double> values, std::vector<int> labels) {
  return Dataset(cols, std::move(values), std::move(labels), Partition::train);
}

/// Gaussian blobs; `xor_layout` puts positives on the anti-diagonal corners.
Dataset blobs(std::uint64_t seed, std::size_t per_blob, bool xor_layout, double spread = 0.08) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, spread);
  Dataset d(2, Partition::train);
  const double centers[4][2] = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  for (int b = 0; b < 4; ++b) {
    const int label = xor_layout ? (b >= 2 ? 1 : 0) : (b % 2);
    for (std::size_t i = 0; i < per_blob; ++i) {
      const double x[2] = {centers[b][0] + noise(gen), centers[b][1] + noise(gen)};
      const double shift = xor_layout ? 0.0 : (label ? 0.6 : -0.6);
      const double row[2] = {x[0] + shift, x[1] + shift};
      d.add_row(row, label);
    }
  }
  return d;
}

double accuracy(const TrainedModel& m, const Dataset& d) {
  const auto p = predict_proba(m, d);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.rows(); ++i) ok += (p[i] >= 0.5) == (d.label(i) == 1);
  return static_cast<double>(ok) / static_cast<double>(d.rows());
}

double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Splitting

TEST(Split, ProportionalAllocation) {
  std::vector<int> labels(100, 0);
  for (int i = 0; i < 40; ++i) labels[static_cast<std::size_t>(i * 2)] = 1;
  const auto s = stratified_split(labels, 0.75, 3);
  EXPECT_EQ(s.train.size(), 75u);
  std::size_t pos = 0;
  for (auto i : s.train) pos += static_cast<std::size_t>(labels[i]);
  EXPECT_NEAR(static_cast<double>(pos), 30.0, 1.0);
  std::vector<bool> seen(100, false);
  for (auto i : s.train) seen[i] = true;
  for (auto i : s.test) {
    EXPECT_FALSE(seen[i]);
    seen[i] = true;
  }
  EXPECT_EQ(std::count(seen.begin(), seen.end(), true), 100);
}

TEST(Split, Deterministic) {
  std::vector<int> labels;
  for (int i = 0; i < 57; ++i) labels.push_back(i % 4 == 0);
  const auto a = stratified_split(labels, 0.75, 9), b = stratified_split(labels, 0.75, 9);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(stratified_split(labels, 0.75, 10).train, a.train);
}

TEST(Split, FourRowsKeepBothClasses) {
  const std::vector<int> labels{1, 0, 1, 0};
  // Oracle: allocations of 3 training rows within one sample of each class's
  // share (1.5) are {2,1} and {1,2}; both keep each class in train.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = stratified_split(labels, 0.75, seed);
    ASSERT_EQ(s.train.size(), 3u);
    int pos = 0;
    for (auto i : s.train) pos += labels[i];
    EXPECT_TRUE(pos == 1 || pos == 2);
  }
}

TEST(Split, SingleClassRejected) {
  try {
    stratified_split({1, 1, 1}, 0.75, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
  }
}

TEST(Folds, StratifiedAndGuarded) {
  std::vector<int> labels;
  for (int i = 0; i < 103; ++i) labels.push_back(i % 3 == 0);
  const auto f = stratified_folds(labels, 10, 4);
  for (std::size_t k = 0; k < 10; ++k) {
    std::size_t pos = 0, all = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (f[i] == k) ++all, pos += static_cast<std::size_t>(labels[i]);
    EXPECT_GE(pos, 3u);
    EXPECT_LE(all, 11u);
  }
  std::vector<int> few(30, 0);
  for (int i = 0; i < 9; ++i) few[static_cast<std::size_t>(i)] = 1;
  EXPECT_THROW(stratified_folds(few, 10, 1), Error);
}

// ---------------------------------------------------------------------------
// Scaling

TEST(Scaler, Examples) {
  const auto train = train_rows(2, {2, 7, 4, 7, 6, 7}, {0, 1, 0});
  const auto s = minmax_fit(train);
  const auto scaled = minmax_apply(s, train);
  EXPECT_EQ(scaled.at(0, 0), 0.0);
  EXPECT_EQ(scaled.at(1, 0), 0.5);
  EXPECT_EQ(scaled.at(2, 0), 1.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(scaled.at(i, 1), 0.0);
  std::vector<double> test{8, 9};
  minmax_apply_row(s, test);
  EXPECT_EQ(test[0], 1.5);
  EXPECT_EQ(test[1], 0.0);
}

TEST(Scaler, RefusesTestRows) {
  const Dataset test(1, {1, 2}, {0, 1}, Partition::test);
  EXPECT_THROW(minmax_fit(test), Error);
  const auto train = train_rows(1, {3, 4}, {0, 1});
  try {
    minmax_fit(concat(train, test));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::consistency);
  }
}

// ---------------------------------------------------------------------------
// SMOTE

TEST(Smote, CollinearWithKOne) {
  const auto train = train_rows(2, {0, 0, 1, 1, 5, 5, 6, 6, 7, 7, 8, 8}, {1, 1, 0, 0, 0, 0});
  const auto r = smote_oversample(train, {1, 3});
  ASSERT_EQ(r.data.rows(), 8u);
  for (std::size_t i = 6; i < 8; ++i) {
    const auto x = r.data.row(i);
    EXPECT_EQ(x[0], x[1]);
    EXPECT_GE(x[0], 0.0);
    EXPECT_LE(x[0], 1.0);
    EXPECT_EQ(r.data.label(i), 1);
  }
}

TEST(Smote, BalancesEightyTwenty) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0, 1);
  Dataset d(3, Partition::train);
  for (int i = 0; i < 100; ++i) {
    const double x[3] = {u(gen), u(gen), u(gen)};
    d.add_row(x, i < 20 ? 1 : 0);
  }
  const auto r = smote_oversample(d, {5, 8});
  EXPECT_EQ(r.data.count(0), 80u);
  EXPECT_EQ(r.data.count(1), 80u);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_TRUE(std::equal(d.row(i).begin(), d.row(i).end(), r.data.row(i).begin()));
}

TEST(Smote, EverySyntheticRowOnASegmentToAKnn) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(0, 1);
  Dataset d(4, Partition::train);
  for (int i = 0; i < 150; ++i) {
    const double x[4] = {u(gen), u(gen), std::round(4 * u(gen)), u(gen)};
    d.add_row(x, i % 5 == 0 ? 1 : 0);
  }
  const auto r = smote_oversample(d, {5, 77});
  std::vector<std::size_t> minority;
  for (std::size_t i = 0; i < d.rows(); ++i)
    if (d.label(i) == 1) minority.push_back(i);
  for (std::size_t s = d.rows(); s < r.data.rows(); ++s) {
    const auto x = r.data.row(s);
    bool explained = false;
    for (std::size_t a : minority) {
      std::vector<double> dists;
      for (std::size_t b : minority)
        if (b != a) dists.push_back(dist2(d.row(a), d.row(b)));
      std::sort(dists.begin(), dists.end());
      const double kth = dists[4];
      for (std::size_t b : minority) {
        if (b == a || dist2(d.row(a), d.row(b)) > kth) continue;
        // Solve x = a + t (b - a) in least squares and check the residual.
        double num = 0, den = 0;
        for (std::size_t c = 0; c < 4; ++c) {
          num += (x[c] - d.at(a, c)) * (d.at(b, c) - d.at(a, c));
          den += (d.at(b, c) - d.at(a, c)) * (d.at(b, c) - d.at(a, c));
        }
        const double t = den > 0 ? num / den : 0.0;
        if (t < -1e-12 || t > 1 + 1e-12) continue;
        double resid = 0;
        for (std::size_t c = 0; c < 4; ++c) {
          const double e = d.at(a, c) + t * (d.at(b, c) - d.at(a, c)) - x[c];
          resid += e * e;
        }
        if (resid < 1e-20) {
          explained = true;
          EXPECT_LE(dist2(x, d.row(a)), dist2(d.row(a), d.row(b)) + 1e-12);
          break;
        }
      }
      if (explained) break;
    }
    EXPECT_TRUE(explained) << "synthetic row " << s;
  }
}

TEST(Smote, TooFewMinorityRows) {
  const auto d = train_rows(1, {0, 1, 2, 3, 4, 5, 6, 7}, {1, 1, 1, 0, 0, 0, 0, 0});
  try {
    smote_oversample(d, {5, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::data);
    EXPECT_NE(std::string(e.what()).find("lower k"), std::string::npos);
  }
  EXPECT_THROW(smote_oversample(Dataset(1, {0, 1}, {0, 1}, Partition::test), {1, 1}), Error);
}

// ---------------------------------------------------------------------------
// Classifiers

TEST(Logistic, SeparableDataFitsPerfectly) {
  const auto d = blobs(1, 30, false);
  const auto m = train_classifier({ClassifierKind::logistic_regression, {{"C", 100}}, 0}, d);
  EXPECT_EQ(accuracy(m, d), 1.0);
  const auto& lr = std::get<LogisticModel>(m.parameters);
  EXPECT_LE(lr.gradient_norm, 1e-6);
}

TEST(Logistic, LinearBoundary) {
  const auto d = blobs(2, 30, false);
  const auto m = train_classifier({ClassifierKind::logistic_regression, {{"C", 1}}, 0}, d);
  const auto& lr = std::get<LogisticModel>(m.parameters);
  std::vector<double> far(2);
  for (std::size_t j = 0; j < 2; ++j) far[j] = 100.0 * lr.coefficients[j];
  EXPECT_GT(predict_row(m, far), 0.5);
}

TEST(Logistic, ObjectiveGradientVanishes) {
  // First-order optimality of mean logloss + |w|^2 / (2 C n), checked externally.
  const auto d = blobs(3, 20, true, 0.3);
  const double C = 0.5;
  const auto m = train_classifier({ClassifierKind::logistic_regression, {{"C", C}}, 0}, d);
  const auto& lr = std::get<LogisticModel>(m.parameters);
  const double n = static_cast<double>(d.rows());
  double g0 = 0, g1 = 0, g2 = 0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-(lr.intercept + lr.coefficients[0] * d.at(i, 0) + lr.coefficients[1] * d.at(i, 1))));
    const double r = p - d.label(i);
    g0 += r / n;
    g1 += r * d.at(i, 0) / n;
    g2 += r * d.at(i, 1) / n;
  }
  g1 += lr.coefficients[0] / (C * n);
  g2 += lr.coefficients[1] / (C * n);
  EXPECT_LT(std::sqrt(g0 * g0 + g1 * g1 + g2 * g2), 1e-6);
}

TEST(Classifiers, XorPattern) {
  const auto d = blobs(4, 25, true);
  const auto lr = train_classifier({ClassifierKind::logistic_regression, {{"C", 100}}, 0}, d);
  EXPECT_LE(accuracy(lr, d), 0.75);
  const auto rf = train_classifier({ClassifierKind::random_forest, {{"n_estimators", 100}}, 5}, d);
  EXPECT_EQ(accuracy(rf, d), 1.0);
}

TEST(Boosting, ZeroLearningRateIsPrior) {
  const auto d = blobs(5, 10, false);
  Dataset skewed = d;
  const double extra[2] = {5, 5};
  for (int i = 0; i < 10; ++i) skewed.add_row(extra, 1);
  const auto m =
      train_classifier({ClassifierKind::gradient_boosted_trees, {{"learning_rate", 0.0}, {"n_estimators", 10}}, 1}, skewed);
  const double pos = static_cast<double>(skewed.count(1)), neg = static_cast<double>(skewed.count(0));
  for (double p : predict_proba(m, skewed)) EXPECT_NEAR(p, pos / (pos + neg), 1e-12);
  EXPECT_NEAR(std::get<BoostedModel>(m.parameters).initial_log_odds, std::log(pos / neg), 1e-12);
}

TEST(Boosting, LearnsXorAndDepthLimit) {
  const auto d = blobs(6, 25, true);
  const auto m =
      train_classifier({ClassifierKind::gradient_boosted_trees, {{"learning_rate", 0.1}, {"n_estimators", 100}}, 1}, d);
  EXPECT_EQ(accuracy(m, d), 1.0);
  for (const auto& t : std::get<BoostedModel>(m.parameters).trees) EXPECT_LE(t.depth(), 6u);
}

TEST(Predict, FormulasMatchReference) {
  const auto d = blobs(7, 15, true, 0.2);
  const auto lr = train_classifier({ClassifierKind::logistic_regression, {{"C", 10}}, 0}, d);
  const auto rf = train_classifier({ClassifierKind::random_forest, {{"n_estimators", 15}}, 3}, d);
  const auto gb =
      train_classifier({ClassifierKind::gradient_boosted_trees, {{"learning_rate", 0.1}, {"n_estimators", 20}}, 3}, d);
  const auto& L = std::get<LogisticModel>(lr.parameters);
  const auto& F = std::get<ForestModel>(rf.parameters);
  const auto& B = std::get<BoostedModel>(gb.parameters);
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const auto x = d.row(i);
    const double z = L.intercept + L.coefficients[0] * x[0] + L.coefficients[1] * x[1];
    EXPECT_NEAR(predict_row(lr, x), 1.0 / (1.0 + std::exp(-z)), 1e-14);
    double vote = 0;
    for (const auto& t : F.trees) vote += t.predict(x);
    EXPECT_NEAR(predict_row(rf, x), vote / static_cast<double>(F.trees.size()), 1e-14);
    double f = B.initial_log_odds;
    for (const auto& t : B.trees) f += B.learning_rate * t.predict(x);
    EXPECT_NEAR(predict_row(gb, x), 1.0 / (1.0 + std::exp(-f)), 1e-14);
    for (const auto* m : {&lr, &rf, &gb}) {
      const double p = predict_row(*m, x);
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
  }
}

TEST(Predict, TrivialCases) {
  TrainedModel zero;
  zero.kind = ClassifierKind::logistic_regression;
  zero.width = 3;
  zero.parameters = LogisticModel{{0, 0, 0}, 0.0, 0, 0.0};
  const double row[3] = {4, -2, 9};
  EXPECT_EQ(predict_row(zero, row), 0.5);

  TrainedModel unanimous;
  unanimous.kind = ClassifierKind::random_forest;
  unanimous.width = 3;
  ForestModel f;
  DecisionTree leaf;
  leaf.nodes.push_back({-1, 0.0, -1, -1, 1.0});
  f.trees.assign(7, leaf);
  unanimous.parameters = f;
  EXPECT_EQ(predict_row(unanimous, row), 1.0);

  const double narrow[2] = {1, 2};
  try {
    predict_row(zero, narrow);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
  }
}

TEST(Forest, PrefixOfLargerForestAndThreadIndependent) {
  const auto d = blobs(8, 20, true, 0.25);
  const auto small = fit_forest(d, {10, 42, 1});
  const auto big = fit_forest(d, {40, 42, 4});
  for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_EQ(small.predict_proba(d.row(i)), big.predict_proba(d.row(i), 10));
  const auto big1 = fit_forest(d, {40, 42, 1});
  for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_EQ(big1.predict_proba(d.row(i)), big.predict_proba(d.row(i)));
}

TEST(Training, UnknownHyperparameterIsConfigError) {
  const auto d = blobs(9, 5, false);
  try {
    train_classifier({ClassifierKind::random_forest, {{"max_depth", 3}}, 0}, d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
  EXPECT_THROW(train_classifier({ClassifierKind::logistic_regression, {{"n_estimators", 3}}, 0}, d), Error);
  EXPECT_THROW(train_classifier({ClassifierKind::random_forest, {}, 0}, Dataset(2, {0, 0}, {1}, Partition::test)), Error);
}

TEST(Training, ModelJsonRoundTrip) {
  const auto d = blobs(10, 10, true, 0.2);
  for (const ClassifierSpec& spec :
       {ClassifierSpec{ClassifierKind::logistic_regression, {{"C", 3}}, 0},
        ClassifierSpec{ClassifierKind::random_forest, {{"n_estimators", 5}}, 1},
        ClassifierSpec{ClassifierKind::gradient_boosted_trees, {{"learning_rate", 0.1}, {"n_estimators", 5}}, 2}}) {
    auto m = train_classifier(spec, d);
    m.scaler = minmax_fit(d);
    const auto text = model_to_json(m).dump();
    const auto back = model_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(model_to_json(back).dump(), text);
    for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_EQ(predict_row(back, d.row(i)), predict_row(m, d.row(i)));
  }
}

// ---------------------------------------------------------------------------
// Grid search

TEST(GridSearch, SinglePointReturned) {
  const auto d = blobs(11, 15, false);
  const auto r = grid_search(ClassifierKind::logistic_regression, {{{"C", 10}}}, d, {5, 1, 5, 1});
  EXPECT_EQ(r.best.hyperparameters, (Hyperparameters{{"C", 10}}));
  ASSERT_EQ(r.scores.size(), 1u);
  EXPECT_EQ(r.scores[0].fold_f1.size(), 5u);
}

TEST(GridSearch, BestMeanF1WinsAndMatchesExternalRecomputation) {
  const auto d = blobs(12, 20, false, 0.35);
  GridSearchOptions opt;
  opt.folds = 5;
  opt.seed = 17;
  opt.smote_k = std::nullopt;
  const std::vector<Hyperparameters> grid{{{"C", 0.01}}, {{"C", 100}}};
  const auto r = grid_search(ClassifierKind::logistic_regression, grid, d, opt);

  const auto folds = stratified_folds(d.labels(), 5, derive_seed(17, "folds"));
  std::vector<double> mean(2, 0.0);
  for (std::size_t g = 0; g < 2; ++g)
    for (std::size_t k = 0; k < 5; ++k) {
      std::vector<std::size_t> tr, va;
      for (std::size_t i = 0; i < d.rows(); ++i) (folds[i] == k ? va : tr).push_back(i);
      const auto m = train_classifier({ClassifierKind::logistic_regression, grid[g], 0}, d.subset(tr));
      const Dataset v = d.subset(va);
      mean[g] += precision_recall_f1(confusion_at_threshold(predict_proba(m, v), v.labels(), 0.5)).f1 / 5.0;
    }
  for (std::size_t g = 0; g < 2; ++g) EXPECT_NEAR(r.scores[g].mean_f1, mean[g], 1e-12);
  const std::size_t want = mean[1] > mean[0] ? 1 : 0;
  EXPECT_EQ(r.best.hyperparameters, grid[want]);
}

TEST(GridSearch, TiesGoToSimplerModel) {
  // Perfectly separable: every forest size scores F1 = 1.
  const auto d = blobs(13, 20, false, 0.02);
  const auto r = grid_search(ClassifierKind::random_forest, search_grid(ClassifierKind::random_forest), d, {5, 3, 5, 1});
  for (const auto& s : r.scores) EXPECT_EQ(s.mean_f1, 1.0);
  EXPECT_EQ(r.best.hyperparameters.at("n_estimators"), 10.0);
}

TEST(GridSearch, EnsemblePrefixMatchesSeparateFits) {
  const auto d = blobs(14, 15, true, 0.3);
  const std::vector<Hyperparameters> grid{{{"learning_rate", 0.1}, {"n_estimators", 5}},
                                          {{"learning_rate", 0.1}, {"n_estimators", 20}}};
  GridSearchOptions opt{4, 5, std::nullopt, 1};
  const auto joint = grid_search(ClassifierKind::gradient_boosted_trees, grid, d, opt);
  for (std::size_t g = 0; g < 2; ++g) {
    const auto alone = grid_search(ClassifierKind::gradient_boosted_trees, {grid[g]}, d, opt);
    EXPECT_EQ(alone.scores[0].fold_f1, joint.scores[g].fold_f1);
  }
}

TEST(GridSearch, TooFewMinorityForFolds) {
  std::vector<double> v;
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) v.push_back(i), y.push_back(i < 6);
  const auto d = train_rows(1, v, y);
  try {
    grid_search(ClassifierKind::logistic_regression, {{{"C", 1}}}, d, {10, 1, std::nullopt, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("fewer folds"), std::string::npos);
  }
}

TEST(GridSearch, ThreadCountDoesNotChangeScores) {
  const auto d = blobs(15, 15, true, 0.3);
  const auto a = grid_search(ClassifierKind::random_forest, search_grid(ClassifierKind::random_forest), d, {4, 2, 5, 1});
  const auto b = grid_search(ClassifierKind::random_forest, search_grid(ClassifierKind::random_forest), d, {4, 2, 5, 4});
  for (std::size_t g = 0; g < a.scores.size(); ++g) EXPECT_EQ(a.scores[g].fold_f1, b.scores[g].fold_f1);
}

TEST(TestPartitionGuard, CountsReadsAndStaysUntouched) {
  const Dataset rows(2, {1, 2, 3, 4}, {0, 1}, Partition::unsplit);
  TestPartition t(rows);
  std::vector<double> before = t.peek().values();
  EXPECT_EQ(t.reads(), 0u);
  const auto& r = t.read();
  EXPECT_EQ(t.reads(), 1u);
  EXPECT_EQ(r.role(), Partition::test);
  EXPECT_THROW(smote_oversample(r, {1, 1}), Error);
  EXPECT_EQ(std::memcmp(before.data(), t.peek().values().data(), before.size() * sizeof(double)), 0);
}
