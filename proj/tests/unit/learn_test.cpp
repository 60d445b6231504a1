#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <random>
#include <set>

#include "cnamecloak/learn/baseline.hpp"
#include "cnamecloak/learn/ensemble.hpp"
#include "cnamecloak/learn/importance.hpp"
#include "cnamecloak/learn/model.hpp"
#include "cnamecloak/learn/validation.hpp"
#include "oracles.hpp"

using namespace cnamecloak;
using namespace cnamecloak::learn;

namespace {

encoded_matrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed, double pos_rate = 0.3) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::vector<double>> x(n, std::vector<double>(d));
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : x[i]) v = std::round(u(gen) * 20) / 4;
    y[i] = (x[i][0] + 0.5 * (d > 1 ? x[i][1] : 0) + u(gen) * 2 > 4.5) || u(gen) < pos_rate * 0.2 ? 1 : 0;
  }
  std::vector<std::string> names;
  for (std::size_t f = 0; f < d; ++f) names.push_back("f" + std::to_string(f));
  return encoded_matrix::from_rows(x, y, names);
}

std::vector<std::vector<double>> rows_of(const encoded_matrix& m) {
  std::vector<std::vector<double>> x(m.rows, std::vector<double>(m.cols));
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t c = 0; c < m.cols; ++c) x[i][c] = m(i, c);
  return x;
}

}  // namespace

TEST(Metrics, FromCountsMatchesHarmonicMean) {
  auto m = metrics::from_counts(80, 20, 890, 10);
  EXPECT_DOUBLE_EQ(m.precision, 0.8);
  EXPECT_NEAR(m.recall, 80.0 / 90.0, 1e-15);
  EXPECT_NEAR(m.f1, 2 * m.precision * m.recall / (m.precision + m.recall), 1e-12);
  EXPECT_NEAR(f1_from(0.949, 0.828), 0.884, 0.002);
  auto none = metrics::from_counts(0, 0, 10, 0);
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.f1, 0.0);
}

TEST(Metrics, ScorePredictions) {
  std::vector<int> pred{1, 1, 0, 0, 1}, truth{1, 0, 0, 1, 1};
  auto m = score_predictions(pred, truth);
  EXPECT_EQ(m.tp, 2u);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.tn, 1u);
  EXPECT_EQ(m.fn, 1u);
}

TEST(Tree, GiniRootImpurityAndLeafProbability) {
  auto m = encoded_matrix::from_rows({{0}, {0}, {0}, {1}}, {0, 0, 1, 1}, {"x"});
  std::vector<double> y{0, 0, 1, 1}, w(4, 1.0);
  tree_options opt;
  opt.max_depth = 1;
  auto gen = make_rng(1);
  auto t = tree_builder(m, y, w, opt).build(gen);
  EXPECT_DOUBLE_EQ(t.impurity[0], 0.5);
  ASSERT_EQ(t.size(), 3u);
  const double x0 = 0, x1 = 1;
  EXPECT_NEAR(t.predict(std::span<const double>(&x0, 1)), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(t.predict(std::span<const double>(&x1, 1)), 1.0);
  EXPECT_EQ(t.threshold[0], 0.5);
}

TEST(Tree, SplitMatchesExhaustiveOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto m = random_matrix(40, 2, seed);
    auto x = rows_of(m);
    std::vector<double> y(m.labels.begin(), m.labels.end()), w(m.rows, 1.0);
    tree_options opt;
    opt.max_depth = 2;
    auto gen = make_rng(seed);
    auto t = tree_builder(m, y, w, opt).build(gen);
    std::vector<std::vector<std::size_t>> node_rows(t.size());
    node_rows[0].resize(m.rows);
    std::iota(node_rows[0].begin(), node_rows[0].end(), 0);
    for (std::size_t n = 0; n < t.size(); ++n) {
      if (t.is_leaf(n)) continue;
      auto f = static_cast<std::size_t>(t.feature[n]);
      auto best = oracle::exhaustive_best(x, m.labels, node_rows[n]);
      ASSERT_TRUE(best.found);
      EXPECT_TRUE(oracle::gini_decrease(x, m.labels, node_rows[n], f, t.threshold[n]) == best.decrease) << seed << " node " << n;
      for (auto r : node_rows[n]) node_rows[static_cast<std::size_t>(x[r][f] <= t.threshold[n] ? t.left[n] : t.right[n])].push_back(r);
    }
  }
}

TEST(Tree, UnlimitedDepthFitsConsistentTrainingData) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto m = random_matrix(200, 3, seed + 100);
    // drop rows whose x repeats with a different label
    std::map<std::vector<double>, int> seen;
    std::vector<std::size_t> keep;
    auto x = rows_of(m);
    for (std::size_t i = 0; i < m.rows; ++i)
      if (seen.emplace(x[i], m.labels[i]).first->second == m.labels[i]) keep.push_back(i);
    auto consistent = m.subset(keep);
    auto model = train(algorithm::decision_tree, consistent, default_params(algorithm::decision_tree));
    EXPECT_EQ(evaluate(model, consistent).f1, 1.0);
  }
}

TEST(Tree, MinSamplesLeafIsRespected) {
  auto m = random_matrix(300, 3, 9);
  std::vector<double> y(m.labels.begin(), m.labels.end()), w(m.rows, 1.0);
  tree_options opt;
  opt.min_samples_leaf = 7;
  auto gen = make_rng(3);
  auto t = tree_builder(m, y, w, opt).build(gen);
  for (std::size_t n = 0; n < t.size(); ++n)
    if (t.is_leaf(n)) EXPECT_GE(t.count[n], 7);
}

TEST(Forest, ProbabilityIsMeanOfTrees) {
  auto m = random_matrix(150, 4, 21);
  auto p = default_params(algorithm::random_forest);
  p.n_estimators = 15;
  auto model = train(algorithm::random_forest, m, p);
  std::vector<tree> trees;
  const auto doc = model.to_json();
  for (const auto& t : doc.at("trees")) trees.push_back(tree::from_json(t));
  ASSERT_EQ(trees.size(), 15u);
  auto probe = random_matrix(30, 4, 22);
  auto probs = model.positive_probabilities(probe);
  for (std::size_t i = 0; i < probe.rows; ++i) {
    double sum = 0;
    for (const auto& t : trees) {
      // walk the tree by hand
      std::size_t n = 0;
      while (t.feature[n] >= 0)
        n = static_cast<std::size_t>(probe(i, static_cast<std::size_t>(t.feature[n])) <= t.threshold[n] ? t.left[n] : t.right[n]);
      sum += t.value[n];
    }
    EXPECT_DOUBLE_EQ(probs[i], sum / 15.0);
  }
}

TEST(Forest, ResultDoesNotDependOnThreadCount) {
  auto m = random_matrix(200, 5, 31);
  for (auto a : {algorithm::random_forest, algorithm::extra_trees}) {
    auto p = default_params(a);
    p.n_estimators = 12;
    auto one = train(a, m, p, 1).to_json().dump();
    auto four = train(a, m, p, 4).to_json().dump();
    EXPECT_EQ(one, four);
  }
}

TEST(Models, EveryImplementedAlgorithmLearnsASimpleRule) {
  auto m = random_matrix(300, 3, 41);
  auto test = random_matrix(200, 3, 42);
  for (auto a : implemented_algorithms) {
    auto p = default_params(a);
    p.n_estimators = std::min<std::size_t>(p.n_estimators, 30);
    auto model = train(a, m, p);
    EXPECT_GT(evaluate(model, test).f1, 0.6) << to_string(a);
    auto back = trained_model::from_json(model.to_json());
    EXPECT_EQ(back.to_json().dump(), model.to_json().dump()) << to_string(a);
    EXPECT_EQ(predict_labels(back, test), predict_labels(model, test)) << to_string(a);
  }
}

TEST(Models, UnimplementedAlgorithmsRaiseNotSupported) {
  auto m = random_matrix(50, 2, 1);
  for (auto a : {algorithm::svc, algorithm::mlp, algorithm::lda})
    EXPECT_THROW(train(a, m, default_params(a)), not_supported) << to_string(a);
  EXPECT_THROW(algorithm_from_string("naive_bayes"), config_error);
}

TEST(Models, SingleClassTrainingIsDegenerate) {
  auto m = encoded_matrix::from_rows({{0}, {1}, {2}}, {0, 0, 0}, {"x"});
  EXPECT_THROW(train(algorithm::random_forest, m, default_params(algorithm::random_forest)), degenerate_data);
}

TEST(Models, SchemaCheckOnPredict) {
  auto m = random_matrix(60, 2, 2);
  auto model = train(algorithm::decision_tree, m, default_params(algorithm::decision_tree));
  auto other = random_matrix(10, 3, 3);
  EXPECT_THROW(predict_labels(model, other), schema_mismatch);
}

TEST(Params, MaxFeaturesSemantics) {
  EXPECT_EQ(max_features_spec::parse("1").resolve(30), 1u);
  EXPECT_EQ(max_features_spec::parse("10").resolve(30), 10u);
  EXPECT_EQ(max_features_spec::parse("0.3").resolve(30), 9u);
  EXPECT_EQ(max_features_spec::parse("1.0").resolve(30), 30u);
  EXPECT_EQ(max_features_spec::parse("sqrt").resolve(30), 5u);
  EXPECT_EQ(max_features_spec::parse("10").resolve(4), 4u);
  EXPECT_THROW(max_features_spec::parse("1.5"), invalid_params);
  EXPECT_THROW(max_features_spec::parse("-2"), invalid_params);
  hyper_params p;
  EXPECT_THROW(p.set("min_samples_split", "1"); p.validate(), invalid_params);
  EXPECT_THROW(p.set("depth", "3"), invalid_params);
}

TEST(Voting, SoftVoteExamples) {
  // members (0.6,0.4) and (0.3,0.7): sums (0.9,1.1) -> positive, though the first member alone says negative
  std::vector<probability_pair> sums{{0.6 + 0.3, 0.4 + 0.7}};
  EXPECT_EQ(argmax_labels(sums), std::vector<int>{1});
  EXPECT_EQ(argmax_labels({{0.5, 0.5}}), std::vector<int>{0});  // ties go negative
}

TEST(Voting, DuplicatedMembersVoteLikeOne) {
  auto m = random_matrix(120, 3, 51);
  auto p = default_params(algorithm::random_forest);
  p.n_estimators = 10;
  auto member = train(algorithm::random_forest, m, p);
  auto probe = random_matrix(80, 3, 52);
  voting_model vote({member, member, member});
  EXPECT_EQ(soft_vote(vote, probe), predict_labels(member, probe));
  auto back = voting_model::from_json(vote.to_json());
  EXPECT_EQ(back.to_json().dump(), vote.to_json().dump());
}

TEST(Voting, MembersMustShareSchema) {
  auto a = train(algorithm::decision_tree, random_matrix(50, 2, 1), default_params(algorithm::decision_tree));
  auto b = train(algorithm::decision_tree, random_matrix(50, 3, 1), default_params(algorithm::decision_tree));
  EXPECT_THROW(voting_model({a, b}), schema_mismatch);
}

TEST(Validation, KFoldBalancedExample) {
  std::vector<int> y(100);
  for (std::size_t i = 0; i < 100; ++i) y[i] = i % 2;
  auto folds = stratified_kfold(y, 10, 2);
  for (const auto& f : folds) {
    std::size_t pos = 0;
    for (auto i : f.validate) pos += y[i];
    EXPECT_EQ(f.validate.size(), 10u);
    EXPECT_EQ(pos, 5u);
    EXPECT_EQ(f.train.size(), 90u);
  }
  y.push_back(1);
  folds = stratified_kfold(y, 10, 2);
  std::vector<std::size_t> sizes;
  for (const auto& f : folds) sizes.push_back(f.validate.size());
  EXPECT_EQ(std::count(sizes.begin(), sizes.end(), 11u), 1);
  EXPECT_EQ(std::count(sizes.begin(), sizes.end(), 10u), 9);
}

TEST(Validation, KFoldPartitionsAndStratifies) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 30 + gen() % 300;
    std::vector<int> y(n);
    for (auto& v : y) v = (gen() % 100) < 25;
    std::size_t pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    if (pos < 5 || n - pos < 5) continue;
    auto folds = stratified_kfold(y, 5, static_cast<std::uint64_t>(trial));
    std::vector<int> seen(n, 0);
    for (const auto& f : folds) {
      std::size_t fp = 0;
      for (auto i : f.validate) {
        ++seen[i];
        fp += y[i];
      }
      const double expected = static_cast<double>(f.validate.size()) * static_cast<double>(pos) / static_cast<double>(n);
      EXPECT_LE(std::abs(static_cast<double>(fp) - expected), 1.0);
      EXPECT_EQ(f.train.size() + f.validate.size(), n);
    }
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  }
  std::vector<int> tiny{1, 1, 0, 0, 0, 0};
  EXPECT_THROW(stratified_kfold(tiny, 3, 1), too_few_instances);
}

TEST(Validation, TrainTestSplitIsStratified) {
  std::vector<int> y(1000, 0);
  for (std::size_t i = 0; i < 150; ++i) y[i * 3] = 1;
  auto s = train_test_split(y, 0.2, 2);
  std::size_t pos = 0;
  for (auto i : s.test) pos += y[i];
  EXPECT_EQ(s.test.size(), 200u);
  EXPECT_EQ(pos, 30u);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), 1000u);
  EXPECT_EQ(train_test_split(y, 0.2, 2).test, s.test);
}

TEST(Validation, CrossValidationSummary) {
  auto r = summarize_folds({0.8, 0.9, 1.0});
  EXPECT_NEAR(r.mean, 0.9, 1e-15);
  EXPECT_NEAR(r.std, std::sqrt(0.02 / 3), 1e-15);
  auto m = random_matrix(200, 3, 61);
  auto cv = cross_validate(algorithm::decision_tree, m, default_params(algorithm::decision_tree), 5);
  EXPECT_EQ(cv.fold_f1.size(), 5u);
  auto again = cross_validate(algorithm::decision_tree, m, default_params(algorithm::decision_tree), 5);
  EXPECT_EQ(cv.fold_f1, again.fold_f1);
}

TEST(Validation, GridEnumerationAndTies) {
  auto g = param_grid::parse("n_estimators=5,10;min_samples_leaf=1,2,3");
  EXPECT_EQ(g.size(), 6u);
  auto pts = g.points(default_params(algorithm::random_forest));
  EXPECT_EQ(pts[0].n_estimators, 5u);
  EXPECT_EQ(pts[1].min_samples_leaf, 2u);  // last axis varies fastest
  EXPECT_EQ(pts[3].n_estimators, 10u);
  EXPECT_EQ(g.to_string(), "n_estimators=5,10;min_samples_leaf=1,2,3");
  EXPECT_THROW(param_grid::parse("n_estimators"), config_error);

  // identical settings score identically; the first point must win
  auto m = random_matrix(120, 2, 71);
  auto same = param_grid::parse("seed=2,2;max_depth=3");
  auto r = grid_search(algorithm::decision_tree, m, same, default_params(algorithm::decision_tree), 4);
  ASSERT_EQ(r.entries.size(), 2u);
  EXPECT_EQ(r.entries[0].score.mean, r.entries[1].score.mean);
  EXPECT_EQ(r.best, r.entries[0].params);
}

TEST(Importance, InformativeFeatureRanksFirst) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::vector<double>> x(600, std::vector<double>(4));
  std::vector<int> y(600);
  for (std::size_t i = 0; i < 600; ++i) {
    for (auto& v : x[i]) v = u(gen);
    y[i] = x[i][2] > 0.6;
  }
  auto m = encoded_matrix::from_rows(x, y, {"n0", "n1", "signal", "n3"});
  auto p = default_params(algorithm::random_forest);
  p.n_estimators = 20;
  auto model = train(algorithm::random_forest, m, p);
  auto imp = permutation_importance(model, m, 5, 2);
  ASSERT_EQ(imp.size(), 4u);
  EXPECT_EQ(imp[2].feature, "signal");
  for (std::size_t g = 0; g < 4; ++g)
    if (g != 2) EXPECT_GT(imp[2].median, imp[g].median);
  EXPECT_EQ(imp[2].drops.size(), 5u);
  auto again = permutation_importance(model, m, 5, 2);
  EXPECT_EQ(again[2].drops, imp[2].drops);
}

TEST(Baseline, PredictsFromRequestHost) {
  auto list = parse_list("||smetrics.shop.com^", "l");
  std::vector<std::string> urls{"https://smetrics.shop.com/b", "https://m.other.com/", "https://www.shop.com/"};
  std::vector<int> labels{1, 1, 0};
  auto m = baseline_filterlist(urls, labels, list);
  EXPECT_EQ(m.tp, 1u);
  EXPECT_EQ(m.fn, 1u);
  EXPECT_EQ(m.tn, 1u);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
}
