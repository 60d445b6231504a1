// ensemble.hpp
//
// Tree-based learners: single CART tree, random forest (bootstrap + best
// split), extra trees (no bootstrap + random thresholds), gradient
// boosting with binomial deviance, and SAMME AdaBoost over stumps.

#pragma once

#include <cmath>
#include <vector>

#include "cnamecloak/learn/parallel.hpp"
#include "cnamecloak/learn/params.hpp"
#include "cnamecloak/learn/random.hpp"
#include "cnamecloak/learn/tree.hpp"
#include "cnamecloak/matrix.hpp"

namespace cnamecloak::learn {

inline double expit(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline tree_options options_for(const hyper_params& p, std::size_t width, split_strategy splitter) {
  tree_options o;
  o.criterion = split_criterion::gini;
  o.splitter = splitter;
  o.max_depth = p.max_depth;
  o.min_samples_split = p.min_samples_split;
  o.min_samples_leaf = p.min_samples_leaf;
  o.max_features = p.max_features.resolve(width);
  return o;
}

inline std::vector<double> label_vector(const encoded_matrix& m) { return {m.labels.begin(), m.labels.end()}; }

/// Averages per-tree leaf probabilities.
struct forest_model {
  std::vector<tree> trees;

  double predict(std::span<const double> x) const {
    double sum = 0;
    for (const auto& t : trees) sum += t.predict(x);
    return sum / static_cast<double>(trees.size());
  }
};

inline forest_model fit_decision_tree(const encoded_matrix& m, const hyper_params& p) {
  auto y = label_vector(m);
  std::vector<double> w(m.rows, 1.0);
  auto gen = make_rng(p.seed);
  tree_builder builder(m, y, w, options_for(p, m.cols, split_strategy::best));
  return {{builder.build(gen)}};
}

/// Random forest (bootstrap, best splits) or extra trees (all rows,
/// random thresholds).  Tree i draws from stream i of the seed.
inline forest_model fit_forest(const encoded_matrix& m, const hyper_params& p, bool extra, std::size_t threads = 0) {
  auto y = label_vector(m);
  const auto opts = options_for(p, m.cols, extra ? split_strategy::random : split_strategy::best);
  forest_model f;
  f.trees.resize(p.n_estimators);
  parallel_for(p.n_estimators, threads, [&](std::size_t i) {
    auto gen = make_rng(p.seed, i + 1);
    std::vector<double> w(m.rows, extra ? 1.0 : 0.0);
    if (!extra)
      for (std::size_t k = 0; k < m.rows; ++k) w[uniform_index(gen, m.rows)] += 1.0;
    tree_builder builder(m, y, w, opts);
    f.trees[i] = builder.build(gen);
  });
  return f;
}

/// F(x) = init + rate * sum of stage outputs; P(positive) = expit(F).
struct boosting_model {
  double init = 0;
  double learning_rate = 0.1;
  std::vector<tree> stages;

  double raw(std::span<const double> x) const {
    double f = init;
    for (const auto& t : stages) f += learning_rate * t.predict(x);
    return f;
  }
  double predict(std::span<const double> x) const { return expit(raw(x)); }
};

/// Binomial deviance boosting.  Each stage fits a least-squares tree to
/// the residuals y - p, then replaces every leaf with one Newton step
/// sum(y - p) / sum(p (1 - p)) over the rows that reach it.
inline boosting_model fit_gradient_boosting(const encoded_matrix& m, const hyper_params& p) {
  const std::size_t n = m.rows;
  double pos = 0;
  for (int y : m.labels) pos += y;
  const double prior = pos / static_cast<double>(n);
  boosting_model b;
  b.learning_rate = p.learning_rate;
  b.init = std::log(prior / (1.0 - prior));
  std::vector<double> f(n, b.init), residual(n), weights(n, 1.0);
  auto opts = options_for(p, m.cols, split_strategy::best);
  opts.criterion = split_criterion::mse;
  std::vector<double> num, den;
  for (std::size_t stage = 0; stage < p.n_estimators; ++stage) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = m.labels[i] - expit(f[i]);
    auto gen = make_rng(p.seed, stage + 1);
    tree_builder builder(m, residual, weights, opts);
    tree t = builder.build(gen);
    num.assign(t.size(), 0.0);
    den.assign(t.size(), 0.0);
    std::vector<std::size_t> leaf(n);
    for (std::size_t i = 0; i < n; ++i) {
      leaf[i] = t.leaf_of(m.row(i));
      const double prob = m.labels[i] - residual[i];
      num[leaf[i]] += residual[i];
      den[leaf[i]] += prob * (1.0 - prob);
    }
    for (std::size_t k = 0; k < t.size(); ++k)
      if (t.is_leaf(k)) t.value[k] = std::abs(den[k]) < 1e-150 ? 0.0 : num[k] / den[k];
    for (std::size_t i = 0; i < n; ++i) f[i] += p.learning_rate * t.value[leaf[i]];
    b.stages.push_back(std::move(t));
  }
  return b;
}

/// Two-class SAMME.  Stage outputs are +-1 votes weighted by alpha; the
/// normalized score s in [-1, 1] maps to P(positive) = expit(2 s).
struct adaboost_model {
  std::vector<tree> stumps;
  std::vector<double> alphas;

  double predict(std::span<const double> x) const {
    double score = 0, total = 0;
    for (std::size_t k = 0; k < stumps.size(); ++k) {
      score += alphas[k] * (stumps[k].predict(x) > 0.5 ? 1.0 : -1.0);
      total += alphas[k];
    }
    return total > 0 ? expit(2.0 * score / total) : 0.5;
  }
};

inline adaboost_model fit_adaboost(const encoded_matrix& m, const hyper_params& p) {
  const std::size_t n = m.rows;
  auto y = label_vector(m);
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  hyper_params stump = p;
  stump.max_features = max_features_spec::all();
  if (stump.max_depth < 0) stump.max_depth = 1;
  const auto opts = options_for(stump, m.cols, split_strategy::best);
  adaboost_model a;
  for (std::size_t stage = 0; stage < p.n_estimators; ++stage) {
    auto gen = make_rng(p.seed, stage + 1);
    tree_builder builder(m, y, w, opts);
    tree t = builder.build(gen);
    double err = 0, total = 0;
    std::vector<char> miss(n);
    for (std::size_t i = 0; i < n; ++i) {
      miss[i] = (t.predict(m.row(i)) > 0.5 ? 1 : 0) != m.labels[i];
      err += miss[i] * w[i];
      total += w[i];
    }
    err /= total;
    if (err <= 0) {
      a.stumps.push_back(std::move(t));
      a.alphas.push_back(1.0);
      break;
    }
    if (err >= 0.5) {
      if (a.stumps.empty()) {
        a.stumps.push_back(std::move(t));
        a.alphas.push_back(1.0);
      }
      break;
    }
    const double alpha = p.learning_rate * std::log((1.0 - err) / err);
    a.stumps.push_back(std::move(t));
    a.alphas.push_back(alpha);
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (miss[i]) w[i] *= std::exp(alpha);
      sum += w[i];
    }
    for (auto& wi : w) wi /= sum;
  }
  return a;
}

}  // namespace cnamecloak::learn
