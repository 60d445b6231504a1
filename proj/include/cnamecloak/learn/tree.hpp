// tree.hpp
//
// Binary decision trees stored as flat node arrays, and a depth-first
// builder shared by every tree-based learner.
//
// The builder minimizes weighted impurity.  For a binary 0/1 target the
// Gini impurity of a node is 2p(1-p), so
//
//     w * gini = 2 (s - s^2 / w)          (s = weighted positives)
//
// and for a real target the weighted squared error is sum(w y^2) - s^2/w.
// Both are minimized over a split by maximizing
//
//     proxy = sL^2 / wL + sR^2 / wR
//
// so one split search serves classification (Gini) and regression (MSE).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "json.hpp"

#include "cnamecloak/error.hpp"
#include "cnamecloak/learn/random.hpp"
#include "cnamecloak/matrix.hpp"

namespace cnamecloak::learn {

/// Flat binary tree.  Node 0 is the root; leaves have feature == -1.
struct tree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;     // P(positive) or regression output
  std::vector<double> impurity;  // Gini or MSE of the node
  std::vector<double> weight;    // weighted samples reaching the node
  std::vector<std::int64_t> count;  // distinct samples reaching the node

  std::size_t size() const { return feature.size(); }
  bool is_leaf(std::size_t n) const { return feature[n] < 0; }

  std::size_t leaf_of(std::span<const double> x) const {
    std::size_t n = 0;
    while (feature[n] >= 0) n = static_cast<std::size_t>(x[static_cast<std::size_t>(feature[n])] <= threshold[n] ? left[n] : right[n]);
    return n;
  }

  double predict(std::span<const double> x) const { return value[leaf_of(x)]; }

  std::size_t depth() const {
    std::vector<std::size_t> d(size(), 0);
    std::size_t best = 0;
    for (std::size_t n = 0; n < size(); ++n) {
      best = std::max(best, d[n]);
      if (!is_leaf(n)) {
        d[static_cast<std::size_t>(left[n])] = d[n] + 1;
        d[static_cast<std::size_t>(right[n])] = d[n] + 1;
      }
    }
    return best;
  }

  nlohmann::json to_json() const {
    return {{"feature", feature}, {"threshold", threshold}, {"left", left},     {"right", right},
            {"value", value},     {"impurity", impurity},   {"weight", weight}, {"count", count}};
  }

  static tree from_json(const nlohmann::json& j) {
    tree t;
    j.at("feature").get_to(t.feature);
    j.at("threshold").get_to(t.threshold);
    j.at("left").get_to(t.left);
    j.at("right").get_to(t.right);
    j.at("value").get_to(t.value);
    j.at("impurity").get_to(t.impurity);
    j.at("weight").get_to(t.weight);
    j.at("count").get_to(t.count);
    const auto n = t.feature.size();
    if (t.threshold.size() != n || t.left.size() != n || t.right.size() != n || t.value.size() != n || n == 0)
      throw schema_error("inconsistent tree arrays");
    return t;
  }
};

enum class split_strategy { best, random };
enum class split_criterion { gini, mse };

struct tree_options {
  split_criterion criterion = split_criterion::gini;
  split_strategy splitter = split_strategy::best;
  int max_depth = -1;  // < 0: unlimited
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // 0: all features
};

/// Values closer than this are treated as equal when placing thresholds.
inline constexpr double feature_tolerance = 1e-7;

/// Builds one tree over rows of x.  target holds 0/1 labels (gini) or
/// real responses (mse); weights may be bootstrap counts or boosting
/// weights.  Rows with zero weight do not take part.
class tree_builder {
public:
  tree_builder(const encoded_matrix& x, std::span<const double> target, std::span<const double> weights,
               tree_options options)
      : x_{x}, y_{target}, w_{weights}, opt_{options} {
    if (opt_.min_samples_split < 2) throw invalid_params("min_samples_split must be >= 2");
    if (opt_.min_samples_leaf < 1) throw invalid_params("min_samples_leaf must be >= 1");
    if (opt_.max_features == 0 || opt_.max_features > x_.cols) opt_.max_features = x_.cols;
  }

  tree build(rng& gen) {
    std::vector<std::size_t> samples;
    samples.reserve(x_.rows);
    for (std::size_t i = 0; i < x_.rows; ++i)
      if (w_[i] > 0) samples.push_back(i);
    if (samples.empty()) throw degenerate_data("no samples with positive weight");

    tree t;
    struct pending {
      std::size_t begin, end;
      int depth;
      int parent;
      bool is_left;
    };
    std::vector<pending> stack{{0, samples.size(), 0, -1, false}};
    std::vector<std::size_t> features(x_.cols);
    while (!stack.empty()) {
      auto node = stack.back();
      stack.pop_back();
      const auto id = static_cast<int>(t.size());
      if (node.parent >= 0) (node.is_left ? t.left : t.right)[static_cast<std::size_t>(node.parent)] = id;

      double w = 0, s = 0, s2 = 0;
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const auto r = samples[i];
        w += w_[r];
        s += w_[r] * y_[r];
        s2 += w_[r] * y_[r] * y_[r];
      }
      const double mean = s / w;
      const double imp = opt_.criterion == split_criterion::gini ? 2.0 * mean * (1.0 - mean) : std::max(0.0, s2 / w - mean * mean);
      t.feature.push_back(-1);
      t.threshold.push_back(0.0);
      t.left.push_back(-1);
      t.right.push_back(-1);
      t.value.push_back(mean);
      t.impurity.push_back(imp);
      t.weight.push_back(w);
      t.count.push_back(static_cast<std::int64_t>(node.end - node.begin));

      const std::size_t n = node.end - node.begin;
      const bool leaf = (opt_.max_depth >= 0 && node.depth >= opt_.max_depth) || n < opt_.min_samples_split ||
                        n < 2 * opt_.min_samples_leaf || imp <= 1e-12;
      if (leaf) continue;

      auto split = find_split(samples, node.begin, node.end, w, s, features, gen);
      if (!split.found) continue;

      auto mid = std::partition(samples.begin() + static_cast<std::ptrdiff_t>(node.begin),
                                samples.begin() + static_cast<std::ptrdiff_t>(node.end),
                                [&](std::size_t r) { return x_(r, split.feature) <= split.threshold; });
      const auto pos = static_cast<std::size_t>(mid - samples.begin());
      t.feature.back() = static_cast<int>(split.feature);
      t.threshold.back() = split.threshold;
      // right pushed first so the left subtree is numbered first
      stack.push_back({pos, node.end, node.depth + 1, id, false});
      stack.push_back({node.begin, pos, node.depth + 1, id, true});
    }
    return t;
  }

private:
  struct split_result {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0;
    double proxy = -std::numeric_limits<double>::infinity();
  };

  split_result find_split(const std::vector<std::size_t>& samples, std::size_t begin, std::size_t end, double w_total,
                          double s_total, std::vector<std::size_t>& features, rng& gen) {
    split_result best;
    const std::size_t d = x_.cols;
    for (std::size_t f = 0; f < d; ++f) features[f] = f;
    std::size_t visited = 0;
    for (std::size_t i = 0; i < d && visited < opt_.max_features; ++i) {
      std::swap(features[i], features[i + uniform_index(gen, d - i)]);
      const std::size_t f = features[i];
      bool constant = opt_.splitter == split_strategy::best
                          ? best_split_on(samples, begin, end, f, w_total, s_total, best)
                          : random_split_on(samples, begin, end, f, w_total, s_total, best, gen);
      if (!constant) ++visited;
    }
    return best;
  }

  /// Exhaustive scan over sorted values of feature f.  Returns true when
  /// f is constant in the node.
  bool best_split_on(const std::vector<std::size_t>& samples, std::size_t begin, std::size_t end, std::size_t f,
                     double w_total, double s_total, split_result& best) {
    buf_.clear();
    for (std::size_t i = begin; i < end; ++i) buf_.push_back({x_(samples[i], f), samples[i]});
    std::sort(buf_.begin(), buf_.end(),
              [](const entry& a, const entry& b) { return a.v < b.v || (a.v == b.v && a.row < b.row); });
    if (buf_.back().v <= buf_.front().v + feature_tolerance) return true;
    const std::size_t n = buf_.size();
    double wl = 0, sl = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto r = buf_[i].row;
      wl += w_[r];
      sl += w_[r] * y_[r];
      if (buf_[i + 1].v <= buf_[i].v + feature_tolerance) continue;
      const std::size_t nl = i + 1;
      if (nl < opt_.min_samples_leaf || n - nl < opt_.min_samples_leaf) continue;
      const double wr = w_total - wl, sr = s_total - sl;
      if (wl <= 0 || wr <= 0) continue;
      const double proxy = sl * sl / wl + sr * sr / wr;
      if (proxy > best.proxy) {
        best.found = true;
        best.feature = f;
        best.proxy = proxy;
        double thr = 0.5 * (buf_[i].v + buf_[i + 1].v);
        if (thr >= buf_[i + 1].v || !std::isfinite(thr)) thr = buf_[i].v;
        best.threshold = thr;
      }
    }
    return false;
  }

  /// One uniformly drawn threshold between the node's min and max of f.
  bool random_split_on(const std::vector<std::size_t>& samples, std::size_t begin, std::size_t end, std::size_t f,
                       double w_total, double s_total, split_result& best, rng& gen) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = x_(samples[i], f);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi <= lo + feature_tolerance) return true;
    double thr = lo + uniform_unit(gen) * (hi - lo);
    if (thr >= hi) thr = lo;
    double wl = 0, sl = 0;
    std::size_t nl = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = samples[i];
      if (x_(r, f) <= thr) {
        ++nl;
        wl += w_[r];
        sl += w_[r] * y_[r];
      }
    }
    const std::size_t n = end - begin;
    if (nl < opt_.min_samples_leaf || n - nl < opt_.min_samples_leaf) return false;
    const double wr = w_total - wl, sr = s_total - sl;
    if (wl <= 0 || wr <= 0) return false;
    const double proxy = sl * sl / wl + sr * sr / wr;
    if (proxy > best.proxy) {
      best.found = true;
      best.feature = f;
      best.proxy = proxy;
      best.threshold = thr;
    }
    return false;
  }

  struct entry {
    double v;
    std::size_t row;
  };

  const encoded_matrix& x_;
  std::span<const double> y_;
  std::span<const double> w_;
  tree_options opt_;
  std::vector<entry> buf_;
};

}  // namespace cnamecloak::learn
