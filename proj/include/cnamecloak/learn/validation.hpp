// validation.hpp
//
// Stratified splitting, k-fold cross-validation and exhaustive grid
// search scored by F1 of the positive class.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cnamecloak/error.hpp"
#include "cnamecloak/learn/metrics.hpp"
#include "cnamecloak/learn/model.hpp"
#include "cnamecloak/learn/params.hpp"
#include "cnamecloak/learn/random.hpp"
#include "cnamecloak/matrix.hpp"

namespace cnamecloak::learn {

struct fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validate;
};

/// k stratified folds.  Each class is shuffled and dealt round-robin,
/// continuing the rotation from one class to the next, so per-fold class
/// counts are floor or ceil of n_class / k and fold sizes differ by at
/// most one.
inline std::vector<fold> stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw invalid_params("k must be >= 2");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i] == 1].push_back(i);
  for (int c = 0; c < 2; ++c)
    if (by_class[c].size() < k)
      throw too_few_instances("class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                              " members, fewer than k = " + std::to_string(k));
  std::vector<std::size_t> assignment(labels.size());
  std::size_t position = 0;
  for (int c = 0; c < 2; ++c) {
    auto gen = make_rng(seed, 1000 + static_cast<std::uint64_t>(c));
    shuffle(by_class[c], gen);
    for (auto idx : by_class[c]) assignment[idx] = position++ % k;
  }
  std::vector<fold> folds(k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) (f == assignment[i] ? folds[f].validate : folds[f].train).push_back(i);
  }
  return folds;
}

struct split_indices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified hold-out split; each class contributes round(n_c * test_fraction)
/// rows to the test side.  Both sides are returned in ascending order.
inline split_indices train_test_split(std::span<const int> labels, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0 && test_fraction < 1)) throw invalid_params("test fraction must be in (0, 1)");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i] == 1].push_back(i);
  split_indices s;
  for (int c = 0; c < 2; ++c) {
    auto gen = make_rng(seed, 2000 + static_cast<std::uint64_t>(c));
    shuffle(by_class[c], gen);
    const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(by_class[c].size()) * test_fraction + 0.5));
    s.test.insert(s.test.end(), by_class[c].begin(), by_class[c].begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.insert(s.train.end(), by_class[c].begin() + static_cast<std::ptrdiff_t>(n_test), by_class[c].end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

struct cv_result {
  std::vector<double> fold_f1;
  double mean = 0;
  double std = 0;  // population standard deviation over folds

  nlohmann::json to_json() const { return {{"fold_f1", fold_f1}, {"mean", mean}, {"std", std}}; }
};

inline cv_result summarize_folds(std::vector<double> scores) {
  cv_result r;
  r.fold_f1 = std::move(scores);
  for (double s : r.fold_f1) r.mean += s;
  r.mean /= static_cast<double>(r.fold_f1.size());
  for (double s : r.fold_f1) r.std += (s - r.mean) * (s - r.mean);
  r.std = std::sqrt(r.std / static_cast<double>(r.fold_f1.size()));
  return r;
}

/// F1 per validation fold; folds are drawn with params.seed.
inline cv_result cross_validate(algorithm a, const encoded_matrix& m, const hyper_params& p, std::size_t k = 10,
                                std::size_t threads = 0) {
  auto folds = stratified_kfold(m.labels, k, p.seed);
  std::vector<double> scores;
  scores.reserve(k);
  for (const auto& f : folds) {
    auto train_m = m.subset(f.train);
    auto valid_m = m.subset(f.validate);
    auto model = train(a, train_m, p, threads);
    scores.push_back(evaluate(model, valid_m).f1);
  }
  return summarize_folds(std::move(scores));
}

/// Ordered parameter axes.  Points are enumerated with the last axis
/// varying fastest.
struct param_grid {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;

  std::size_t size() const {
    std::size_t n = 1;
    for (const auto& [name, values] : axes) n *= values.size();
    return axes.empty() ? 0 : n;
  }

  std::vector<hyper_params> points(const hyper_params& base) const {
    std::vector<hyper_params> out;
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
      hyper_params p = base;
      std::size_t rest = i;
      for (std::size_t a = axes.size(); a-- > 0;) {
        const auto& values = axes[a].second;
        p.set(axes[a].first, values[rest % values.size()]);
        rest /= values.size();
      }
      out.push_back(p);
    }
    return out;
  }

  /// "name=v1,v2;name2=v3" (the config-file form)
  static param_grid parse(std::string_view text) {
    param_grid g;
    std::size_t start = 0;
    while (start < text.size()) {
      auto semi = text.find(';', start);
      if (semi == std::string_view::npos) semi = text.size();
      auto axis = text.substr(start, semi - start);
      start = semi + 1;
      if (axis.find_first_not_of(" \t") == std::string_view::npos) continue;
      auto eq = axis.find('=');
      if (eq == std::string_view::npos) throw config_error("grid axis without '=': " + std::string(axis));
      auto trim = [](std::string_view s) {
        while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
        while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
        return std::string(s);
      };
      std::pair<std::string, std::vector<std::string>> entry{trim(axis.substr(0, eq)), {}};
      auto values = axis.substr(eq + 1);
      std::size_t vs = 0;
      while (vs <= values.size()) {
        auto comma = values.find(',', vs);
        if (comma == std::string_view::npos) comma = values.size();
        auto v = trim(values.substr(vs, comma - vs));
        if (!v.empty()) entry.second.push_back(v);
        vs = comma + 1;
      }
      if (entry.second.empty()) throw config_error("grid axis '" + entry.first + "' has no values");
      g.axes.push_back(std::move(entry));
    }
    return g;
  }

  std::string to_string() const {
    std::string s;
    for (const auto& [name, values] : axes) {
      if (!s.empty()) s += ';';
      s += name + '=';
      for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + values[i];
    }
    return s;
  }
};

struct grid_entry {
  hyper_params params;
  cv_result score;
};

struct grid_result {
  hyper_params best;
  double best_mean = -1;
  std::vector<grid_entry> entries;
};

/// Exhaustive search; ties keep the earlier grid point.
inline grid_result grid_search(algorithm a, const encoded_matrix& m, const param_grid& grid, const hyper_params& base,
                               std::size_t k = 10, std::size_t threads = 0) {
  auto points = grid.points(base);
  if (points.empty()) throw invalid_params("empty parameter grid");
  grid_result r;
  for (const auto& p : points) {
    auto score = cross_validate(a, m, p, k, threads);
    if (score.mean > r.best_mean) {
      r.best_mean = score.mean;
      r.best = p;
    }
    r.entries.push_back({p, std::move(score)});
  }
  return r;
}

}  // namespace cnamecloak::learn
