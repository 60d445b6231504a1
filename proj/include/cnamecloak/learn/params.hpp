// params.hpp
//
// Algorithm tags and hyper-parameters.  Defaults follow the common
// scikit-learn conventions so that "default parameter" runs are
// reproducible: 100 trees, Gini, unlimited depth, sqrt(d) candidate
// features for forests, depth-3 boosting stages at rate 0.1.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cnamecloak/error.hpp"

namespace cnamecloak::learn {

enum class algorithm {
  decision_tree,
  random_forest,
  extra_trees,
  gradient_boosting,
  adaboost,
  knn,
  logistic_regression,
  // named for completeness of the comparison set; training raises not_supported
  svc,
  mlp,
  lda,
};

inline constexpr algorithm implemented_algorithms[] = {
    algorithm::decision_tree, algorithm::random_forest, algorithm::extra_trees,  algorithm::gradient_boosting,
    algorithm::adaboost,      algorithm::knn,           algorithm::logistic_regression};

inline const char* to_string(algorithm a) {
  switch (a) {
    case algorithm::decision_tree: return "decision_tree";
    case algorithm::random_forest: return "random_forest";
    case algorithm::extra_trees: return "extra_trees";
    case algorithm::gradient_boosting: return "gradient_boosting";
    case algorithm::adaboost: return "adaboost";
    case algorithm::knn: return "knn";
    case algorithm::logistic_regression: return "logistic_regression";
    case algorithm::svc: return "svc";
    case algorithm::mlp: return "mlp";
    case algorithm::lda: return "lda";
  }
  return "unknown";
}

inline algorithm algorithm_from_string(std::string_view s) {
  for (auto a : {algorithm::decision_tree, algorithm::random_forest, algorithm::extra_trees,
                 algorithm::gradient_boosting, algorithm::adaboost, algorithm::knn, algorithm::logistic_regression,
                 algorithm::svc, algorithm::mlp, algorithm::lda})
    if (s == to_string(a)) return a;
  // short aliases used in config files
  if (s == "rf") return algorithm::random_forest;
  if (s == "et") return algorithm::extra_trees;
  if (s == "gb") return algorithm::gradient_boosting;
  if (s == "dt") return algorithm::decision_tree;
  if (s == "lr") return algorithm::logistic_regression;
  throw config_error("unknown algorithm '" + std::string(s) + "'");
}

/// Number of candidate features per split: everything, sqrt/log2 of the
/// width, an absolute count (integer), or a fraction in (0, 1].
struct max_features_spec {
  enum class mode { all, sqrt, log2, count, fraction };
  mode kind = mode::all;
  double value = 0;

  static max_features_spec all() { return {}; }
  static max_features_spec sqrt() { return {mode::sqrt, 0}; }
  static max_features_spec log2() { return {mode::log2, 0}; }
  static max_features_spec count(std::size_t n) { return {mode::count, static_cast<double>(n)}; }
  static max_features_spec fraction(double f) { return {mode::fraction, f}; }

  /// Integers are counts, reals in (0,1) fractions; "1" is a count.
  static max_features_spec parse(std::string_view text) {
    std::string s(text);
    if (s == "all" || s == "none" || s == "None") return all();
    if (s == "sqrt" || s == "auto") return sqrt();
    if (s == "log2") return log2();
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0' || !(v > 0)) throw invalid_params("bad max_features '" + s + "'");
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos) return count(static_cast<std::size_t>(v));
    if (v > 1) throw invalid_params("fractional max_features must be in (0, 1]");
    return fraction(v);
  }

  std::size_t resolve(std::size_t width) const {
    if (width == 0) return 0;
    std::size_t n = width;
    switch (kind) {
      case mode::all: n = width; break;
      case mode::sqrt: n = static_cast<std::size_t>(std::sqrt(static_cast<double>(width))); break;
      case mode::log2: n = static_cast<std::size_t>(std::log2(static_cast<double>(width))); break;
      case mode::count: n = static_cast<std::size_t>(value); break;
      case mode::fraction: n = static_cast<std::size_t>(value * static_cast<double>(width)); break;
    }
    // counts wider than the matrix use every column
    return std::clamp<std::size_t>(n, 1, width);
  }

  std::string to_string() const {
    switch (kind) {
      case mode::all: return "all";
      case mode::sqrt: return "sqrt";
      case mode::log2: return "log2";
      case mode::count: return std::to_string(static_cast<std::size_t>(value));
      case mode::fraction: {
        auto s = std::to_string(value);
        while (s.size() > 3 && s.back() == '0') s.pop_back();
        return s;
      }
    }
    return "all";
  }

  bool operator==(const max_features_spec&) const = default;
};

struct hyper_params {
  max_features_spec max_features;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  std::size_t n_estimators = 100;
  double learning_rate = 0.1;
  int max_depth = -1;  // < 0: unlimited
  std::uint64_t seed = 2;
  std::size_t n_neighbors = 5;
  double c = 1.0;  // inverse L2 strength (logistic regression)

  void validate() const {
    if (min_samples_split < 2) throw invalid_params("min_samples_split must be >= 2");
    if (min_samples_leaf < 1) throw invalid_params("min_samples_leaf must be >= 1");
    if (n_estimators < 1) throw invalid_params("n_estimators must be >= 1");
    if (!(learning_rate > 0)) throw invalid_params("learning_rate must be > 0");
    if (n_neighbors < 1) throw invalid_params("n_neighbors must be >= 1");
    if (!(c > 0)) throw invalid_params("C must be > 0");
    if (max_features.kind == max_features_spec::mode::fraction && !(max_features.value > 0 && max_features.value <= 1))
      throw invalid_params("fractional max_features must be in (0, 1]");
  }

  /// Sets one parameter from its textual grid/config form.
  void set(std::string_view name, std::string_view value) {
    const std::string v(value);
    auto as_size = [&](const char* what) {
      try {
        std::size_t pos = 0;
        long long n = std::stoll(v, &pos);
        if (pos != v.size() || n < 0) throw std::invalid_argument(v);
        return static_cast<std::size_t>(n);
      } catch (const std::exception&) {
        throw invalid_params(std::string("bad ") + what + " '" + v + "'");
      }
    };
    auto as_double = [&](const char* what) {
      char* end = nullptr;
      double d = std::strtod(v.c_str(), &end);
      if (v.empty() || *end != '\0') throw invalid_params(std::string("bad ") + what + " '" + v + "'");
      return d;
    };
    if (name == "max_features") max_features = max_features_spec::parse(v);
    else if (name == "min_samples_split") min_samples_split = as_size("min_samples_split");
    else if (name == "min_samples_leaf") min_samples_leaf = as_size("min_samples_leaf");
    else if (name == "n_estimators") n_estimators = as_size("n_estimators");
    else if (name == "learning_rate") learning_rate = as_double("learning_rate");
    else if (name == "max_depth") max_depth = (v == "none" || v == "None" || v == "unlimited") ? -1 : static_cast<int>(as_size("max_depth"));
    else if (name == "seed" || name == "random_state") seed = as_size("seed");
    else if (name == "n_neighbors") n_neighbors = as_size("n_neighbors");
    else if (name == "C" || name == "c") c = as_double("C");
    else throw invalid_params("unknown parameter '" + std::string(name) + "'");
  }

  nlohmann::json to_json() const {
    return {{"max_features", max_features.to_string()},
            {"min_samples_split", min_samples_split},
            {"min_samples_leaf", min_samples_leaf},
            {"n_estimators", n_estimators},
            {"learning_rate", learning_rate},
            {"max_depth", max_depth},
            {"seed", seed},
            {"n_neighbors", n_neighbors},
            {"C", c}};
  }

  static hyper_params from_json(const nlohmann::json& j) {
    hyper_params p;
    p.max_features = max_features_spec::parse(j.at("max_features").get<std::string>());
    p.min_samples_split = j.at("min_samples_split").get<std::size_t>();
    p.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
    p.n_estimators = j.at("n_estimators").get<std::size_t>();
    p.learning_rate = j.at("learning_rate").get<double>();
    p.max_depth = j.at("max_depth").get<int>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.n_neighbors = j.at("n_neighbors").get<std::size_t>();
    p.c = j.at("C").get<double>();
    return p;
  }

  bool operator==(const hyper_params&) const = default;
};

/// Untuned settings per algorithm.
inline hyper_params default_params(algorithm a, std::uint64_t seed = 2) {
  hyper_params p;
  p.seed = seed;
  switch (a) {
    case algorithm::random_forest:
    case algorithm::extra_trees:
      p.max_features = max_features_spec::sqrt();
      break;
    case algorithm::gradient_boosting:
      p.max_depth = 3;
      p.learning_rate = 0.1;
      break;
    case algorithm::adaboost:
      p.n_estimators = 50;
      p.learning_rate = 1.0;
      p.max_depth = 1;
      break;
    default:
      break;
  }
  return p;
}

}  // namespace cnamecloak::learn
