// model.hpp
//
// trained_model wraps every learner behind one predict/serialize
// surface; voting_model combines members by summed probabilities.

#pragma once

#include <array>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "cnamecloak/error.hpp"
#include "cnamecloak/learn/ensemble.hpp"
#include "cnamecloak/learn/linear.hpp"
#include "cnamecloak/learn/metrics.hpp"
#include "cnamecloak/learn/params.hpp"
#include "cnamecloak/matrix.hpp"

namespace cnamecloak::learn {

inline constexpr int model_format_version = 1;

/// (P(negative), P(positive)) per row.
using probability_pair = std::array<double, 2>;

class trained_model {
public:
  using body = std::variant<forest_model, boosting_model, adaboost_model, logistic_model, knn_model>;

  trained_model() = default;
  trained_model(algorithm kind, hyper_params params, std::string fingerprint, std::size_t width, body b)
      : kind_{kind}, params_{params}, fingerprint_{std::move(fingerprint)}, width_{width}, body_{std::move(b)} {}

  algorithm kind() const { return kind_; }
  const hyper_params& params() const { return params_; }
  const std::string& fingerprint() const { return fingerprint_; }
  std::size_t width() const { return width_; }
  const body& content() const { return body_; }

  double positive_probability(std::span<const double> x) const {
    return std::visit([&](const auto& m) { return m.predict(x); }, body_);
  }

  /// P(positive) for every row; throws schema_mismatch on a foreign
  /// column layout.
  std::vector<double> positive_probabilities(const encoded_matrix& m) const {
    check_schema(m);
    std::vector<double> out(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) out[r] = positive_probability(m.row(r));
    return out;
  }

  void check_schema(const encoded_matrix& m) const {
    if (m.cols != width_ || m.fingerprint() != fingerprint_)
      throw schema_mismatch("model expects fingerprint " + fingerprint_ + " over " + std::to_string(width_) +
                            " columns, got " + m.fingerprint() + " over " + std::to_string(m.cols));
  }

  nlohmann::json to_json() const;
  static trained_model from_json(const nlohmann::json& j);

private:
  algorithm kind_ = algorithm::decision_tree;
  hyper_params params_;
  std::string fingerprint_;
  std::size_t width_ = 0;
  body body_;
};

inline void require_trainable(const encoded_matrix& m) {
  if (m.rows == 0) throw degenerate_data("empty training matrix");
  const auto pos = m.positives();
  if (pos == 0 || pos == m.rows) throw degenerate_data("training labels contain a single class");
}

/// Fits one algorithm.  Deterministic in (matrix, params).
inline trained_model train(algorithm a, const encoded_matrix& m, const hyper_params& p, std::size_t threads = 0) {
  p.validate();
  switch (a) {
    case algorithm::svc:
    case algorithm::mlp:
    case algorithm::lda:
      throw not_supported(std::string(to_string(a)) + " is not implemented; the final models are tree ensembles");
    default:
      break;
  }
  require_trainable(m);
  trained_model::body body;
  switch (a) {
    case algorithm::decision_tree: body = fit_decision_tree(m, p); break;
    case algorithm::random_forest: body = fit_forest(m, p, false, threads); break;
    case algorithm::extra_trees: body = fit_forest(m, p, true, threads); break;
    case algorithm::gradient_boosting: body = fit_gradient_boosting(m, p); break;
    case algorithm::adaboost: body = fit_adaboost(m, p); break;
    case algorithm::logistic_regression: body = fit_logistic(m, p); break;
    case algorithm::knn: body = fit_knn(m, p); break;
    default: break;
  }
  return {a, p, m.fingerprint(), m.cols, std::move(body)};
}

inline std::vector<probability_pair> predict_proba(const trained_model& model, const encoded_matrix& m) {
  auto pos = model.positive_probabilities(m);
  std::vector<probability_pair> out(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) out[i] = {1.0 - pos[i], pos[i]};
  return out;
}

/// Soft voting: argmax of the summed member probabilities, ties to the
/// negative class.
class voting_model {
public:
  voting_model() = default;
  explicit voting_model(std::vector<trained_model> members) : members_{std::move(members)} {
    if (members_.empty()) throw invalid_params("voting needs at least one member");
    for (const auto& m : members_)
      if (m.fingerprint() != members_.front().fingerprint())
        throw schema_mismatch("voting members disagree on feature schema");
  }

  const std::vector<trained_model>& members() const { return members_; }
  const std::string& fingerprint() const { return members_.front().fingerprint(); }

  /// Summed (negative, positive) probabilities per row.
  std::vector<probability_pair> summed_probabilities(const encoded_matrix& m) const {
    std::vector<probability_pair> sums(m.rows, probability_pair{0.0, 0.0});
    for (const auto& member : members_) {
      auto p = predict_proba(member, m);
      for (std::size_t r = 0; r < m.rows; ++r) {
        sums[r][0] += p[r][0];
        sums[r][1] += p[r][1];
      }
    }
    return sums;
  }

  /// Mean member P(positive); used where a single score is needed.
  std::vector<double> positive_probabilities(const encoded_matrix& m) const {
    auto sums = summed_probabilities(m);
    std::vector<double> out(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) out[r] = sums[r][1] / static_cast<double>(members_.size());
    return out;
  }

  nlohmann::json to_json() const;
  static voting_model from_json(const nlohmann::json& j);

private:
  std::vector<trained_model> members_;
};

inline std::vector<int> argmax_labels(const std::vector<probability_pair>& sums) {
  std::vector<int> labels(sums.size());
  for (std::size_t r = 0; r < sums.size(); ++r) labels[r] = sums[r][1] > sums[r][0] ? 1 : 0;
  return labels;
}

inline std::vector<int> soft_vote(const voting_model& vote, const encoded_matrix& m) {
  return argmax_labels(vote.summed_probabilities(m));
}

inline std::vector<int> soft_vote(const std::vector<trained_model>& members, const encoded_matrix& m) {
  return soft_vote(voting_model(members), m);
}

/// Class labels from one model or a vote.
inline std::vector<int> predict_labels(const trained_model& model, const encoded_matrix& m) {
  return argmax_labels(predict_proba(model, m));
}
inline std::vector<int> predict_labels(const voting_model& vote, const encoded_matrix& m) { return soft_vote(vote, m); }

template <typename Model>
metrics evaluate(const Model& model, const encoded_matrix& m, std::span<const int> labels) {
  return score_predictions(predict_labels(model, m), labels);
}

template <typename Model>
metrics evaluate(const Model& model, const encoded_matrix& m) {
  return evaluate(model, m, m.labels);
}

// ---------------------------------------------------------------------------
// serialization

inline nlohmann::json trained_model::to_json() const {
  nlohmann::json j;
  j["format_version"] = model_format_version;
  j["algorithm"] = to_string(kind_);
  j["params"] = params_.to_json();
  j["schema_fingerprint"] = fingerprint_;
  j["width"] = width_;
  j["classes"] = {0, 1};
  auto trees_json = [](const std::vector<tree>& ts) {
    auto arr = nlohmann::json::array();
    for (const auto& t : ts) arr.push_back(t.to_json());
    return arr;
  };
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, forest_model>) {
          j["trees"] = trees_json(m.trees);
        } else if constexpr (std::is_same_v<T, boosting_model>) {
          j["init"] = m.init;
          j["learning_rate"] = m.learning_rate;
          j["trees"] = trees_json(m.stages);
        } else if constexpr (std::is_same_v<T, adaboost_model>) {
          j["alphas"] = m.alphas;
          j["trees"] = trees_json(m.stumps);
        } else if constexpr (std::is_same_v<T, logistic_model>) {
          j["mean"] = m.mean;
          j["scale"] = m.scale;
          j["coef"] = m.coef;
          j["intercept"] = m.intercept;
        } else {
          j["k"] = m.k;
          j["train_values"] = m.train.values;
          j["train_labels"] = m.train.labels;
          j["train_columns"] = m.train.column_names;
        }
      },
      body_);
  return j;
}

inline trained_model trained_model::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != model_format_version) throw schema_mismatch("unsupported model format version");
    auto kind = algorithm_from_string(j.at("algorithm").get<std::string>());
    auto params = hyper_params::from_json(j.at("params"));
    auto fp = j.at("schema_fingerprint").get<std::string>();
    auto width = j.at("width").get<std::size_t>();
    auto trees_from = [&] {
      std::vector<tree> ts;
      for (const auto& t : j.at("trees")) ts.push_back(tree::from_json(t));
      return ts;
    };
    body b;
    switch (kind) {
      case algorithm::decision_tree:
      case algorithm::random_forest:
      case algorithm::extra_trees: b = forest_model{trees_from()}; break;
      case algorithm::gradient_boosting:
        b = boosting_model{j.at("init").get<double>(), j.at("learning_rate").get<double>(), trees_from()};
        break;
      case algorithm::adaboost: b = adaboost_model{trees_from(), j.at("alphas").get<std::vector<double>>()}; break;
      case algorithm::logistic_regression:
        b = logistic_model{j.at("mean").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>(),
                           j.at("coef").get<std::vector<double>>(), j.at("intercept").get<double>()};
        break;
      case algorithm::knn: {
        knn_model k;
        k.k = j.at("k").get<std::size_t>();
        k.train.values = j.at("train_values").get<std::vector<double>>();
        k.train.labels = j.at("train_labels").get<std::vector<int>>();
        k.train.column_names = j.at("train_columns").get<std::vector<std::string>>();
        k.train.cols = width;
        k.train.rows = width ? k.train.values.size() / width : 0;
        b = std::move(k);
        break;
      }
      default: throw not_supported("cannot load algorithm " + std::string(to_string(kind)));
    }
    return {kind, params, fp, width, std::move(b)};
  } catch (const nlohmann::json::exception& e) {
    throw schema_mismatch(std::string("malformed model document: ") + e.what());
  } catch (const config_error& e) {
    throw schema_mismatch(e.what());
  }
}

inline nlohmann::json voting_model::to_json() const {
  nlohmann::json j;
  j["format_version"] = model_format_version;
  j["algorithm"] = "soft_voting";
  j["schema_fingerprint"] = fingerprint();
  j["members"] = nlohmann::json::array();
  for (const auto& m : members_) j["members"].push_back(m.to_json());
  return j;
}

inline voting_model voting_model::from_json(const nlohmann::json& j) {
  if (j.value("algorithm", "") != "soft_voting") throw schema_mismatch("not a voting model document");
  std::vector<trained_model> members;
  for (const auto& m : j.at("members")) members.push_back(trained_model::from_json(m));
  return voting_model(std::move(members));
}

}  // namespace cnamecloak::learn
