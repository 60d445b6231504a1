// metrics.hpp

#pragma once

#include <cstddef>
#include <span>

#include "json.hpp"

#include "cnamecloak/error.hpp"

namespace cnamecloak::learn {

/// Scores of the positive (tracking) class.  Undefined ratios are 0.
struct metrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0;

  static metrics from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
    metrics m{tp, fp, tn, fn, 0, 0, 0};
    if (tp + fp) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (2 * tp + fp + fn) m.f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    return m;
  }

  nlohmann::json to_json() const {
    return {{"precision", precision}, {"recall", recall}, {"f1", f1},
            {"tp", tp},               {"fp", fp},         {"tn", tn},
            {"fn", fn}};
  }
};

/// Harmonic mean of precision and recall, 0 when both are 0.
inline double f1_from(double precision, double recall) {
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

inline metrics score_predictions(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw schema_mismatch("prediction and label counts differ");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == 1)
      (truth[i] == 1 ? tp : fp)++;
    else
      (truth[i] == 1 ? fn : tn)++;
  }
  return metrics::from_counts(tp, fp, tn, fn);
}

}  // namespace cnamecloak::learn
