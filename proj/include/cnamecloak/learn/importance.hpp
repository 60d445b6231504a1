// importance.hpp
//
// Permutation importance: the F1 lost when one feature (all columns of
// its group) is shuffled across rows.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"

#include "cnamecloak/learn/model.hpp"
#include "cnamecloak/learn/random.hpp"
#include "cnamecloak/matrix.hpp"

namespace cnamecloak::learn {

struct feature_importance {
  std::string feature;
  std::vector<double> drops;  // baseline F1 minus shuffled F1, one per repeat
  double mean = 0;
  double median = 0;
  double std = 0;

  nlohmann::json to_json() const {
    return {{"feature", feature}, {"drops", drops}, {"mean", mean}, {"median", median}, {"std", std}};
  }
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// One entry per column group, in group order.  The shuffle for
/// (group g, repeat r) uses its own stream of seed, so results do not
/// depend on evaluation order.
template <typename Model>
std::vector<feature_importance> permutation_importance(const Model& model, const encoded_matrix& m,
                                                       std::size_t n_repeats = 10, std::uint64_t seed = 2) {
  const double baseline = evaluate(model, m).f1;
  const std::size_t groups = m.group_names.size();
  std::vector<feature_importance> out(groups);
  encoded_matrix shuffled = m;
  std::vector<std::size_t> perm(m.rows);
  for (std::size_t g = 0; g < groups; ++g) {
    out[g].feature = m.group_names[g];
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < m.cols; ++c)
      if (m.column_group[c] == g) cols.push_back(c);
    for (std::size_t r = 0; r < n_repeats; ++r) {
      std::iota(perm.begin(), perm.end(), 0);
      auto gen = make_rng(derive_seed(seed, g), r);
      shuffle(perm, gen);
      for (std::size_t i = 0; i < m.rows; ++i)
        for (auto c : cols) shuffled(i, c) = m(perm[i], c);
      out[g].drops.push_back(baseline - evaluate(model, shuffled).f1);
    }
    for (std::size_t i = 0; i < m.rows; ++i)
      for (auto c : cols) shuffled(i, c) = m(i, c);
    auto& fi = out[g];
    fi.mean = std::accumulate(fi.drops.begin(), fi.drops.end(), 0.0) / static_cast<double>(std::max<std::size_t>(n_repeats, 1));
    for (double d : fi.drops) fi.std += (d - fi.mean) * (d - fi.mean);
    fi.std = n_repeats ? std::sqrt(fi.std / static_cast<double>(n_repeats)) : 0.0;
    fi.median = median_of(fi.drops);
  }
  return out;
}

}  // namespace cnamecloak::learn
