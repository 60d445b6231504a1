// matrix.hpp
//
// Dense numeric design matrix shared by the feature encoder and the
// learners.

#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cnamecloak/error.hpp"

namespace cnamecloak {

/// Row-major matrix with named columns and binary labels (1 = tracker).
/// Columns may be grouped: the one-hot expansion of one categorical
/// feature shares a group, and permutation importance shuffles whole
/// groups.
struct encoded_matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<std::string> column_names;
  std::vector<std::size_t> column_group;
  std::vector<std::string> group_names;
  std::vector<int> labels;

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }

  /// Builds an ungrouped matrix (every column its own group) from rows.
  static encoded_matrix from_rows(const std::vector<std::vector<double>>& data, std::vector<int> y,
                                  std::vector<std::string> names = {}) {
    encoded_matrix m;
    m.rows = data.size();
    m.cols = data.empty() ? names.size() : data.front().size();
    if (y.size() != m.rows) throw schema_mismatch("label count differs from row count");
    for (const auto& r : data) {
      if (r.size() != m.cols) throw schema_mismatch("ragged rows");
      m.values.insert(m.values.end(), r.begin(), r.end());
    }
    if (names.empty())
      for (std::size_t c = 0; c < m.cols; ++c) names.push_back("x" + std::to_string(c));
    if (names.size() != m.cols) throw schema_mismatch("column name count differs from width");
    m.column_names = std::move(names);
    m.group_names = m.column_names;
    m.column_group.resize(m.cols);
    std::iota(m.column_group.begin(), m.column_group.end(), 0);
    m.labels = std::move(y);
    return m;
  }

  /// Rows selected by index, in the given order.
  encoded_matrix subset(std::span<const std::size_t> idx) const {
    encoded_matrix m;
    m.rows = idx.size();
    m.cols = cols;
    m.column_names = column_names;
    m.column_group = column_group;
    m.group_names = group_names;
    m.values.reserve(idx.size() * cols);
    m.labels.reserve(idx.size());
    for (auto i : idx) {
      auto r = row(i);
      m.values.insert(m.values.end(), r.begin(), r.end());
      m.labels.push_back(labels[i]);
    }
    return m;
  }

  std::size_t positives() const {
    std::size_t n = 0;
    for (int y : labels) n += (y == 1);
    return n;
  }

  /// FNV-1a over the ordered column names.
  std::string fingerprint() const { return fingerprint_of(column_names); }

  static std::string fingerprint_of(const std::vector<std::string>& names) {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& n : names) {
      for (unsigned char c : n) {
        h ^= c;
        h *= 1099511628211ull;
      }
      h ^= '\n';
      h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
};

}  // namespace cnamecloak
