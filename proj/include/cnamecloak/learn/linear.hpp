// linear.hpp
//
// Non-tree baselines for the algorithm comparison: L2 logistic
// regression and k-nearest neighbours.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cnamecloak/learn/ensemble.hpp"
#include "cnamecloak/learn/params.hpp"
#include "cnamecloak/matrix.hpp"

namespace cnamecloak::learn {

/// Logistic regression on standardized columns.  Columns are centered
/// and scaled by training statistics stored in the model (zero-variance
/// columns keep scale 1).
struct logistic_model {
  std::vector<double> mean, scale, coef;
  double intercept = 0;

  double predict(std::span<const double> x) const {
    double z = intercept;
    for (std::size_t c = 0; c < coef.size(); ++c) z += coef[c] * (x[c] - mean[c]) / scale[c];
    return expit(z);
  }
};

/// Minimizes 0.5 |w|^2 + C * sum(log-loss) by Newton iterations; the
/// intercept is not penalized.
inline logistic_model fit_logistic(const encoded_matrix& m, const hyper_params& p) {
  const std::size_t n = m.rows, d = m.cols;
  logistic_model lm;
  lm.mean.assign(d, 0.0);
  lm.scale.assign(d, 1.0);
  for (std::size_t c = 0; c < d; ++c) {
    double s = 0, s2 = 0;
    for (std::size_t r = 0; r < n; ++r) s += m(r, c);
    lm.mean[c] = s / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) s2 += (m(r, c) - lm.mean[c]) * (m(r, c) - lm.mean[c]);
    const double sd = std::sqrt(s2 / static_cast<double>(n));
    lm.scale[c] = sd > 1e-12 ? sd : 1.0;
  }
  Eigen::MatrixXd z(n, d + 1);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = (m(r, c) - lm.mean[c]) / lm.scale[c];
    z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) = 1.0;
  }
  Eigen::VectorXd y(n);
  for (std::size_t r = 0; r < n; ++r) y(static_cast<Eigen::Index>(r)) = m.labels[r];
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d + 1));
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d + 1), 1.0 / p.c);
  penalty(static_cast<Eigen::Index>(d)) = 1e-10;
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::VectorXd eta = z * w;
    Eigen::VectorXd prob = eta.unaryExpr([](double v) { return expit(v); });
    Eigen::VectorXd grad = z.transpose() * (prob - y) + penalty.cwiseProduct(w);
    Eigen::VectorXd h = prob.cwiseProduct(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)) - prob);
    Eigen::MatrixXd hess = z.transpose() * h.asDiagonal() * z;
    hess.diagonal() += penalty;
    Eigen::VectorXd step = hess.ldlt().solve(grad);
    w -= step;
    if (step.cwiseAbs().maxCoeff() < 1e-8) break;
  }
  lm.coef.assign(w.data(), w.data() + d);
  lm.intercept = w(static_cast<Eigen::Index>(d));
  return lm;
}

/// Brute-force k-nearest neighbours under Euclidean distance; ties in
/// distance go to the lower training index.
struct knn_model {
  encoded_matrix train;
  std::size_t k = 5;

  double predict(std::span<const double> x) const {
    std::vector<std::pair<double, std::size_t>> dist(train.rows);
    for (std::size_t r = 0; r < train.rows; ++r) {
      auto row = train.row(r);
      double s = 0;
      for (std::size_t c = 0; c < train.cols; ++c) s += (row[c] - x[c]) * (row[c] - x[c]);
      dist[r] = {s, r};
    }
    const std::size_t kk = std::min(k, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
    double pos = 0;
    for (std::size_t i = 0; i < kk; ++i) pos += train.labels[dist[i].second];
    return pos / static_cast<double>(kk);
  }
};

inline knn_model fit_knn(const encoded_matrix& m, const hyper_params& p) { return {m, p.n_neighbors}; }

}  // namespace cnamecloak::learn
