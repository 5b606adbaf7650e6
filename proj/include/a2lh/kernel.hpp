#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "a2lh/data.hpp"
#include "a2lh/error.hpp"
#include "a2lh/rng.hpp"

namespace a2lh {

/// RBF anchor map: q anchor columns taken from the training data plus a width.
struct KernelModel {
  Eigen::MatrixXd anchors;  // d x q
  double width = 1.0;
  int modality_id = 0;

  Eigen::Index dim() const noexcept { return anchors.rows(); }
  Eigen::Index num_anchors() const noexcept { return anchors.cols(); }
};

inline constexpr Eigen::Index kWidthSubsample = 2000;

/// Mean Euclidean distance over all (point column, anchor column) pairs.
inline double mean_anchor_distance(const Eigen::MatrixXd& points, const Eigen::MatrixXd& anchors) {
  double total = 0.0;
  for (Eigen::Index a = 0; a < anchors.cols(); ++a)
    total += (points.colwise() - anchors.col(a)).colwise().norm().sum();
  return total / static_cast<double>(points.cols() * anchors.cols());
}

/// Samples q distinct training columns as anchors. The width is the mean
/// distance from a subsample of min(n, 2000) training points to the anchors,
/// or 1 when that mean is zero.
inline KernelModel fit_kernel(const FeatureMatrix& x, Eigen::Index q, std::uint64_t seed) {
  const Eigen::Index n = x.size();
  if (q < 1 || q > n)
    throw ValueError("anchor count q=" + std::to_string(q) + " must lie in [1, n=" +
                     std::to_string(n) + "]");
  Rng rng = make_rng(seed, "anchors", static_cast<std::uint64_t>(x.modality_id()));
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  // partial Fisher-Yates: the first q entries become a uniform sample
  for (Eigen::Index i = 0; i < q; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<Eigen::Index> anchor_idx(idx.begin(), idx.begin() + q);

  KernelModel km;
  km.modality_id = x.modality_id();
  km.anchors = x.values()(Eigen::all, anchor_idx);

  const Eigen::Index m = std::min(n, kWidthSubsample);
  std::vector<Eigen::Index> sub(static_cast<std::size_t>(n));
  std::iota(sub.begin(), sub.end(), Eigen::Index{0});
  if (m < n) {
    for (Eigen::Index i = 0; i < m; ++i) {
      std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
      std::swap(sub[static_cast<std::size_t>(i)], sub[static_cast<std::size_t>(pick(rng))]);
    }
    sub.resize(static_cast<std::size_t>(m));
  }
  const double rho = mean_anchor_distance(x.values()(Eigen::all, sub), km.anchors);
  km.width = rho > 0.0 && std::isfinite(rho) ? rho : 1.0;
  return km;
}

/// q x n map with entry (j, i) = exp(-|x_i - a_j|^2 / (2 rho^2)).
/// Entries are clamped below at the smallest normal double so they stay in (0, 1].
inline Eigen::MatrixXd apply_kernel(const KernelModel& km, const Eigen::MatrixXd& x) {
  if (x.rows() != km.dim())
    throw ShapeError("kernel expects dimension " + std::to_string(km.dim()) + ", got " +
                     std::to_string(x.rows()));
  if (!(km.width > 0.0)) throw ValueError("kernel width must be positive");
  const Eigen::VectorXd anchor_sq = km.anchors.colwise().squaredNorm().transpose();
  const Eigen::RowVectorXd x_sq = x.colwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * (km.anchors.transpose() * x);
  d2.colwise() += anchor_sq;
  d2.rowwise() += x_sq;

  const double inv = 1.0 / (2.0 * km.width * km.width);
  constexpr double tiny = std::numeric_limits<double>::min();
  for (Eigen::Index i = 0; i < d2.cols(); ++i) {
    for (Eigen::Index j = 0; j < d2.rows(); ++j) {
      double v = d2(j, i);
      // cancellation-prone near coincidence: recompute directly
      if (v <= 1e-8 * (anchor_sq(j) + x_sq(i)))
        v = (x.col(i) - km.anchors.col(j)).squaredNorm();
      d2(j, i) = std::max(std::exp(-v * inv), tiny);
    }
  }
  return d2;
}

inline FeatureMatrix apply_kernel(const KernelModel& km, const FeatureMatrix& x) {
  return FeatureMatrix(apply_kernel(km, x.values()), x.modality_id());
}

}  // namespace a2lh
