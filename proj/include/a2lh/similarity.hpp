#pragma once

#include <string>

#include <Eigen/Core>

#include "a2lh/data.hpp"
#include "a2lh/error.hpp"

namespace a2lh {

/// Pairwise label similarity S = 2 L^T L - 1 1^T, held in factored form.
/// The n x n matrix is never formed; products with S cost O(n).
class SimilarityFactor {
 public:
  explicit SimilarityFactor(const LabelMatrix& labels)
      : labels_(labels.values()), label_sums_(labels_.rowwise().sum()) {}

  const Eigen::MatrixXd& labels() const noexcept { return labels_; }
  /// L 1, the per-class instance counts.
  const Eigen::VectorXd& label_sums() const noexcept { return label_sums_; }
  Eigen::Index size() const noexcept { return labels_.cols(); }

  /// |S|_F^2 = 4 |L L^T|_F^2 - 4 |L 1|^2 + n^2.
  double squared_norm() const {
    const Eigen::MatrixXd gram = labels_ * labels_.transpose();
    const double n = static_cast<double>(size());
    return 4.0 * gram.squaredNorm() - 4.0 * label_sums_.squaredNorm() + n * n;
  }

 private:
  Eigen::MatrixXd labels_;
  Eigen::VectorXd label_sums_;
};

inline constexpr Eigen::Index kDenseSimilarityLimit = 2000;

/// Materialized S. Only meant for checking the factored path on small n.
inline Eigen::MatrixXd dense_similarity(const LabelMatrix& labels) {
  const Eigen::Index n = labels.size();
  if (n > kDenseSimilarityLimit)
    throw ValueError("dense similarity refused for n=" + std::to_string(n) +
                     " (limit 2000); use right_multiply_S on a SimilarityFactor");
  const Eigen::MatrixXd& l = labels.values();
  return (2.0 * (l.transpose() * l)).array() - 1.0;
}

/// M S = 2 (M L^T) L - (M 1) 1^T, O(r c n).
template <typename Derived>
Eigen::MatrixXd right_multiply_S(const Eigen::MatrixBase<Derived>& m, const SimilarityFactor& sf) {
  if (m.cols() != sf.size())
    throw ShapeError("right_multiply_S: operand has " + std::to_string(m.cols()) +
                     " columns, similarity has n=" + std::to_string(sf.size()));
  const Eigen::MatrixXd ml = m * sf.labels().transpose();
  const Eigen::VectorXd row_sums = m.rowwise().sum();
  Eigen::MatrixXd out = 2.0 * (ml * sf.labels());
  out.colwise() -= row_sums;
  return out;
}

/// L L^T + ridge I.
inline Eigen::MatrixXd label_gram(const LabelMatrix& labels, double ridge = 0.0) {
  const Eigen::MatrixXd& l = labels.values();
  Eigen::MatrixXd g = l * l.transpose();
  g.diagonal().array() += ridge;
  return g;
}

}  // namespace a2lh
