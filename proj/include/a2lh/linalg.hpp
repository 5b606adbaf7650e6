#pragma once

#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SVD>

#include "a2lh/error.hpp"

namespace a2lh {

/// Ridge added to a p x p PSD system matrix: ridge * tr(A)/p, or plain `ridge`
/// when the trace vanishes.
inline double scaled_ridge(const Eigen::MatrixXd& a, double ridge) {
  if (ridge <= 0.0) return 0.0;
  const double mean_diag = a.trace() / static_cast<double>(a.rows());
  return mean_diag > 0.0 ? ridge * mean_diag : ridge;
}

/// Solves (A + r I) X = B for symmetric PSD A.
inline Eigen::MatrixXd solve_left(Eigen::MatrixXd a, const Eigen::MatrixXd& b, double ridge) {
  if (a.rows() != a.cols() || a.rows() != b.rows())
    throw ShapeError("solve_left: incompatible shapes");
  a.diagonal().array() += scaled_ridge(a, ridge);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw ValueError("solve_left: factorization failed");
  return ldlt.solve(b);
}

/// Solves X (A + r I) = B for symmetric PSD A.
inline Eigen::MatrixXd solve_right(const Eigen::MatrixXd& b, Eigen::MatrixXd a, double ridge) {
  if (a.rows() != a.cols() || a.cols() != b.cols())
    throw ShapeError("solve_right: incompatible shapes");
  a.diagonal().array() += scaled_ridge(a, ridge);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw ValueError("solve_right: factorization failed");
  return ldlt.solve(b.transpose()).transpose();
}

/// argmax of tr(O V^T) over V with orthonormal columns: V = P Q^T from the
/// thin SVD O = P S Q^T.
inline Eigen::MatrixXd procrustes(const Eigen::MatrixXd& o) {
  if (!o.allFinite()) throw ValueError("procrustes: non-finite input matrix");
  if (o.rows() < o.cols())
    throw ShapeError("procrustes: need rows >= cols, got " + std::to_string(o.rows()) + "x" +
                     std::to_string(o.cols()));
  Eigen::BDCSVD<Eigen::MatrixXd> svd(o, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw ValueError("procrustes: SVD did not converge");
  return svd.matrixU() * svd.matrixV().transpose();
}

inline double orthogonality_residual(const Eigen::MatrixXd& v) {
  return (v.transpose() * v - Eigen::MatrixXd::Identity(v.cols(), v.cols())).norm();
}

}  // namespace a2lh
