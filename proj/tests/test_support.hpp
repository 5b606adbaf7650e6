#pragma once

// Dense reference computations used only by tests. Everything here goes
// through the materialized n x n similarity matrix and finite differences,
// never through the factored products the library uses.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "a2lh/a2lh.hpp"

namespace a2lh::testing {

inline Eigen::MatrixXd random_orthogonal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const Eigen::MatrixXd g = gaussian_matrix(rows, cols, 1.0, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  // fix column signs so the draw is Haar distributed
  const Eigen::MatrixXd r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < cols; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

/// Random single- or multi-label c x n matrix with every instance labeled.
inline LabelMatrix random_labels(Eigen::Index c, Eigen::Index n, Rng& rng, bool multilabel = false) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(c, n);
  std::uniform_int_distribution<Eigen::Index> cls(0, c - 1);
  std::bernoulli_distribution coin(0.4);
  for (Eigen::Index i = 0; i < n; ++i) {
    l(cls(rng), i) = 1.0;
    if (multilabel)
      for (Eigen::Index j = 0; j < c; ++j)
        if (coin(rng)) l(j, i) = 1.0;
  }
  return LabelMatrix(std::move(l));
}

struct Problem {
  Hyperparams h;
  TrainState state;
};

/// A random small problem with every variable moved away from its
/// initialization so that no update starts at a stationary point.
inline Problem random_problem(std::uint64_t seed, Eigen::Index n = 40, Eigen::Index k = 8,
                              Eigen::Index c = 3, Eigen::Index q = 10, Eigen::Index M = 2,
                              Variant variant = Variant::full, bool multilabel = false) {
  Rng rng(seed);
  Hyperparams h;
  h.k = k;
  h.seed = seed;
  std::vector<Eigen::MatrixXd> phi;
  for (Eigen::Index m = 0; m < M; ++m)
    phi.push_back(gaussian_matrix(q, n, 1.0, rng).array().abs().matrix());
  LabelMatrix labels = random_labels(c, n, rng, multilabel);
  TrainState s = init_state(std::move(phi), labels, h, variant);
  s.U = gaussian_matrix(q, n, 0.5, rng);
  s.C = gaussian_matrix(k, q, 0.5, rng);
  if (s.R) *s.R = gaussian_matrix(k, c, 0.5, rng);
  s.B = sign_of(gaussian_matrix(k, n, 1.0, rng));
  std::uniform_real_distribution<double> unif(0.1, 0.9);
  Eigen::VectorXd mu(M);
  for (Eigen::Index m = 0; m < M; ++m) mu(m) = unif(rng);
  s.mu = mu / mu.sum();
  for (Eigen::Index m = 0; m < M; ++m) {
    s.V[static_cast<std::size_t>(m)] = random_orthogonal(q, q, rng);
    s.K[static_cast<std::size_t>(m)] = random_orthogonal(q, q, rng);
    s.Lambda[static_cast<std::size_t>(m)] = gaussian_matrix(q, q, 0.1, rng);
  }
  return Problem{h, std::move(s)};
}

inline Eigen::MatrixXd dense_S(const TrainState& s) { return dense_similarity(LabelMatrix(s.L())); }

inline Eigen::MatrixXd label_side_dense(const TrainState& s) {
  return s.R ? Eigen::MatrixXd(*s.R * s.L()) : s.B;
}

/// Sub-objective of the R step.
inline double dense_objective_R(const TrainState& s, const Hyperparams& h, const Eigen::MatrixXd& r) {
  const Eigen::MatrixXd S = dense_S(s);
  const Eigen::MatrixXd g = r * s.L();
  const Eigen::MatrixXd a = s.C * s.U;
  const double kk = static_cast<double>(s.k());
  return (g.transpose() * a - kk * S).squaredNorm() + h.beta * (g - s.B).squaredNorm() +
         h.eta * g.squaredNorm();
}

/// Sub-objective of the C step.
inline double dense_objective_C(const TrainState& s, const Hyperparams& h, const Eigen::MatrixXd& c) {
  const Eigen::MatrixXd S = dense_S(s);
  const Eigen::MatrixXd g = label_side_dense(s);
  const Eigen::MatrixXd a = c * s.U;
  const double kk = static_cast<double>(s.k());
  return (g.transpose() * a - kk * S).squaredNorm() + h.alpha * (s.B - a).squaredNorm();
}

inline double weight(const TrainState& s, const Hyperparams& h, Eigen::Index m) {
  return h.zeta == 0.0 ? 1.0 : std::pow(s.mu(m), h.zeta);
}

/// Sub-objective of the U step.
inline double dense_objective_U(const TrainState& s, const Hyperparams& h, const Eigen::MatrixXd& u) {
  const Eigen::MatrixXd S = dense_S(s);
  const Eigen::MatrixXd g = label_side_dense(s);
  const Eigen::MatrixXd a = s.C * u;
  const double kk = static_cast<double>(s.k());
  double f = (g.transpose() * a - kk * S).squaredNorm() + h.alpha * (s.B - a).squaredNorm() +
             h.eta * u.squaredNorm();
  for (Eigen::Index m = 0; m < s.modalities(); ++m)
    f += weight(s, h, m) *
         (s.phiX[static_cast<std::size_t>(m)] - s.V[static_cast<std::size_t>(m)] * u).squaredNorm();
  return f;
}

/// Full objective with S materialized.
inline double dense_objective(const TrainState& s, const Hyperparams& h) {
  const Eigen::MatrixXd S = dense_S(s);
  const Eigen::MatrixXd g = label_side_dense(s);
  const Eigen::MatrixXd a = s.C * s.U;
  const double kk = static_cast<double>(s.k());
  double f = (g.transpose() * a - kk * S).squaredNorm() + h.alpha * (s.B - a).squaredNorm() +
             h.eta * s.U.squaredNorm();
  if (s.R) f += h.beta * (g - s.B).squaredNorm() + h.eta * g.squaredNorm();
  for (Eigen::Index m = 0; m < s.modalities(); ++m)
    f += weight(s, h, m) *
         (s.phiX[static_cast<std::size_t>(m)] - s.V[static_cast<std::size_t>(m)] * s.U).squaredNorm();
  return f;
}

/// Central finite-difference gradient.
inline Eigen::MatrixXd fd_gradient(const std::function<double(const Eigen::MatrixXd&)>& f,
                                   const Eigen::MatrixXd& x, double step = 1e-5) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  Eigen::MatrixXd probe = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double orig = probe(i, j);
      probe(i, j) = orig + step;
      const double up = f(probe);
      probe(i, j) = orig - step;
      const double down = f(probe);
      probe(i, j) = orig;
      g(i, j) = (up - down) / (2.0 * step);
    }
  }
  return g;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

inline double rel_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

}  // namespace a2lh::testing
