#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "a2lh/data.hpp"
#include "a2lh/error.hpp"
#include "a2lh/linalg.hpp"
#include "a2lh/rng.hpp"
#include "a2lh/similarity.hpp"

namespace a2lh {

/// Step-one variants: the full method and its three ablations.
enum class Variant { full, no_kernel, no_multisemantic, relaxed_B };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_kernel: return "no_kernel";
    case Variant::no_multisemantic: return "no_multisemantic";
    case Variant::relaxed_B: return "relaxed_B";
  }
  return "full";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "full") return Variant::full;
  if (s == "no_kernel") return Variant::no_kernel;
  if (s == "no_multisemantic") return Variant::no_multisemantic;
  if (s == "relaxed_B") return Variant::relaxed_B;
  throw ValueError("unknown variant '" + std::string(s) +
                   "' (expected full, no_kernel, no_multisemantic, relaxed_B)");
}

inline bool uses_label_embedding(Variant v) { return v != Variant::no_multisemantic; }

struct Hyperparams {
  Eigen::Index k = 32;
  double alpha = 1e-2;
  double beta = 1e1;
  double eta = 1e-3;
  double lambda = 1e-4;
  double omega = 1e-2;
  /// Exponent of the adaptive weights; 0 freezes uniform weights.
  double zeta = 2.0;
  int max_iter = 50;
  double tol = 1e-4;
  double ridge = 1e-6;
  std::uint64_t seed = 0;

  void validate() const {
    if (k < 1) throw ValueError("code length k must be >= 1");
    if (!(lambda > 0.0)) throw ValueError("lambda must be > 0");
    if (max_iter < 1) throw ValueError("max_iter must be >= 1");
    if (!(alpha >= 0.0 && beta >= 0.0 && eta >= 0.0 && omega >= 0.0))
      throw ValueError("alpha, beta, eta, omega must be nonnegative");
    if (!(zeta == 0.0 || zeta >= 2.0)) throw ValueError("zeta must be 0 or >= 2");
    if (!(tol >= 0.0)) throw ValueError("tol must be >= 0");
    if (!(ridge >= 0.0)) throw ValueError("ridge must be >= 0");
  }
};

/// Every step-one variable. Modality blocks V/K/Lambda are d_m x q with
/// orthonormal columns (square when the kernel map is used).
struct TrainState {
  Variant variant = Variant::full;
  Eigen::VectorXd mu;
  Eigen::MatrixXd U;  // q x n
  std::vector<Eigen::MatrixXd> V;
  std::vector<Eigen::MatrixXd> K;
  std::vector<Eigen::MatrixXd> Lambda;
  Eigen::MatrixXd C;                // k x q
  std::optional<Eigen::MatrixXd> R;  // k x c, absent without the label embedding
  Eigen::MatrixXd B;                // k x n, +-1 except during relaxed training
  std::vector<Eigen::MatrixXd> phiX;
  std::vector<double> phi_sqnorm;
  SimilarityFactor sim;

  TrainState(std::vector<Eigen::MatrixXd> phi, const LabelMatrix& labels)
      : phiX(std::move(phi)), sim(labels) {}

  Eigen::Index modalities() const noexcept { return static_cast<Eigen::Index>(phiX.size()); }
  Eigen::Index n() const noexcept { return sim.size(); }
  Eigen::Index q() const noexcept { return U.rows(); }
  Eigen::Index k() const noexcept { return B.rows(); }
  const Eigen::MatrixXd& L() const noexcept { return sim.labels(); }

  /// The k x n label-side factor: R L, or B when the label embedding is off.
  Eigen::MatrixXd label_side() const { return R ? Eigen::MatrixXd(*R * L()) : B; }
};

/// U U^T and phi_m U^T, shared by the mu, C, V and K steps and the objective.
struct UProducts {
  Eigen::MatrixXd uut;
  std::vector<Eigen::MatrixXd> phi_ut;
};

inline UProducts u_products(const TrainState& s) {
  UProducts p;
  p.uut = s.U * s.U.transpose();
  for (const auto& phi : s.phiX) p.phi_ut.push_back(phi * s.U.transpose());
  return p;
}

/// sgn with sgn(0) = +1.
template <typename Derived>
Eigen::MatrixXd sign_of(const Eigen::MatrixBase<Derived>& m) {
  return m.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
}

inline double weight_power(double mu, double zeta) { return zeta == 0.0 ? 1.0 : std::pow(mu, zeta); }

/// Allocates the state: uniform weights, identity V/K, zero duals, N(0, 0.01)
/// entries for U, C and R, and B = sgn of a Gaussian draw. With the kernel map
/// every phi_m is q x n; for raw features the common dimension is min_m d_m.
inline TrainState init_state(std::vector<Eigen::MatrixXd> phiX, const LabelMatrix& labels,
                             const Hyperparams& h, Variant variant = Variant::full) {
  h.validate();
  if (phiX.empty()) throw ShapeError("init_state: no modalities");
  const Eigen::Index n = labels.size();
  Eigen::Index q = std::numeric_limits<Eigen::Index>::max();
  for (const auto& phi : phiX) {
    if (phi.cols() != n)
      throw ShapeError("init_state: modality has " + std::to_string(phi.cols()) +
                       " instances, labels have " + std::to_string(n));
    q = std::min(q, phi.rows());
  }
  if (variant != Variant::no_kernel) {
    for (const auto& phi : phiX)
      if (phi.rows() != q)
        throw ShapeError("init_state: kernelized modalities must share q");
  }

  TrainState s(std::move(phiX), labels);
  s.variant = variant;
  const Eigen::Index M = s.modalities();
  s.mu = Eigen::VectorXd::Constant(M, 1.0 / static_cast<double>(M));
  constexpr double init_std = 0.1;  // variance 0.01
  {
    Rng rng = make_rng(h.seed, "init.U");
    s.U = gaussian_matrix(q, n, init_std, rng);
  }
  {
    Rng rng = make_rng(h.seed, "init.C");
    s.C = gaussian_matrix(h.k, q, init_std, rng);
  }
  if (uses_label_embedding(variant)) {
    Rng rng = make_rng(h.seed, "init.R");
    s.R = gaussian_matrix(h.k, labels.classes(), init_std, rng);
  }
  {
    Rng rng = make_rng(h.seed, "init.B");
    s.B = sign_of(gaussian_matrix(h.k, n, 1.0, rng));
  }
  for (const auto& phi : s.phiX) {
    s.V.push_back(Eigen::MatrixXd::Identity(phi.rows(), q));
    s.K.push_back(Eigen::MatrixXd::Identity(phi.rows(), q));
    s.Lambda.push_back(Eigen::MatrixXd::Zero(phi.rows(), q));
    s.phi_sqnorm.push_back(phi.squaredNorm());
  }
  return s;
}

/// Reconstruction residual |phi_m - V_m U|_F^2, expanded so that no d x n
/// temporary is formed.
inline double modality_residual(const TrainState& s, const UProducts& p, Eigen::Index m) {
  const auto& v = s.V[static_cast<std::size_t>(m)];
  const double cross = (v.transpose() * p.phi_ut[static_cast<std::size_t>(m)]).trace();
  const double quad = ((v.transpose() * v) * p.uut).trace();
  return std::max(0.0, s.phi_sqnorm[static_cast<std::size_t>(m)] - 2.0 * cross + quad);
}

/// Closed-form simplex weights mu_m proportional to delta_m^(1/(1-zeta)).
/// Zero residuals take all the weight, split evenly between them.
inline Eigen::VectorXd mu_from_residuals(const Eigen::VectorXd& delta, double zeta) {
  const Eigen::Index M = delta.size();
  if (M == 0) throw ShapeError("mu_from_residuals: empty residual vector");
  if (zeta == 0.0) return Eigen::VectorXd::Constant(M, 1.0 / static_cast<double>(M));
  if (!(zeta > 1.0)) throw ValueError("mu_from_residuals: zeta must exceed 1");
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(M);
  const Eigen::Index zeros = (delta.array() <= 0.0).count();
  if (zeros > 0) {
    for (Eigen::Index m = 0; m < M; ++m)
      if (delta(m) <= 0.0) mu(m) = 1.0 / static_cast<double>(zeros);
    return mu;
  }
  const double e = 1.0 / (1.0 - zeta);
  Eigen::VectorXd logw = e * delta.array().log();
  const double top = logw.maxCoeff();
  mu = (logw.array() - top).exp();
  return mu / mu.sum();
}

inline void update_mu(TrainState& s, const Hyperparams& h, const UProducts& p) {
  Eigen::VectorXd delta(s.modalities());
  for (Eigen::Index m = 0; m < s.modalities(); ++m) delta(m) = modality_residual(s, p, m);
  s.mu = mu_from_residuals(delta, h.zeta);
}

inline void update_mu(TrainState& s, const Hyperparams& h) { update_mu(s, h, u_products(s)); }

/// A S L^T = 2 (A L^T)(L L^T) - (A 1)(L 1)^T.
inline Eigen::MatrixXd times_S_Lt(const Eigen::MatrixXd& a, const SimilarityFactor& sf) {
  const Eigen::MatrixXd& l = sf.labels();
  const Eigen::MatrixXd alt = a * l.transpose();
  const Eigen::VectorXd a1 = a.rowwise().sum();
  return 2.0 * alt * (l * l.transpose()) - a1 * sf.label_sums().transpose();
}

/// R = (CU U^T C^T + (beta+eta) I)^-1 (k CU S L^T + beta B L^T)(L L^T)^-1.
inline void update_R(TrainState& s, const Hyperparams& h) {
  if (!s.R) return;
  const Eigen::MatrixXd a = s.C * s.U;
  Eigen::MatrixXd left = a * a.transpose();
  left.diagonal().array() += h.beta + h.eta;
  const double kk = static_cast<double>(s.k());
  const Eigen::MatrixXd rhs =
      kk * times_S_Lt(a, s.sim) + h.beta * (s.B * s.L().transpose());
  const Eigen::MatrixXd partial = solve_left(std::move(left), rhs, h.ridge);
  s.R = solve_right(partial, s.L() * s.L().transpose(), h.ridge);
}

/// C = (G G^T + alpha I)^-1 (k G S U^T + alpha B U^T)(U U^T)^-1 with G = R L
/// (G = B without the label embedding).
inline void update_C(TrainState& s, const Hyperparams& h, const UProducts& p) {
  const Eigen::MatrixXd g = s.label_side();
  Eigen::MatrixXd left = g * g.transpose();
  left.diagonal().array() += h.alpha;
  const double kk = static_cast<double>(s.k());
  const Eigen::MatrixXd mid = (kk * right_multiply_S(g, s.sim) + h.alpha * s.B) * s.U.transpose();
  const Eigen::MatrixXd partial = solve_left(std::move(left), mid, h.ridge);
  s.C = solve_right(partial, p.uut, h.ridge);
}

inline void update_C(TrainState& s, const Hyperparams& h) { update_C(s, h, u_products(s)); }

/// Largest eigenvalue of a symmetric PSD matrix.
inline double max_eigenvalue(const Eigen::MatrixXd& p) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

/// B = sgn(alpha C U + beta R L). The relaxed variant keeps the real-valued
/// average (alpha C U + beta R L)/(alpha + beta). Without the label embedding
/// B also enters the quadratic coupling term; that case takes one
/// majorize-minimize step B = sgn(k CU S + alpha CU - P B0 + lmax(P) B0),
/// P = CU (CU)^T, which never increases the objective.
inline void update_B(TrainState& s, const Hyperparams& h) {
  const Eigen::MatrixXd a = s.C * s.U;
  switch (s.variant) {
    case Variant::full:
    case Variant::no_kernel:
      s.B = sign_of(h.alpha * a + h.beta * (*s.R * s.L()));
      break;
    case Variant::relaxed_B: {
      const double denom = h.alpha + h.beta;
      if (!(denom > 0.0)) throw ValueError("relaxed_B requires alpha + beta > 0");
      s.B = (h.alpha * a + h.beta * (*s.R * s.L())) / denom;
      break;
    }
    case Variant::no_multisemantic: {
      const Eigen::MatrixXd pm = a * a.transpose();
      const double lmax = max_eigenvalue(pm);
      const double kk = static_cast<double>(s.k());
      Eigen::MatrixXd target = kk * right_multiply_S(a, s.sim) + h.alpha * a - pm * s.B;
      target += lmax * s.B;
      s.B = sign_of(target);
      break;
    }
  }
}

/// U = (C^T G G^T C + alpha C^T C + sum_m mu_m^zeta V_m^T V_m + eta I)^-1
///     (k C^T G S + alpha C^T B + sum_m mu_m^zeta V_m^T phi_m).
inline void update_U(TrainState& s, const Hyperparams& h) {
  const Eigen::MatrixXd g = s.label_side();
  const Eigen::MatrixXd ggt = g * g.transpose();
  Eigen::MatrixXd lhs = s.C.transpose() * ggt * s.C + h.alpha * (s.C.transpose() * s.C);
  lhs.diagonal().array() += h.eta;
  const double kk = static_cast<double>(s.k());
  Eigen::MatrixXd rhs = s.C.transpose() * (kk * right_multiply_S(g, s.sim) + h.alpha * s.B);
  for (Eigen::Index m = 0; m < s.modalities(); ++m) {
    const auto& v = s.V[static_cast<std::size_t>(m)];
    const double w = weight_power(s.mu(m), h.zeta);
    lhs.noalias() += w * (v.transpose() * v);
    rhs.noalias() += w * (v.transpose() * s.phiX[static_cast<std::size_t>(m)]);
  }
  s.U = solve_left(std::move(lhs), rhs, h.ridge);
}

/// V_m = Procrustes of O = 2 w phi U^T - w K U U^T + lambda K - Lambda,
/// w = mu_m^zeta.
inline void update_V(TrainState& s, const Hyperparams& h, Eigen::Index m, const UProducts& p) {
  const auto mi = static_cast<std::size_t>(m);
  const double w = weight_power(s.mu(m), h.zeta);
  const Eigen::MatrixXd o =
      2.0 * w * p.phi_ut[mi] - w * (s.K[mi] * p.uut) + h.lambda * s.K[mi] - s.Lambda[mi];
  s.V[mi] = procrustes(o);
}

inline void update_V(TrainState& s, const Hyperparams& h, Eigen::Index m) {
  update_V(s, h, m, u_products(s));
}

/// K_m = Procrustes of O_k = lambda V + Lambda - w V U U^T, the maximizer of
/// the V-step augmented function over K.
inline void update_K(TrainState& s, const Hyperparams& h, Eigen::Index m, const UProducts& p) {
  const auto mi = static_cast<std::size_t>(m);
  const double w = weight_power(s.mu(m), h.zeta);
  const Eigen::MatrixXd o = h.lambda * s.V[mi] + s.Lambda[mi] - w * (s.V[mi] * p.uut);
  s.K[mi] = procrustes(o);
}

inline void update_K(TrainState& s, const Hyperparams& h, Eigen::Index m) {
  update_K(s, h, m, u_products(s));
}

inline void update_lambda(TrainState& s, const Hyperparams& h, Eigen::Index m) {
  const auto mi = static_cast<std::size_t>(m);
  s.Lambda[mi] += h.lambda * (s.V[mi] - s.K[mi]);
}

/// Overall objective
///   |G^T CU - kS|^2 + alpha |B - CU|^2 + beta |G - B|^2
///   + sum_m mu_m^zeta |phi_m - V_m U|^2 + eta (|G|^2 + |U|^2),
/// G = R L. Without the label embedding G = B and the beta and |G|^2 terms drop.
/// The coupling term is expanded as <GG^T, AA^T> - 2k <G, AS> + k^2 |S|^2.
inline double objective(const TrainState& s, const Hyperparams& h, const UProducts& p) {
  const Eigen::MatrixXd a = s.C * s.U;
  const Eigen::MatrixXd g = s.label_side();
  const double kk = static_cast<double>(s.k());
  const Eigen::MatrixXd ggt = g * g.transpose();
  const Eigen::MatrixXd aat = a * a.transpose();
  const double coupling = ggt.cwiseProduct(aat).sum() -
                          2.0 * kk * g.cwiseProduct(right_multiply_S(a, s.sim)).sum() +
                          kk * kk * s.sim.squared_norm();
  double total = coupling + h.alpha * (s.B - a).squaredNorm();
  for (Eigen::Index m = 0; m < s.modalities(); ++m)
    total += weight_power(s.mu(m), h.zeta) * modality_residual(s, p, m);
  total += h.eta * p.uut.trace();
  if (s.R) {
    total += h.beta * (g - s.B).squaredNorm();
    total += h.eta * g.squaredNorm();
  }
  return total;
}

inline double objective(const TrainState& s, const Hyperparams& h) {
  return objective(s, h, u_products(s));
}

}  // namespace a2lh
