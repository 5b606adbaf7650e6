#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "a2lh/a2lh.hpp"
#include "test_support.hpp"

using namespace a2lh;
using namespace a2lh::testing;

namespace {

double relative_gradient(const std::function<double(const Eigen::MatrixXd&)>& f,
                         const Eigen::MatrixXd& before, const Eigen::MatrixXd& after) {
  const double scale = std::max(1.0, max_abs(fd_gradient(f, before)));
  return max_abs(fd_gradient(f, after)) / scale;
}

}  // namespace

TEST(InitState, UniformWeightsIdentityBlocksAndDeterminism) {
  Rng rng(3);
  std::vector<Eigen::MatrixXd> phi = {gaussian_matrix(6, 20, 1.0, rng), gaussian_matrix(6, 20, 1.0, rng)};
  LabelMatrix labels = random_labels(3, 20, rng);
  Hyperparams h;
  h.k = 8;
  h.seed = 11;
  TrainState a = init_state(phi, labels, h);
  TrainState b = init_state(phi, labels, h);
  EXPECT_DOUBLE_EQ(a.mu(0), 0.5);
  EXPECT_DOUBLE_EQ(a.mu(1), 0.5);
  EXPECT_EQ(a.U, b.U);
  EXPECT_EQ(a.C, b.C);
  EXPECT_EQ(*a.R, *b.R);
  EXPECT_EQ(a.B, b.B);
  for (std::size_t m = 0; m < 2; ++m) {
    EXPECT_EQ(orthogonality_residual(a.V[m]), 0.0);
    EXPECT_EQ(a.K[m], Eigen::MatrixXd::Identity(6, 6));
    EXPECT_EQ(a.Lambda[m].norm(), 0.0);
  }
  EXPECT_TRUE((a.B.array().abs() == 1.0).all());
}

TEST(InitState, RejectsMismatchedInstanceCounts) {
  Rng rng(1);
  std::vector<Eigen::MatrixXd> phi = {gaussian_matrix(4, 10, 1.0, rng), gaussian_matrix(4, 9, 1.0, rng)};
  Hyperparams h;
  EXPECT_THROW(init_state(phi, random_labels(2, 10, rng), h), ShapeError);
}

TEST(InitState, NoMultisemanticNeverAllocatesR) {
  auto p = random_problem(5, 20, 4, 2, 5, 2, Variant::no_multisemantic);
  EXPECT_FALSE(p.state.R.has_value());
}

TEST(UpdateMu, ClosedFormExamples) {
  Eigen::VectorXd d(2);
  d << 1, 1;
  EXPECT_NEAR(mu_from_residuals(d, 2.0)(0), 0.5, 1e-15);
  d << 1, 3;
  const Eigen::VectorXd m2 = mu_from_residuals(d, 2.0);
  EXPECT_NEAR(m2(0), 0.75, 1e-15);
  EXPECT_NEAR(m2(1), 0.25, 1e-15);
  const Eigen::VectorXd m3 = mu_from_residuals(d, 3.0);
  EXPECT_NEAR(m3(0), std::sqrt(3.0) / (1.0 + std::sqrt(3.0)), 1e-14);
  EXPECT_NEAR(m3(1), 1.0 / (1.0 + std::sqrt(3.0)), 1e-14);
  EXPECT_NEAR(m3(0), 0.634, 1e-3);
}

TEST(UpdateMu, ZeroResidualTakesAllWeight) {
  Eigen::VectorXd d(3);
  d << 0, 2, 0;
  const Eigen::VectorXd mu = mu_from_residuals(d, 2.0);
  EXPECT_DOUBLE_EQ(mu(0), 0.5);
  EXPECT_DOUBLE_EQ(mu(1), 0.0);
  EXPECT_DOUBLE_EQ(mu(2), 0.5);
}

TEST(UpdateMu, ZetaZeroKeepsUniformWeights) {
  Eigen::VectorXd d(2);
  d << 1, 100;
  EXPECT_DOUBLE_EQ(mu_from_residuals(d, 0.0)(0), 0.5);
}

TEST(UpdateMu, SmallerResidualGetsLargerWeightAndMatchesGrid) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto p = random_problem(100 + seed);
    update_mu(p.state, p.h);
    const auto& s = p.state;
    EXPECT_NEAR(s.mu.sum(), 1.0, 1e-12);
    EXPECT_TRUE((s.mu.array() > 0).all());
    const double d0 = (s.phiX[0] - s.V[0] * s.U).squaredNorm();
    const double d1 = (s.phiX[1] - s.V[1] * s.U).squaredNorm();
    EXPECT_EQ(d0 < d1, s.mu(0) > s.mu(1));
    double best = 1e300, best_mu = 0;
    for (int i = 1; i < 1000; ++i) {
      const double m = i * 1e-3;
      const double f = std::pow(m, p.h.zeta) * d0 + std::pow(1 - m, p.h.zeta) * d1;
      if (f < best) best = f, best_mu = m;
    }
    EXPECT_LE(std::abs(best_mu - s.mu(0)), 1e-3);
  }
}

TEST(UpdateR, StationaryPointOfSubObjective) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto p = random_problem(200 + seed);
    const Eigen::MatrixXd before = *p.state.R;
    update_R(p.state, p.h);
    auto f = [&](const Eigen::MatrixXd& r) { return dense_objective_R(p.state, p.h, r); };
    EXPECT_LE(relative_gradient(f, before, *p.state.R), 1e-4) << "seed " << seed;
    EXPECT_LE(f(*p.state.R), f(before));
  }
}

TEST(UpdateR, MatchesDenseSimilaritySolve) {
  auto p = random_problem(7);
  p.h.ridge = 0.0;
  const auto& s = p.state;
  const Eigen::MatrixXd S = dense_S(s);
  const Eigen::MatrixXd a = s.C * s.U;
  const double kk = static_cast<double>(s.k());
  Eigen::MatrixXd left = a * a.transpose();
  left.diagonal().array() += p.h.beta + p.h.eta;
  const Eigen::MatrixXd rhs = kk * a * S.transpose() * s.L().transpose() + p.h.beta * s.B * s.L().transpose();
  const Eigen::MatrixXd expected = left.inverse() * rhs * (s.L() * s.L().transpose()).inverse();
  update_R(p.state, p.h);
  EXPECT_LE(rel_frobenius(*p.state.R, expected), 1e-8);
}

TEST(UpdateR, DominantBetaRecoversLabelRegressor) {
  auto p = random_problem(8);
  p.h.beta = 1e8;
  update_R(p.state, p.h);
  const auto& s = p.state;
  const Eigen::MatrixXd lr = s.B * s.L().transpose() * (s.L() * s.L().transpose()).inverse();
  EXPECT_LE(rel_frobenius(*s.R, lr), 1e-5);
}

TEST(UpdateC, StationaryPointOfSubObjective) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto p = random_problem(300 + seed);
    const Eigen::MatrixXd before = p.state.C;
    update_C(p.state, p.h);
    auto f = [&](const Eigen::MatrixXd& c) { return dense_objective_C(p.state, p.h, c); };
    EXPECT_LE(relative_gradient(f, before, p.state.C), 1e-4) << "seed " << seed;
  }
}

TEST(UpdateC, MatchesDenseSimilaritySolve) {
  auto p = random_problem(9);
  p.h.ridge = 0.0;
  const auto& s = p.state;
  const Eigen::MatrixXd S = dense_S(s);
  const Eigen::MatrixXd g = *s.R * s.L();
  const double kk = static_cast<double>(s.k());
  Eigen::MatrixXd left = g * g.transpose();
  left.diagonal().array() += p.h.alpha;
  const Eigen::MatrixXd mid = kk * g * S * s.U.transpose() + p.h.alpha * s.B * s.U.transpose();
  const Eigen::MatrixXd expected = left.inverse() * mid * (s.U * s.U.transpose()).inverse();
  update_C(p.state, p.h);
  EXPECT_LE(rel_frobenius(p.state.C, expected), 1e-8);
}

TEST(UpdateC, DominantAlphaGivesLeastSquaresFit) {
  auto p = random_problem(10);
  p.h.alpha = 1e9;
  update_C(p.state, p.h);
  const auto& s = p.state;
  const Eigen::MatrixXd ls = s.B * s.U.transpose() * (s.U * s.U.transpose()).inverse();
  EXPECT_LE(rel_frobenius(s.C, ls), 1e-5);
}

TEST(UpdateB, SignWithPositiveTieBreak) {
  auto p = random_problem(11, 3, 1, 2, 2, 2);
  auto& s = p.state;
  p.h.alpha = 1.0;
  p.h.beta = 1.0;
  *s.R = Eigen::MatrixXd::Zero(1, 2);
  s.C = Eigen::MatrixXd::Zero(1, 2);
  s.C(0, 0) = 1.0;
  s.U = Eigen::MatrixXd::Zero(2, 3);
  s.U(0, 0) = 0.3;
  s.U(0, 1) = -0.2;
  update_B(s, p.h);
  EXPECT_EQ(s.B(0, 0), 1.0);
  EXPECT_EQ(s.B(0, 1), -1.0);
  EXPECT_EQ(s.B(0, 2), 1.0);
}

TEST(UpdateB, SignMaximizesTraceExhaustively) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto p = random_problem(400 + seed, 3, 2, 2, 4, 2);
    update_B(p.state, p.h);
    const auto& s = p.state;
    const Eigen::MatrixXd target = p.h.alpha * s.C * s.U + p.h.beta * (*s.R * s.L());
    double best = -1e300;
    for (int mask = 0; mask < (1 << 6); ++mask) {
      Eigen::MatrixXd b(2, 3);
      for (int e = 0; e < 6; ++e) b(e % 2, e / 2) = (mask >> e) & 1 ? 1.0 : -1.0;
      best = std::max(best, (target.array() * b.array()).sum());
    }
    EXPECT_DOUBLE_EQ((target.array() * s.B.array()).sum(), best);
  }
}

TEST(UpdateB, RelaxedVariantKeepsWeightedAverage) {
  auto p = random_problem(12, 20, 4, 2, 5, 2, Variant::relaxed_B);
  update_B(p.state, p.h);
  const auto& s = p.state;
  const Eigen::MatrixXd expected = (p.h.alpha * s.C * s.U + p.h.beta * (*s.R * s.L())) / (p.h.alpha + p.h.beta);
  EXPECT_LE(rel_frobenius(s.B, expected), 1e-14);
}

TEST(UpdateB, MajorizeMinimizeStepNeverIncreasesObjectiveWithoutEmbedding) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto p = random_problem(450 + seed, 40, 8, 3, 10, 2, Variant::no_multisemantic);
    const double before = dense_objective(p.state, p.h);
    update_B(p.state, p.h);
    EXPECT_LE(dense_objective(p.state, p.h), before * (1 + 1e-12));
    EXPECT_TRUE((p.state.B.array().abs() == 1.0).all());
  }
}

TEST(UpdateU, StationaryPointOfSubObjective) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto p = random_problem(500 + seed);
    const Eigen::MatrixXd before = p.state.U;
    update_U(p.state, p.h);
    auto f = [&](const Eigen::MatrixXd& u) { return dense_objective_U(p.state, p.h, u); };
    EXPECT_LE(relative_gradient(f, before, p.state.U), 1e-4) << "seed " << seed;
  }
}

TEST(UpdateU, LeastSquaresIdentityLimit) {
  auto p = random_problem(13, 30, 4, 2, 6, 1);
  p.h.alpha = p.h.beta = p.h.eta = 0.0;
  p.h.ridge = 0.0;
  auto& s = p.state;
  s.V[0] = Eigen::MatrixXd::Identity(6, 6);
  *s.R = Eigen::MatrixXd::Zero(4, 2);
  update_U(s, p.h);
  EXPECT_LE((s.U - s.phiX[0]).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(UpdateU, MatchesDenseSimilaritySolve) {
  auto p = random_problem(14);
  p.h.ridge = 0.0;
  const auto& s = p.state;
  const Eigen::MatrixXd S = dense_S(s);
  const Eigen::MatrixXd g = *s.R * s.L();
  const double kk = static_cast<double>(s.k());
  Eigen::MatrixXd lhs = s.C.transpose() * g * g.transpose() * s.C + p.h.alpha * s.C.transpose() * s.C;
  lhs.diagonal().array() += p.h.eta;
  Eigen::MatrixXd rhs = kk * s.C.transpose() * g * S + p.h.alpha * s.C.transpose() * s.B;
  for (Eigen::Index m = 0; m < 2; ++m) {
    const double w = std::pow(s.mu(m), p.h.zeta);
    lhs += w * s.V[m].transpose() * s.V[m];
    rhs += w * s.V[m].transpose() * s.phiX[m];
  }
  const Eigen::MatrixXd expected = lhs.inverse() * rhs;
  update_U(p.state, p.h);
  EXPECT_LE(rel_frobenius(p.state.U, expected), 1e-8);
}

TEST(Procrustes, IdentityAndPositiveDiagonal) {
  EXPECT_LE((procrustes(Eigen::MatrixXd::Identity(4, 4)) - Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-14);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 2;
  d(1, 1) = 3;
  EXPECT_LE((procrustes(d) - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-14);
}

TEST(Procrustes, DominatesRandomOrthogonalSamples) {
  Rng rng(15);
  const Eigen::MatrixXd o = gaussian_matrix(5, 5, 1.0, rng);
  const Eigen::MatrixXd v = procrustes(o);
  EXPECT_LE(orthogonality_residual(v), 1e-8);
  const double best = (o * v.transpose()).trace();
  for (int t = 0; t < 1000; ++t) {
    const Eigen::MatrixXd r = random_orthogonal(5, 5, rng);
    EXPECT_GE(best + 1e-12, (o * r.transpose()).trace());
  }
}

TEST(Procrustes, RejectsNonFinite) {
  Eigen::MatrixXd o = Eigen::MatrixXd::Identity(3, 3);
  o(1, 2) = std::nan("");
  EXPECT_THROW(procrustes(o), ValueError);
}

TEST(UpdateV, OrthogonalAndMaximizesAugmentedTrace) {
  auto p = random_problem(16);
  auto& s = p.state;
  update_V(s, p.h, 0);
  EXPECT_LE(orthogonality_residual(s.V[0]), 1e-8);
  const double w = std::pow(s.mu(0), p.h.zeta);
  const Eigen::MatrixXd o = 2 * w * s.phiX[0] * s.U.transpose() - w * s.K[0] * s.U * s.U.transpose() +
                            p.h.lambda * s.K[0] - s.Lambda[0];
  const double best = (o * s.V[0].transpose()).trace();
  Rng rng(17);
  for (int t = 0; t < 200; ++t)
    EXPECT_GE(best + 1e-9 * std::abs(best), (o * random_orthogonal(10, 10, rng).transpose()).trace());
}

// The K block of the augmented V-step function:
//   w tr(K U U^T V^T) + lambda/2 |V - K + Lambda/lambda|^2.
double augmented_in_K(const TrainState& s, const Hyperparams& h, const Eigen::MatrixXd& k) {
  const double w = std::pow(s.mu(0), h.zeta);
  return w * (k * s.U * s.U.transpose() * s.V[0].transpose()).trace() +
         0.5 * h.lambda * (s.V[0] - k + s.Lambda[0] / h.lambda).squaredNorm();
}

TEST(UpdateK, MinimizesAugmentedFunctionOverOrthogonalK) {
  auto p = random_problem(18);
  p.h.lambda = 0.5;
  auto& s = p.state;
  update_K(s, p.h, 0);
  EXPECT_LE(orthogonality_residual(s.K[0]), 1e-8);
  const double at = augmented_in_K(s, p.h, s.K[0]);
  Rng rng(19);
  for (int t = 0; t < 500; ++t)
    EXPECT_LE(at, augmented_in_K(s, p.h, random_orthogonal(10, 10, rng)) + 1e-9 * std::abs(at));
}

TEST(UpdateK, DominantLambdaTracksV) {
  auto p = random_problem(20);
  p.h.lambda = 1e8;
  auto& s = p.state;
  s.Lambda[0].setZero();
  update_K(s, p.h, 0);
  EXPECT_LE((s.K[0] - s.V[0]).norm(), 1e-6);
}

TEST(UpdateLambda, DualAscentRule) {
  auto p = random_problem(21, 10, 2, 2, 3, 1);
  auto& s = p.state;
  s.K[0] = s.V[0];
  const Eigen::MatrixXd before = s.Lambda[0];
  update_lambda(s, p.h, 0);
  EXPECT_EQ(s.Lambda[0], before);

  s.Lambda[0].setZero();
  p.h.lambda = 2.0;
  s.V[0] = Eigen::MatrixXd::Identity(3, 3) * 2.0;
  s.K[0] = Eigen::MatrixXd::Identity(3, 3);
  update_lambda(s, p.h, 0);
  EXPECT_EQ(s.Lambda[0], 2.0 * Eigen::MatrixXd::Identity(3, 3));
  update_lambda(s, p.h, 0);
  EXPECT_EQ(s.Lambda[0], 4.0 * Eigen::MatrixXd::Identity(3, 3));
}

TEST(Objective, ZeroStateHandExpansion) {
  const Eigen::Index n = 6, k = 4, q = 3;
  std::vector<Eigen::MatrixXd> phi = {Eigen::MatrixXd::Zero(q, n), Eigen::MatrixXd::Zero(q, n)};
  LabelMatrix labels(Eigen::MatrixXd::Ones(1, n));
  Hyperparams h;
  h.k = k;
  TrainState s = init_state(phi, labels, h);
  s.U.setZero();
  s.C.setZero();
  s.R->setZero();
  s.B.setOnes();
  const double S2 = static_cast<double>(n * n);
  const double expected = k * k * S2 + h.alpha * k * n + h.beta * k * n;
  EXPECT_NEAR(objective(s, h), expected, 1e-9 * expected);
}

TEST(Objective, MatchesDenseEvaluation) {
  for (Variant v : {Variant::full, Variant::no_multisemantic, Variant::relaxed_B}) {
    for (bool multi : {false, true}) {
      auto p = random_problem(22, 40, 8, 3, 10, 2, v, multi);
      const double dense = dense_objective(p.state, p.h);
      EXPECT_NEAR(objective(p.state, p.h), dense, 1e-8 * dense) << to_string(v);
    }
  }
}

TEST(Objective, NoMultisemanticExcludesLabelTerms) {
  auto p = random_problem(23, 30, 4, 2, 5, 2, Variant::no_multisemantic);
  const double base = objective(p.state, p.h);
  p.h.beta = 1e6;
  EXPECT_DOUBLE_EQ(objective(p.state, p.h), base);
}

TEST(Factored, SimilarityProductsMatchDense) {
  auto p = random_problem(24, 150, 8, 4, 10, 2, Variant::full, true);
  const auto& s = p.state;
  const Eigen::MatrixXd S = dense_S(s);
  const Eigen::MatrixXd a = s.C * s.U;
  EXPECT_LE(rel_frobenius(times_S_Lt(a, s.sim), a * S * s.L().transpose()), 1e-10);
  EXPECT_LE(rel_frobenius(right_multiply_S(a, s.sim), a * S), 1e-10);
  EXPECT_NEAR(s.sim.squared_norm(), S.squaredNorm(), 1e-10 * S.squaredNorm());
}

TEST(TrainStep1, DeterministicAndMonotoneBeforeVBlock) {
  Rng rng(25);
  SynthSpec spec;
  spec.n = 200;
  spec.noise = 0.3;
  spec.seed = 4;
  const Dataset ds = make_synthetic(spec);
  PipelineConfig cfg;
  cfg.hyper.k = 16;
  cfg.hyper.max_iter = 8;
  cfg.hyper.tol = 0;
  cfg.anchors = 50;
  cfg.options.record_substeps = true;
  const auto a = train_model(ds, cfg);
  const auto b = train_model(ds, cfg);
  EXPECT_EQ(a.codes, b.codes);
  EXPECT_EQ(a.trace.iterations(), 8u);
  for (const auto& sub : a.trace.substeps)
    for (std::size_t i = 1; i < sub.size(); ++i)
      EXPECT_LE(sub[i], sub[i - 1] + 1e-6 * std::abs(sub[i - 1]));
  for (double v : a.trace.normalized) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(TrainStep1, EveryVariantProducesSignCodes) {
  SynthSpec spec;
  spec.n = 120;
  spec.c = 3;
  spec.noise = 0.2;
  const Dataset ds = make_synthetic(spec);
  for (Variant v : {Variant::full, Variant::no_kernel, Variant::no_multisemantic, Variant::relaxed_B}) {
    PipelineConfig cfg;
    cfg.hyper.k = 8;
    cfg.hyper.max_iter = 5;
    cfg.variant = v;
    cfg.anchors = 40;
    const auto t = train_model(ds, cfg);
    EXPECT_TRUE((t.codes.array().abs() == 1.0).all()) << to_string(v);
    EXPECT_EQ(t.trace.variant, v);
    EXPECT_EQ(t.codes.cols(), 120);
  }
}

TEST(Hyperparams, Validation) {
  Hyperparams h;
  h.zeta = 1.5;
  EXPECT_THROW(h.validate(), ValueError);
  h.zeta = 0;
  EXPECT_NO_THROW(h.validate());
  h.lambda = 0;
  EXPECT_THROW(h.validate(), ValueError);
}
