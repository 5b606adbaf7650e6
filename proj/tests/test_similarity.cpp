#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "a2lh/similarity.hpp"
#include "test_support.hpp"

using namespace a2lh;
using namespace a2lh::testing;

namespace {

LabelMatrix labels_from(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return LabelMatrix(m);
}

LabelMatrix seeded_labels(Eigen::Index c, Eigen::Index n, std::uint64_t seed, bool multilabel) {
  Rng rng(seed);
  return random_labels(c, n, rng, multilabel);
}

}  // namespace

TEST(DenseSimilarity, HandExamples) {
  EXPECT_EQ(dense_similarity(labels_from({{1, 1}, {0, 0}}))(0, 1), 1.0);
  EXPECT_EQ(dense_similarity(labels_from({{1, 0}, {0, 1}}))(0, 1), -1.0);
  EXPECT_EQ(dense_similarity(labels_from({{1, 1}, {1, 1}}))(0, 1), 3.0);
}

TEST(DenseSimilarity, SingleLabelIsSymmetricSigns) {
  const LabelMatrix l = seeded_labels(4, 30, 3, false);
  const Eigen::MatrixXd s = dense_similarity(l);
  EXPECT_EQ(s, s.transpose());
  EXPECT_TRUE((s.array().abs() == 1.0).all());
  EXPECT_TRUE((s.diagonal().array() == 1.0).all());
}

TEST(DenseSimilarity, RefusesLargeN) {
  const LabelMatrix l(Eigen::MatrixXd::Ones(1, 2001));
  EXPECT_THROW(dense_similarity(l), ValueError);
}

TEST(RightMultiplyS, ZeroStaysZero) {
  const LabelMatrix l = seeded_labels(3, 10, 1, false);
  EXPECT_EQ(right_multiply_S(Eigen::MatrixXd::Zero(2, 10), SimilarityFactor(l)), Eigen::MatrixXd::Zero(2, 10));
}

TEST(RightMultiplyS, SingleClassExample) {
  const LabelMatrix l(Eigen::MatrixXd::Ones(1, 3));
  Eigen::MatrixXd m(1, 3);
  m << 1, 0, 0;
  EXPECT_EQ(right_multiply_S(m, SimilarityFactor(l)), Eigen::MatrixXd::Ones(1, 3));
}

TEST(RightMultiplyS, MatchesDenseOracle) {
  for (bool multi : {false, true}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Eigen::Index n = 50 + 45 * static_cast<Eigen::Index>(seed);
      const LabelMatrix l = seeded_labels(5, n, seed, multi);
      std::mt19937_64 rng(seed);
      const Eigen::MatrixXd m = gaussian_matrix(4, n, 1.0, rng);
      const Eigen::MatrixXd dense = m * dense_similarity(l);
      EXPECT_LE(rel_frobenius(right_multiply_S(m, SimilarityFactor(l)), dense), 1e-10);
    }
  }
}

TEST(RightMultiplyS, ShapeMismatch) {
  const LabelMatrix l = seeded_labels(2, 5, 1, false);
  EXPECT_THROW(right_multiply_S(Eigen::MatrixXd::Zero(2, 4), SimilarityFactor(l)), ShapeError);
}

TEST(SimilarityFactor, SquaredNormMatchesDense) {
  for (bool multi : {false, true}) {
    const LabelMatrix l = seeded_labels(6, 120, 3, multi);
    const double dense = dense_similarity(l).squaredNorm();
    EXPECT_NEAR(SimilarityFactor(l).squared_norm(), dense, 1e-10 * dense);
  }
}

TEST(LabelGram, Examples) {
  Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(2, 2);
  diag.diagonal() << 3, 2;
  EXPECT_EQ(label_gram(labels_from({{1, 1, 1, 0, 0}, {0, 0, 0, 1, 1}})), diag);

  Eigen::MatrixXd expected(2, 2);
  expected << 2, 1, 1, 1;
  EXPECT_EQ(label_gram(labels_from({{1, 1}, {1, 0}})), expected);
}

TEST(LabelGram, RidgeMakesSingularGramInvertible) {
  // duplicate label rows: rank-deficient gram
  const LabelMatrix l = labels_from({{1, 0, 1}, {1, 0, 1}, {0, 1, 0}});
  const Eigen::MatrixXd g0 = label_gram(l);
  EXPECT_LT(std::abs(g0.determinant()), 1e-12);
  const Eigen::MatrixXd g = label_gram(l, 1e-6);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
  EXPECT_EQ(ldlt.info(), Eigen::Success);
  EXPECT_GT(ldlt.vectorD().minCoeff(), 0.0);
  EXPECT_LE((g * ldlt.solve(Eigen::MatrixXd::Identity(3, 3)) - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-6);
}

TEST(RightMultiplyS, RuntimeGrowsLinearly) {
  // least-squares slope of log(time) against log(n) over n = 1e3, 1e4, 1e5;
  // linear cost gives 1, anything quadratic gives 2
  std::vector<double> log_n;
  std::vector<double> log_t;
  for (Eigen::Index n : {Eigen::Index{1000}, Eigen::Index{10000}, Eigen::Index{100000}}) {
    const LabelMatrix l = seeded_labels(10, n, 1, false);
    const SimilarityFactor sf(l);
    Rng rng(2);
    const Eigen::MatrixXd m = gaussian_matrix(16, n, 1.0, rng);
    std::vector<double> t;
    const int reps = static_cast<int>(std::max<Eigen::Index>(5, 300000 / n));
    for (int r = 0; r < reps; ++r) {
      const auto start = std::chrono::steady_clock::now();
      const Eigen::MatrixXd out = right_multiply_S(m, sf);
      t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      ASSERT_EQ(out.cols(), n);
    }
    std::nth_element(t.begin(), t.begin() + static_cast<long>(t.size() / 2), t.end());
    log_n.push_back(std::log(static_cast<double>(n)));
    log_t.push_back(std::log(t[t.size() / 2]));
  }
  const double mx = (log_n[0] + log_n[1] + log_n[2]) / 3.0;
  const double my = (log_t[0] + log_t[1] + log_t[2]) / 3.0;
  double sxy = 0.0;
  double sxx = 0.0;
  for (int i = 0; i < 3; ++i) {
    sxy += (log_n[i] - mx) * (log_t[i] - my);
    sxx += (log_n[i] - mx) * (log_n[i] - mx);
  }
  const double slope = sxy / sxx;
  EXPECT_LT(slope, 2.0);
  EXPECT_GT(slope, 0.5);
}
