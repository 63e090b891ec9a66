#include "ppcc/graph.hpp"
#include "ppcc/linalg.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace ppcc;

TEST(CommGraph, AddsSelfLoops) {
  const CommGraph g(3, {{1}, {}, {0, 1}});
  EXPECT_EQ(g.neighbors(0), (std::vector<Index>{0, 1}));
  EXPECT_EQ(g.neighbors(1), (std::vector<Index>{1}));
  EXPECT_EQ(g.neighbors(2), (std::vector<Index>{0, 1, 2}));
  EXPECT_TRUE(g.receives_from(2, 0));
  EXPECT_FALSE(g.receives_from(0, 2));
  EXPECT_EQ(g.out_neighbors(1), (std::vector<Index>{0, 2}));
}

TEST(CommGraph, RejectsBadIndices) {
  EXPECT_THROW(CommGraph(2, {{2}, {}}), ConfigError);
  EXPECT_THROW(CommGraph(2, {{}}), ConfigError);
}

TEST(CommGraph, DirectedCycleOrientation) {
  const CommGraph g = directed_cycle(4);
  // Agent i receives from agent i - 1.
  EXPECT_TRUE(g.receives_from(1, 0));
  EXPECT_TRUE(g.receives_from(0, 3));
  EXPECT_FALSE(g.receives_from(0, 1));
  EXPECT_FALSE(g.is_undirected());
  EXPECT_TRUE(g.is_strongly_connected());
}

TEST(Weights, CompleteGraphUniform) {
  const StochasticMatrix w = build_weights(complete_graph(4), WeightRule::uniform);
  EXPECT_TRUE(w.matrix().isApprox(MatrixXd::Constant(4, 4, 0.25)));
  EXPECT_NEAR(second_eigenvalue(w), 0.0, 1e-12);
}

TEST(Weights, DirectedCycleHalves) {
  const StochasticMatrix w = build_weights(directed_cycle(4), WeightRule::uniform);
  for (Index i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(w(i, i), 0.5);
    EXPECT_DOUBLE_EQ(w(i, (i + 3) % 4), 0.5);
    EXPECT_DOUBLE_EQ(w.matrix().row(i).sum(), 1.0);
  }
  // Circulant eigenvalues (1 + omega^k) / 2; the largest non-unit magnitude is |1 + i| / 2.
  EXPECT_NEAR(second_eigenvalue(w), std::sqrt(2.0) / 2.0, 1e-12);
}

TEST(Weights, MetropolisOnPath) {
  const StochasticMatrix w = build_weights(path_graph(3), WeightRule::metropolis);
  MatrixXd expected(3, 3);
  expected << 2.0 / 3, 1.0 / 3, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 1.0 / 3, 2.0 / 3;
  EXPECT_LE((w.matrix() - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_TRUE(w.is_doubly_stochastic());
}

TEST(Weights, SparsityMatchesNeighborSets) {
  test::Draws d(3);
  for (int trial = 0; trial < 20; ++trial) {
    const CommGraph g = test::random_connected_graph(d, d.integer(2, 8));
    for (auto rule : {WeightRule::uniform, WeightRule::metropolis}) {
      const StochasticMatrix w = build_weights(g, rule);
      for (Index i = 0; i < g.size(); ++i)
        for (Index j = 0; j < g.size(); ++j) EXPECT_EQ(w(i, j) > 0.0, g.receives_from(i, j));
    }
  }
}

TEST(Weights, DisconnectedUndirectedGraphRejected) {
  const CommGraph g(4, {{1}, {0}, {3}, {2}});
  EXPECT_THROW(build_weights(g, WeightRule::uniform), TopologyError);
}

TEST(Weights, RepeatedUnitEigenvalueRejected) {
  EXPECT_THROW(second_eigenvalue(MatrixXd::Identity(3, 3)), TopologyError);
  EXPECT_DOUBLE_EQ(second_eigenvalue(MatrixXd::Identity(1, 1)), 0.0);
}

TEST(StochasticMatrix, ValidatesRows) {
  MatrixXd m(2, 2);
  m << 0.5, 0.6, 0.5, 0.5;
  EXPECT_THROW(StochasticMatrix{m}, ConfigError);
  m << 1.5, -0.5, 0.5, 0.5;
  EXPECT_THROW(StochasticMatrix{m}, ConfigError);
}

TEST(PrivacyWeights, Validation) {
  EXPECT_THROW((PrivacyWeights{0.7, {0.5}}.validate()), ConfigError);
  EXPECT_THROW((PrivacyWeights{0.1, {1.0}}.validate()), ConfigError);
  EXPECT_THROW((PrivacyWeights{0.0, {0.5}}.validate()), ConfigError);
  EXPECT_NO_THROW((PrivacyWeights{0.1, {0.5}}.validate()));
}

TEST(PrivacyWeights, SeededDrawsInRange) {
  const PrivacyWeights a = random_privacy_weights(50, 0.2, 9);
  const PrivacyWeights b = random_privacy_weights(50, 0.2, 9);
  EXPECT_EQ(a.pi, b.pi);
  for (double p : a.pi) {
    EXPECT_GE(p, 0.1);
    EXPECT_LE(p, 0.9);
  }
  EXPECT_NE(a.pi, random_privacy_weights(50, 0.2, 10).pi);
}

TEST(Augmented, SingleAgentNearUnitPi) {
  // pi must stay inside (0, 1); the Pi = I blocks are approached from below.
  const AugmentedWeights aug = build_augmented(StochasticMatrix(MatrixXd::Identity(1, 1)), {0.1, {1.0 - 1e-9}});
  MatrixXd expected(2, 2);
  expected << 0.9, 0.1, 0.1, 0.9;
  EXPECT_LE((aug.w_tilde - expected).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Augmented, FourRobotRowSums) {
  const StochasticMatrix w = build_weights(directed_cycle(4), WeightRule::uniform);
  const AugmentedWeights aug = build_augmented(w, test::four_robot_privacy());
  EXPECT_EQ(aug.w_tilde.rows(), 8);
  EXPECT_EQ(aug.v.rows(), 8);
  EXPECT_EQ(aug.v.cols(), 4);
  for (Index i = 0; i < 8; ++i) EXPECT_NEAR(aug.w_tilde.row(i).sum(), 1.0, 1e-12);
  // The uniform directed cycle is doubly stochastic, so columns sum to one as well.
  for (Index j = 0; j < 8; ++j) EXPECT_NEAR(aug.w_tilde.col(j).sum(), 1.0, 1e-12);
  EXPECT_NEAR(aug.v(0, 0), 0.13, 1e-15);
  EXPECT_NEAR(aug.v(4, 0), 0.87, 1e-15);
  EXPECT_GE(aug.w_tilde.minCoeff(), 0.0);
  EXPECT_NEAR(second_eigenvalue(aug.w_tilde), 0.9858365526438866, 1e-9);
}

TEST(Augmented, SelectorNorm) {
  test::Draws d(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = d.integer(1, 8);
    PrivacyWeights pw{d.uniform(0.01, 0.66), {}};
    double expected = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double p = d.uniform(0.01, 0.99);
      pw.pi.push_back(p);
      expected = std::max(expected, p * p + (1 - p) * (1 - p));
    }
    const AugmentedWeights aug = build_augmented(StochasticMatrix(MatrixXd::Constant(n, n, 1.0 / n)), pw);
    const double v2 = std::pow(norm2(aug.v), 2);
    EXPECT_NEAR(v2, expected, 1e-12);
    EXPECT_GT(v2, 0.5);
    EXPECT_LT(v2, 1.0);
  }
}

TEST(Augmented, UnitPiEigenvaluesFollowClosedForm) {
  // lambda(W) = 1 branch with eps = 0.1 gives the pair {1.0, 0.8}.
  const auto [hi, lo] = unit_pi_augmented_eigenvalues(1.0, 0.1);
  EXPECT_NEAR(std::abs(hi - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(lo - 0.8), 0.0, 1e-15);

  test::Draws d(17);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = d.integer(2, 7);
    const double eps = d.uniform(0.01, 0.66);
    const CommGraph g = trial % 2 ? test::random_connected_graph(d, n) : directed_cycle(n);
    const StochasticMatrix w = build_weights(g, WeightRule::uniform);
    const MatrixXd eye = MatrixXd::Identity(n, n);
    MatrixXd wt(2 * n, 2 * n);
    wt << w.matrix() - eps * eye, eps * eye, eps * eye, (1 - eps) * eye;
    std::vector<Complex> expected;
    for (Complex lambda : eigenvalues(w.matrix()).eigenvalues) {
      const auto [a, b] = unit_pi_augmented_eigenvalues(lambda, eps);
      expected.push_back(a);
      expected.push_back(b);
    }
    // Every closed-form eigenvalue appears in the numerical spectrum.
    const auto actual = eigenvalues(wt).eigenvalues;
    for (Complex e : expected) {
      double best = 1e9;
      for (Complex a : actual) best = std::min(best, std::abs(a - e));
      EXPECT_LT(best, 1e-7) << "trial " << trial;
    }
  }
}

TEST(Augmented, UnitEigenvalueIsSimpleAndGapExceedsPlain) {
  test::Draws d(29);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = d.integer(2, 8);
    const CommGraph g = test::random_connected_graph(d, n);
    const StochasticMatrix w = build_weights(g, trial % 2 ? WeightRule::metropolis : WeightRule::uniform);
    PrivacyWeights pw{d.uniform(0.001, 0.666), {}};
    for (Index i = 0; i < n; ++i) pw.pi.push_back(d.uniform(0.001, 0.999));
    const AugmentedWeights aug = build_augmented(w, pw);
    double lt = 0.0;
    ASSERT_NO_THROW(lt = second_eigenvalue(aug.w_tilde));
    EXPECT_GT(lt, second_eigenvalue(w)) << "trial " << trial;
    EXPECT_LT(lt, 1.0);
  }
}

TEST(Augmented, ConsensusLimitIsAverage) {
  test::Draws d(41);
  const Index n = 5, dim = 3;
  const CommGraph g = test::random_connected_graph(d, n);
  const StochasticMatrix w = build_weights(g, WeightRule::metropolis);
  PrivacyWeights pw{0.3, {}};
  for (Index i = 0; i < n; ++i) pw.pi.push_back(d.uniform(0.1, 0.9));
  const AugmentedWeights aug = build_augmented(w, pw);
  const VectorXd x = d.gaussian(n * dim, 1);
  MatrixXd recombine(n, 2 * n);
  recombine << MatrixXd::Identity(n, n), MatrixXd::Identity(n, n);
  const MatrixXd op = kron(MatrixXd(recombine * matrix_power(aug.w_tilde, 2000) * aug.v), MatrixXd::Identity(dim, dim));
  const VectorXd z = op * x;
  VectorXd mean = VectorXd::Zero(dim);
  for (Index i = 0; i < n; ++i) mean += x.segment(i * dim, dim) / static_cast<double>(n);
  for (Index i = 0; i < n; ++i) EXPECT_LE((z.segment(i * dim, dim) - mean).norm(), 1e-8);
}

TEST(MaxConsensus, FloodsNetworkMaximum) {
  const CommGraph g = path_graph(5);
  const auto out = max_consensus(g, {1, 7, 2, 3, 4});
  for (double v : out) EXPECT_EQ(v, 7);
  const auto cyc = max_consensus(directed_cycle(4), {0, 0, 0, 9});
  for (double v : cyc) EXPECT_EQ(v, 9);
}
