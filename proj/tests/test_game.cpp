#include <pmids/game.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace pmids;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// ‖M_a W Wᵀ v − M_a v‖ over random v in the difference span.
double basis_defect(const LinearGame& g, std::mt19937_64& rng) {
  const Matrix U = g.param_set().difference_basis();
  const Matrix& W = g.basis();
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vector v = U * oracle::random_vector(rng, U.cols());
    for (int a = 0; a < g.k(); ++a)
      worst = std::max(worst, (g.feedback(a) * W * (W.transpose() * v) - g.feedback(a) * v).norm());
  }
  return worst;
}

}  // namespace

TEST(Game, LinearBanditIdentity) {
  const auto g = build_linear_bandit({vec({1, 0}), vec({0, 1})});
  EXPECT_EQ(g.k(), 2);
  EXPECT_EQ(g.m(), 1);
  for (int a = 0; a < 2; ++a) EXPECT_EQ((g.feedback(a).row(0).transpose() - g.feature(a)).norm(), 0.0);
  EXPECT_TRUE(g.bandit_feedback());
  EXPECT_EQ(g.basis_rank(), 2);
  EXPECT_FALSE(g.rescaled());
}

TEST(Game, HeteroscedasticBandit) {
  const auto g = build_linear_bandit({vec({1, 0})}, {}, {2.0});
  EXPECT_NEAR(g.feedback(0)(0, 0), 0.5, 1e-15);
  EXPECT_EQ(g.noise_sigma(), 1.0);
}

TEST(Game, RescalingKeepsRewardOrderAndObservations) {
  std::mt19937_64 rng(3);
  std::vector<Vector> feats;
  for (int i = 0; i < 6; ++i) feats.push_back(3.0 * oracle::random_vector(rng, 3));
  feats[0] = vec({3, 0, 0});
  const auto g = build_linear_bandit(feats);
  EXPECT_TRUE(g.rescaled());
  for (int a = 0; a < g.k(); ++a) EXPECT_LE(g.feature(a).norm(), 1.0 + 1e-12);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector theta = oracle::random_vector(rng, 3);
    const Vector internal = g.to_internal(theta);
    for (int a = 0; a < g.k(); ++a) {
      EXPECT_NEAR(g.reward(a, internal), feats[a].dot(theta), 1e-12);
      EXPECT_NEAR(g.feedback(a).row(0).dot(internal), feats[a].dot(theta), 1e-12);
    }
  }
}

TEST(Game, Dueling) {
  GroundSet gs{{vec({1, 0}), vec({0, 1})}, {}};
  const auto g = build_dueling(gs);
  EXPECT_EQ(g.k(), 4);
  // action (1,2) is index 1
  EXPECT_LE((g.feature(1) * g.scale() - vec({1, 1})).norm(), 1e-15);
  EXPECT_LE((g.feedback(1).row(0).transpose() * g.scale() - vec({1, -1})).norm(), 1e-15);
  EXPECT_EQ(g.pairs[1], std::make_pair(0, 1));
  for (int a = 0; a < g.k(); ++a)
    if (g.pairs[a].first == g.pairs[a].second) EXPECT_EQ(g.feedback(a).norm(), 0.0);
  GroundSet three{{vec({1, 0}), vec({0, 1}), vec({1, 1})}, {}};
  EXPECT_EQ(build_dueling(three).k(), 9);
  EXPECT_THROW(build_dueling(GroundSet{{vec({1, 0})}, {}}), ConfigError);
}

TEST(Game, GraphFeedback) {
  std::vector<Vector> f = {vec({1, 0, 0}), vec({0, 1, 0}), vec({0, 0, 1})};
  GroundSet loops{f, {{0, 0}, {1, 1}, {2, 2}}};
  const auto g = build_graph_feedback(loops);
  const auto lb = build_linear_bandit(f);
  for (int a = 0; a < 3; ++a) {
    EXPECT_EQ((g.feature(a) - lb.feature(a)).norm(), 0.0);
    EXPECT_EQ((g.feedback(a) - lb.feedback(a)).norm(), 0.0);
  }
  GroundSet full{f, {}};
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c) full.edges.emplace_back(a, c);
  const auto gf = build_graph_feedback(full);
  EXPECT_EQ(gf.m(), 3);
  for (int a = 0; a < 3; ++a) EXPECT_EQ((gf.feature(a) - lb.feature(a)).norm(), 0.0);
  GroundSet star{f, {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 0}, {2, 0}}};
  const auto gs = build_graph_feedback(star);
  EXPECT_EQ(gs.m(), 3);
  EXPECT_EQ(gs.feedback_rows(0), 3);
  EXPECT_EQ(gs.feedback_rows(1), 2);
  EXPECT_EQ(gs.feedback(1).row(2).norm(), 0.0);
  GroundSet bad{f, {{0, 5}}};
  EXPECT_THROW(build_graph_feedback(bad), ConfigError);
}

TEST(Game, GraphDueling) {
  std::vector<Vector> f = {vec({1, 0}), vec({0, 1}), vec({-1, 0})};
  GroundSet path{f, {{0, 1}, {1, 2}}};
  const auto g = build_graph_dueling(path);
  EXPECT_EQ(g.k(), 2);
  EXPECT_EQ(g.pairs[1], std::make_pair(1, 2));
  EXPECT_THROW(build_graph_dueling(GroundSet{f, {}}), ConfigError);
}

TEST(Game, FinitePmEmbedding) {
  const auto g = build_dynamic_pricing({1, 2, 3}, 2.0);
  Matrix R(3, 3);
  R << 0, -1, -2, -2, 0, -1, -2, -2, 0;
  for (int a = 0; a < 3; ++a) EXPECT_LE((g.feature(a) * g.scale() - R.row(a).transpose()).norm(), 1e-12);
  EXPECT_EQ(g.noise_sigma(), 2.0);
  EXPECT_EQ(g.param_set().kind(), ParameterSet::Kind::simplex);
  // Signals: row 1 always buys, row 3 buys only at the top value.
  Eigen::MatrixXi expect(3, 3);
  expect << 0, 0, 0, 1, 0, 0, 1, 1, 0;
  EXPECT_EQ(g.finite_pm->signals, expect);
  for (int a = 0; a < 3; ++a) {
    const Matrix S = g.feedback(a) * g.scale();
    for (int x = 0; x < 3; ++x) EXPECT_NEAR(S.col(x).sum(), 1.0, 1e-12);
  }
  EXPECT_LE(g.basis_rank(), 2);
  const auto bern = build_bernoulli_bandit(3);
  EXPECT_EQ(bern.d(), 8);
  EXPECT_EQ(bern.k(), 3);
  Eigen::MatrixXi bad = Eigen::MatrixXi::Constant(3, 3, 4);
  EXPECT_THROW(embed_finite_pm(R, bad, 2), ConfigError);
}

TEST(Game, BasisValidForEveryBuilder) {
  std::mt19937_64 rng(5);
  std::vector<Vector> f;
  for (int i = 0; i < 4; ++i) f.push_back(oracle::random_vector(rng, 3));
  // Features in a 2-dim subspace for the dueling case.
  std::vector<Vector> flat;
  for (int i = 0; i < 4; ++i) flat.push_back(vec({oracle::random_vector(rng, 1)(0), oracle::random_vector(rng, 1)(0), 0.0}));
  std::vector<LinearGame> games = {
      build_linear_bandit(f),
      build_dueling(GroundSet{flat, {}}),
      build_graph_feedback(GroundSet{f, {{0, 0}, {0, 1}, {2, 3}}}),
      build_graph_dueling(GroundSet{f, {{0, 1}, {1, 2}, {2, 3}}}),
      build_dynamic_pricing({1, 2, 3}, 2.0),
      build_bernoulli_bandit(2),
  };
  for (const auto& g : games) {
    EXPECT_LE(basis_defect(g, rng), 1e-10) << structure_name(g.structure());
    const Matrix& W = g.basis();
    EXPECT_LE((W.transpose() * W - Matrix::Identity(W.cols(), W.cols())).norm(), 1e-10);
    EXPECT_LE(g.basis_rank(), g.param_set().affine_dim());
  }
  EXPECT_LE(games[1].basis_rank(), 2);
}

TEST(Game, DuplicateClasses) {
  GroundSet gs{{vec({1, 0}), vec({0, 1})}, {}};
  const auto g = build_dueling(gs);
  // (1,2) and (2,1) share a reward feature.
  bool found = false;
  for (const auto& cls : g.duplicate_classes())
    if (cls.size() == 2 && cls[0] == 1 && cls[1] == 2) found = true;
  EXPECT_TRUE(found);
  // On the simplex, constant offsets separate actions.
  Matrix R(2, 2);
  R << 1, 1, 0, 0;
  Eigen::MatrixXi S = Eigen::MatrixXi::Zero(2, 2);
  EXPECT_EQ(embed_finite_pm(R, S, 1).duplicate_classes().size(), 2u);
}
