#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "ladmc/pipeline.hpp"
#include "ladmc/synth.hpp"

using namespace ladmc;

namespace {

struct Instance {
  Matrix X;
  ObservationMask mask;
  Matrix X_obs;
};

Instance uos_instance(int d, int K, int r, int N, int m, std::uint64_t seed) {
  Instance in;
  in.X = gen_uos(d, K, r, N, seed).X;
  in.mask = gen_mask_uniform(d, N, m, seed + 1000);
  in.X_obs = zero_fill(in.X, in.mask);
  return in;
}

LadmcConfig config(int R) {
  LadmcConfig cfg;
  cfg.rank = R;
  cfg.svp.max_iters = 2000;
  cfg.svp.rel_tol = 1e-9;
  return cfg;
}

void expect_observed_fidelity(const CompletionReport& rep, const Instance& in) {
  for (Eigen::Index j = 0; j < in.X.cols(); ++j) {
    for (Eigen::Index i = 0; i < in.X.rows(); ++i) {
      if (in.mask(i, j)) {
        ASSERT_EQ(rep.X_hat(i, j), in.X_obs(i, j));
      }
    }
  }
}

}  // namespace

TEST(Nrmse, Examples) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Matrix A(7, 9), B(7, 9);
  for (auto& v : A.reshaped()) v = g(rng);
  for (auto& v : B.reshaped()) v = g(rng);
  EXPECT_EQ(nrmse(A, A), 0.0);
  EXPECT_NEAR(nrmse(1.01 * A, A), 0.01, 1e-14);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 9; ++j) {
      num += (B(i, j) - A(i, j)) * (B(i, j) - A(i, j));
      den += A(i, j) * A(i, j);
    }
  }
  EXPECT_NEAR(nrmse(B, A), std::sqrt(num / den), 1e-14);
  EXPECT_THROW(nrmse(A, Matrix::Zero(7, 9)), ConfigError);
  EXPECT_THROW(nrmse(A, Matrix::Zero(7, 8)), DimensionMismatch);
}

TEST(Score, SuccessRule) {
  CompletionReport rep;
  Matrix X = Matrix::Ones(3, 3);
  rep.X_hat = X * (1.0 + 5e-5);
  score(rep, X);
  ASSERT_TRUE(rep.nrmse.has_value());
  EXPECT_TRUE(*rep.success);
  rep.X_hat = X * (1.0 + 2e-4);
  score(rep, X);
  EXPECT_FALSE(*rep.success);
}

TEST(SelectRank, LargestGap) {
  Vector s(5);
  s << 10, 9, 8, 1e-6, 1e-7;
  EXPECT_EQ(select_rank_by_gap(s), 3);
}

TEST(Ladmc, TwoLinesInSixDimensions) {
  const auto in = uos_instance(6, 2, 1, 200, 4, 11);
  auto rep = ladmc::ladmc(in.X_obs, in.mask, config(2));
  score(rep, in.X);
  EXPECT_LT(*rep.nrmse, 1e-4);
  EXPECT_EQ(rep.rank_used, 2);
  expect_observed_fidelity(rep, in);
}

TEST(Ladmc, WeightedAndPlainLiftBothRecover) {
  const auto in = uos_instance(8, 3, 1, 300, 4, 31);
  for (const bool weighted : {true, false}) {
    LadmcConfig cfg = config(3);
    cfg.weighted_lift = weighted;
    auto rep = ladmc::ladmc(in.X_obs, in.mask, cfg);
    score(rep, in.X);
    EXPECT_LT(*rep.nrmse, 1e-4) << weighted;
    expect_observed_fidelity(rep, in);
  }
}

TEST(Ladmc, FullyObservedIsIdentity) {
  const auto in = uos_instance(5, 2, 2, 60, 5, 12);
  for (const auto& R : {std::optional<int>(6), std::optional<int>()}) {
    LadmcConfig cfg = config(1);
    cfg.rank = R;
    const auto rep = ladmc::ladmc(in.X, ObservationMask::full(5, 60), cfg);
    EXPECT_EQ(rep.X_hat, in.X);
  }
}

TEST(Ladmc, SingleSubspace) {
  const Matrix X = gen_single_subspace(25, 3, 500, 13);
  const auto mask = gen_mask_uniform(25, 500, 12, 14);
  auto rep = ladmc::ladmc(zero_fill(X, mask), mask, config(6));
  score(rep, X);
  EXPECT_LT(*rep.nrmse, 1e-4);
}

TEST(Ladmc, AutoRankFindsTensorRank) {
  const auto in = uos_instance(6, 2, 1, 200, 6, 15);
  LadmcConfig cfg = config(1);
  cfg.rank.reset();
  EXPECT_EQ(ladmc::ladmc(in.X_obs, in.mask, cfg).rank_used, 2);
  const auto planes = uos_instance(10, 3, 2, 300, 10, 16);
  EXPECT_EQ(ladmc::ladmc(planes.X_obs, planes.mask, cfg).rank_used, 9);
}

TEST(Ladmc, ThirdOrderLift) {
  // Two planes in R^8: tensor rank 2 * C(4, 3) = 8, minimal samples 3.
  const auto in = uos_instance(8, 2, 2, 400, 7, 16);
  LadmcConfig cfg = config(8);
  cfg.p = 3;
  auto rep = ladmc::ladmc(in.X_obs, in.mask, cfg);
  score(rep, in.X);
  EXPECT_LT(*rep.nrmse, 1e-4);
}

TEST(Ladmc, AugmentedLiftOnAffineData) {
  // Points on an affine line x = a + t b; homogeneous lifts miss the offset.
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  const int d = 5, N = 300;
  Vector a(d), b(d);
  for (auto& v : a) v = g(rng);
  for (auto& v : b) v = g(rng);
  Matrix X(d, N);
  for (int j = 0; j < N; ++j) X.col(j) = a + g(rng) * b;
  const auto mask = gen_mask_uniform(d, N, 4, 18);
  LadmcConfig cfg = config(3);  // span of [1, t, t^2] after augmentation
  cfg.augment_ones = true;
  auto rep = ladmc::ladmc(zero_fill(X, mask), mask, cfg);
  score(rep, X);
  EXPECT_LT(*rep.nrmse, 1e-4);
}

TEST(Ladmc, EmptyColumnsAreZeroAndFlagged) {
  auto in = uos_instance(6, 2, 1, 200, 4, 19);
  for (Eigen::Index i = 0; i < 6; ++i) in.mask.set(i, 7, false);
  in.X_obs = zero_fill(in.X, in.mask);
  const auto rep = ladmc::ladmc(in.X_obs, in.mask, config(2));
  ASSERT_EQ(rep.empty_columns.size(), 1u);
  EXPECT_EQ(rep.empty_columns[0], 7);
  EXPECT_EQ(rep.X_hat.col(7).norm(), 0.0);
}

TEST(Ladmc, RankErrors) {
  const auto in = uos_instance(3, 2, 1, 50, 2, 20);
  EXPECT_THROW(ladmc::ladmc(in.X_obs, in.mask, config(7)), ConfigError);
  EXPECT_THROW(ladmc::ladmc(in.X_obs, in.mask, config(0)), ConfigError);
  EXPECT_THROW(ladmc::ladmc(in.X_obs, ObservationMask(3, 49), config(2)), DimensionMismatch);
}

TEST(Ladmc, ColumnPermutationEquivariance) {
  const auto in = uos_instance(6, 2, 1, 120, 4, 21);
  std::vector<Eigen::Index> perm(120);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(22);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix Xp(6, 120);
  ObservationMask mp(6, 120);
  for (Eigen::Index j = 0; j < 120; ++j) {
    Xp.col(j) = in.X_obs.col(perm[j]);
    mp.set_column(j, in.mask.column(perm[j]));
  }
  LadmcConfig cfg = config(2);
  cfg.svp.max_iters = 300;
  const auto a = ladmc::ladmc(in.X_obs, in.mask, cfg);
  const auto b = ladmc::ladmc(Xp, mp, cfg);
  for (Eigen::Index j = 0; j < 120; ++j) {
    EXPECT_LT((b.X_hat.col(j) - a.X_hat.col(perm[j])).norm(),
              1e-8 * (1.0 + a.X_hat.col(perm[j]).norm()));
  }
}

TEST(Ladmc, ScalingAFullyObservedColumn) {
  auto in = uos_instance(6, 2, 1, 150, 4, 23);
  for (Eigen::Index i = 0; i < 6; ++i) in.mask.set(i, 3);
  in.X_obs = zero_fill(in.X, in.mask);
  const auto a = ladmc::ladmc(in.X_obs, in.mask, config(2));
  Matrix scaled = in.X_obs;
  scaled.col(3) *= -2.5;
  const auto b = ladmc::ladmc(scaled, in.mask, config(2));
  EXPECT_EQ(b.X_hat.col(3), Vector(-2.5 * a.X_hat.col(3)));
}

TEST(Iladmc, TwoLinesInSixDimensions) {
  const auto in = uos_instance(6, 2, 1, 200, 4, 11);
  auto base = ladmc::ladmc(in.X_obs, in.mask, config(2));
  auto rep = ladmc::iladmc(in.X_obs, in.mask, config(2));
  score(rep, in.X);
  EXPECT_LT(*rep.nrmse, 1e-4);
  EXPECT_LE(rep.outer_iterations, base.svp_iterations);
  expect_observed_fidelity(rep, in);
}

TEST(Iladmc, AlreadyCompletedIsFixedPoint) {
  const auto in = uos_instance(6, 2, 1, 100, 6, 24);
  const auto rep = ladmc::iladmc(in.X, ObservationMask::full(6, 100), config(2));
  EXPECT_EQ(rep.outer_iterations, 1);
  EXPECT_EQ(rep.X_hat, in.X);
  EXPECT_TRUE(rep.converged);
}

TEST(Iladmc, InnerStepsHonored) {
  const auto in = uos_instance(6, 2, 1, 200, 4, 25);
  LadmcConfig cfg = config(2);
  cfg.iladmc_inner_T = 7;
  cfg.iladmc_max_outer = 3;
  cfg.iladmc_rel_tol = 1e-300;
  const auto rep = ladmc::iladmc(in.X_obs, in.mask, cfg);
  EXPECT_EQ(rep.outer_iterations, 3);
  EXPECT_LE(rep.svp_iterations, 21);
  cfg.iladmc_inner_T = 0;
  EXPECT_THROW(ladmc::iladmc(in.X_obs, in.mask, cfg), ConfigError);
}

TEST(Iladmc, BeatsLadmcBelowItsBound) {
  // K = 20 planes in R^15: R = 60, minimal samples 11. At m = 10 plain LADMC
  // cannot identify the tensor subspace.
  int ladmc_fail = 0, iladmc_ok = 0;
  const int trials = 2;
  for (int t = 0; t < trials; ++t) {
    const auto in = uos_instance(15, 20, 2, 1000, 10, 300 + t);
    LadmcConfig cfg = config(60);
    cfg.svp.max_iters = 300;
    auto a = ladmc::ladmc(in.X_obs, in.mask, cfg);
    score(a, in.X);
    cfg.iladmc_max_outer = 60;
    auto b = ladmc::iladmc(in.X_obs, in.mask, cfg);
    score(b, in.X);
    ladmc_fail += !*a.success;
    iladmc_ok += *b.nrmse < *a.nrmse;
  }
  EXPECT_EQ(ladmc_fail, trials);
  EXPECT_EQ(iladmc_ok, trials);
}

TEST(LrmcBaseline, RecoversLowRankMatrix) {
  const Matrix X = gen_single_subspace(20, 3, 200, 26);
  const auto mask = gen_mask_uniform(20, 200, 10, 27);
  SvpOptions o;
  o.rank = 3;
  o.max_iters = 2000;
  o.rel_tol = 1e-10;
  auto rep = lrmc_baseline(zero_fill(X, mask), mask, o);
  score(rep, X);
  EXPECT_LT(*rep.nrmse, 1e-4);
}
