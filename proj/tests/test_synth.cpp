#include <gtest/gtest.h>

#include <map>
#include <vector>

#include "ladmc/identifiability.hpp"
#include "ladmc/synth.hpp"
#include "ladmc/tensorize.hpp"

using namespace ladmc;

TEST(GenUos, ColumnsLieInLabeledSubspace) {
  const auto data = gen_uos(15, 10, 2, 500, 1);
  ASSERT_EQ(data.model.bases.size(), 10u);
  ASSERT_EQ(data.model.labels.size(), 500u);
  for (Eigen::Index i = 0; i < 500; ++i) {
    const int k = data.model.labels[static_cast<std::size_t>(i)];
    EXPECT_EQ(k, i % 10);
    EXPECT_LT(subspace_residual(data.model.bases[static_cast<std::size_t>(k)], data.X.col(i)),
              1e-12);
  }
}

TEST(GenUos, MatrixAndLiftedRanks) {
  const auto data = gen_uos(15, 10, 2, 500, 2);
  EXPECT_EQ(numerical_rank(data.X), 15);
  EXPECT_EQ(numerical_rank(tensorize_all(data.X, TensorIndexMap(15, 2))), 30);
}

TEST(GenUos, BasesFullRankAndDeterministic) {
  const auto a = gen_uos(6, 3, 3, 40, 9);
  const auto b = gen_uos(6, 3, 3, 40, 9);
  const auto c = gen_uos(6, 3, 3, 40, 10);
  EXPECT_EQ(a.X, b.X);
  EXPECT_NE(a.X, c.X);
  for (const auto& B : a.model.bases) EXPECT_EQ(numerical_rank(B), 3);
}

TEST(GenUos, RoundRobinCounts) {
  const auto data = gen_uos(5, 3, 1, 10, 3);
  std::map<int, int> counts;
  for (const int l : data.model.labels) ++counts[l];
  EXPECT_EQ(counts[0], 4);
  EXPECT_EQ(counts[1], 3);
  EXPECT_EQ(counts[2], 3);
}

TEST(GenUos, Errors) {
  EXPECT_THROW(gen_uos(3, 1, 4, 10, 0), ConfigError);
  EXPECT_THROW(gen_uos(3, 1, 1, 0, 0), ConfigError);
  EXPECT_THROW(gen_uos(3, 0, 1, 10, 0), ConfigError);
}

TEST(GenSingleSubspace, Ranks) {
  EXPECT_EQ(numerical_rank(gen_single_subspace(25, 1, 500, 4)), 1);
  EXPECT_EQ(numerical_rank(gen_single_subspace(6, 6, 50, 5)), 6);
  EXPECT_EQ(numerical_rank(tensorize_all(gen_single_subspace(10, 3, 100, 6), TensorIndexMap(10, 2))),
            6);
}

TEST(GenMaskUniform, ExactColumnCounts) {
  const auto full = gen_mask_uniform(7, 30, 7, 1);
  EXPECT_EQ(full.count(), 210u);
  const auto mask = gen_mask_uniform(15, 1000, 9, 2);
  for (Eigen::Index j = 0; j < 1000; ++j) EXPECT_EQ(mask.column_count(j), 9u);
}

TEST(GenMaskUniform, RowMarginalsAreUniform) {
  const int d = 10, N = 100000, m = 3;
  const auto mask = gen_mask_uniform(d, N, m, 3);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double frac = static_cast<double>(mask.bits().row(i).count()) / N;
    EXPECT_NEAR(frac, static_cast<double>(m) / d, 0.01 * m / d);
  }
}

TEST(GenMaskUniform, SeedsDiffer) {
  EXPECT_EQ(gen_mask_uniform(10, 50, 4, 7), gen_mask_uniform(10, 50, 4, 7));
  EXPECT_FALSE(gen_mask_uniform(10, 50, 4, 7) == gen_mask_uniform(10, 50, 4, 8));
  EXPECT_THROW(gen_mask_uniform(5, 10, 0, 1), ConfigError);
  EXPECT_THROW(gen_mask_uniform(5, 10, 6, 1), ConfigError);
}

TEST(GenAllPatterns, PairsOfThree) {
  const auto m = gen_all_patterns(3, 2, 1);
  ObservationMask want(3, 3);
  want.set(0, 0);
  want.set(1, 0);
  want.set(0, 1);
  want.set(2, 1);
  want.set(1, 2);
  want.set(2, 2);
  EXPECT_EQ(m, want);
}

TEST(GenAllPatterns, CountsAndMultiplicity) {
  EXPECT_EQ(gen_all_patterns(6, 4, 1).cols(), 15);
  const auto full = gen_all_patterns(4, 4, 2);
  EXPECT_EQ(full.cols(), 2);
  EXPECT_EQ(full.count(), 8u);

  const auto m = gen_all_patterns(7, 3, 4);
  std::map<std::vector<bool>, int> seen;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    std::vector<bool> key;
    for (Eigen::Index i = 0; i < 7; ++i) key.push_back(m(i, j));
    ++seen[key];
    EXPECT_EQ(m.column_count(j), 3u);
  }
  EXPECT_EQ(seen.size(), 35u);
  for (const auto& [k, c] : seen) EXPECT_EQ(c, 4);
}

TEST(GenAllPatterns, Overflow) {
  EXPECT_THROW(gen_all_patterns(60, 30, 1), ArithmeticOverflow);
}

TEST(Noise, OffByDefaultAndSeeded) {
  const Matrix X = gen_single_subspace(4, 2, 10, 1);
  EXPECT_EQ(add_gaussian_noise(X, 0.0, 3), X);
  const Matrix Y = add_gaussian_noise(X, 1e-3, 3);
  EXPECT_EQ(Y, add_gaussian_noise(X, 1e-3, 3));
  EXPECT_NEAR((Y - X).norm() / std::sqrt(40.0), 1e-3, 5e-4);
}
