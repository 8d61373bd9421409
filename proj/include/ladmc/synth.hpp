#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ladmc/core.hpp"

namespace ladmc {

// Union of K subspaces of dimension r in R^d plus a label per column.
struct UoSModel {
  int d = 0;
  int K = 0;
  int r = 0;
  std::vector<Matrix> bases;  // K matrices d x r, i.i.d. standard normal
  std::vector<int> labels;    // labels[i] in [0, K)
};

struct UoSData {
  Matrix X;
  UoSModel model;
};

// Deterministic stream for (seed, stream ids...). Used so each trial in a grid
// owns an RNG regardless of scheduling.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                         std::uint64_t c = 0);

// Columns i = bases[i % K] * c_i with c_i ~ N(0, I_r).
UoSData gen_uos(int d, int K, int r, int N, std::uint64_t seed);

Matrix gen_single_subspace(int d, int r, int N, std::uint64_t seed);

// Exactly m observed rows per column, uniform without replacement.
ObservationMask gen_mask_uniform(int d, int N, int m, std::uint64_t seed);

// All C(d, m) patterns in lexicographic order, each repeated `copies` times.
ObservationMask gen_all_patterns(int d, int m, int copies = 1);

// Additive N(0, sigma^2) noise. Off unless called explicitly.
Matrix add_gaussian_noise(const Matrix& X, double sigma, std::uint64_t seed);

// Residual of column x after orthogonal projection onto span(basis).
double subspace_residual(const Matrix& basis, const Eigen::Ref<const Vector>& x);

}  // namespace ladmc
