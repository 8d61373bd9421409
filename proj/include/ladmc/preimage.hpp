#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ladmc/core.hpp"
#include "ladmc/tensorize.hpp"

namespace ladmc {

// d x d symmetric matrix rebuilt from a second-order tensorized column.
struct SymmetricLift {
  Matrix values;
};

SymmetricLift assemble_symmetric(const Eigen::Ref<const Vector>& t,
                                 const TensorIndexMap& map);

struct Rank1Pair {
  double sigma = 0.0;  // principal singular value
  Vector u;            // unit vector, first nonzero component positive
  double ratio = 0.0;  // sigma_2 / sigma_1, 0 for the zero matrix
};

/**
 * Principal singular pair of a symmetric matrix.
 *
 * When the dominant eigenvalue is repeated the returned direction is the
 * normalized projection of the first canonical axis (e_1, then e_2, ...)
 * onto the dominant eigenspace.
 */
Rank1Pair extract_rank1(const SymmetricLift& lift);

struct ObservedEntry {
  Eigen::Index index;
  double value;
};

// Observed entries of column j of X.
std::vector<ObservedEntry> observed_entries(const Matrix& X, const ObservationMask& mask,
                                            Eigen::Index j);

/// Flip the global sign of candidate so its entry at the largest-magnitude
/// observation agrees in sign. Leaves it alone when nothing observed exceeds
/// 1e-9 * |candidate|_inf.
Vector resolve_sign(Vector candidate, std::span<const ObservedEntry> observed);

struct HopmOptions {
  int max_iters = 100;
  double tol = 1e-12;
  int restarts = 5;
  std::uint64_t seed = 0x5eed;
};

struct PreimageResult {
  Vector x;
  // p = 2: sigma_2 / sigma_1 of the lift. p = 3: relative Frobenius residual
  // of the best rank-one term.
  double rank1_ratio = 0.0;
};

/// Recover x from (an estimate of) its tensorized column. p must be 2 or 3.
PreimageResult preimage_column(const Eigen::Ref<const Vector>& t,
                               const TensorIndexMap& map,
                               std::span<const ObservedEntry> observed,
                               const HopmOptions& hopm = {});

}  // namespace ladmc
