#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ladmc/core.hpp"

namespace ladmc {

// C(n, k) with overflow detection. Throws ArithmeticOverflow.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

// Dimension of the p-fold symmetric tensor space over R^d: C(d+p-1, p).
std::size_t tensor_dimension(std::size_t d, std::size_t p);

/**
 * Bijection between tensor-space coordinates and sorted multi-indices.
 *
 * Coordinate q corresponds to the q-th non-decreasing tuple
 * (i_1 <= ... <= i_p) of {0..d-1}^p in lexicographic order. Indices are
 * zero-based throughout the library.
 */
class TensorIndexMap {
 public:
  TensorIndexMap(std::size_t d, std::size_t p);

  std::size_t d() const { return d_; }
  std::size_t p() const { return p_; }
  std::size_t D() const { return D_; }

  std::span<const std::uint32_t> entry(std::size_t q) const {
    return {entries_.data() + q * p_, p_};
  }

  // Inverse of entry(). The tuple need not be sorted.
  std::size_t index_of(std::span<const std::uint32_t> multi_index) const;

  // p = 2 shorthand: coordinate for the unordered pair {j, k}.
  std::size_t pair_index(std::size_t j, std::size_t k) const;

 private:
  std::size_t d_;
  std::size_t p_;
  std::size_t D_;
  std::vector<std::uint32_t> entries_;
  // tail_count_[len][v]: number of non-decreasing tuples of length len with
  // values in [v, d).
  std::vector<std::vector<std::size_t>> tail_count_;
};

// Degree-p monomials of x, one per sorted multi-index, unscaled.
Vector tensorize_column(const Eigen::Ref<const Vector>& x,
                        const TensorIndexMap& map);

// Coordinate q is observed iff every factor of entry(q) is observed.
BoolColumn tensorize_mask(const BoolColumn& omega, const TensorIndexMap& map);

struct TensorizedMatrix {
  Matrix values;          // D x N, unobserved cells are 0
  ObservationMask mask;   // D x N
};

TensorizedMatrix tensorize_matrix(const Matrix& X, const ObservationMask& mask,
                                  const TensorIndexMap& map);

// Tensorize every column of a fully known matrix.
Matrix tensorize_all(const Matrix& X, const TensorIndexMap& map);

ObservationMask tensorize_mask_matrix(const ObservationMask& mask,
                                      const TensorIndexMap& map);

// Prepend a constant, observed row of ones (x -> [1, x]) so inhomogeneous
// polynomial constraints become homogeneous after tensorization.
std::pair<Matrix, ObservationMask> augment_ones(const Matrix& X,
                                                const ObservationMask& mask);

}  // namespace ladmc
