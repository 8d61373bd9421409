#include "ladmc/tensorize.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace ladmc {

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // C(n-k+i, i) = C(n-k+i-1, i-1) * (n-k+i) / i, exact in integers.
    unsigned __int128 wide = static_cast<unsigned __int128>(result) * (n - k + i);
    wide /= i;
    if (wide > std::numeric_limits<std::uint64_t>::max()) {
      throw ArithmeticOverflow("binomial(" + std::to_string(n) + ", " +
                               std::to_string(k) + ") overflows 64 bits");
    }
    result = static_cast<std::uint64_t>(wide);
  }
  return result;
}

std::size_t tensor_dimension(std::size_t d, std::size_t p) {
  if (d < 1) throw ConfigError("tensor_dimension: d must be >= 1");
  if (p < 2) throw ConfigError("tensor_dimension: p must be >= 2");
  const std::uint64_t D = binomial(d + p - 1, p);
  if (D > std::numeric_limits<std::uint32_t>::max()) {
    throw ArithmeticOverflow("tensor_dimension: C(" + std::to_string(d + p - 1) +
                             ", " + std::to_string(p) + ") is too large");
  }
  return static_cast<std::size_t>(D);
}

TensorIndexMap::TensorIndexMap(std::size_t d, std::size_t p)
    : d_(d), p_(p), D_(tensor_dimension(d, p)) {
  entries_.reserve(D_ * p_);
  std::vector<std::uint32_t> tuple(p_, 0);
  for (std::size_t q = 0; q < D_; ++q) {
    entries_.insert(entries_.end(), tuple.begin(), tuple.end());
    // Advance to the next non-decreasing tuple.
    std::size_t pos = p_;
    while (pos > 0 && tuple[pos - 1] + 1 >= d_) --pos;
    if (pos == 0) break;
    const std::uint32_t v = tuple[pos - 1] + 1;
    std::fill(tuple.begin() + static_cast<std::ptrdiff_t>(pos - 1), tuple.end(), v);
  }

  tail_count_.assign(p_ + 1, std::vector<std::size_t>(d_ + 1, 0));
  for (std::size_t len = 0; len <= p_; ++len) {
    for (std::size_t v = 0; v <= d_; ++v) {
      tail_count_[len][v] =
          len == 0 ? 1 : static_cast<std::size_t>(binomial(d_ - v + len - 1, len));
    }
  }
}

std::size_t TensorIndexMap::index_of(std::span<const std::uint32_t> multi_index) const {
  if (multi_index.size() != p_) {
    throw DimensionMismatch("index_of: expected a multi-index of length " +
                            std::to_string(p_));
  }
  std::vector<std::uint32_t> sorted(multi_index.begin(), multi_index.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.back() >= d_) throw DimensionMismatch("index_of: index out of range");

  std::size_t rank = 0;
  std::uint32_t prev = 0;
  for (std::size_t k = 0; k < p_; ++k) {
    const std::size_t remaining = p_ - k - 1;
    for (std::uint32_t v = prev; v < sorted[k]; ++v) rank += tail_count_[remaining][v];
    prev = sorted[k];
  }
  return rank;
}

std::size_t TensorIndexMap::pair_index(std::size_t j, std::size_t k) const {
  const std::uint32_t idx[2] = {static_cast<std::uint32_t>(j),
                                static_cast<std::uint32_t>(k)};
  return index_of(idx);
}

Vector tensorize_column(const Eigen::Ref<const Vector>& x, const TensorIndexMap& map) {
  if (static_cast<std::size_t>(x.size()) != map.d()) {
    throw DimensionMismatch("tensorize_column: length " + std::to_string(x.size()) +
                            " != d = " + std::to_string(map.d()));
  }
  Vector out(static_cast<Eigen::Index>(map.D()));
  for (std::size_t q = 0; q < map.D(); ++q) {
    double prod = 1.0;
    for (const auto i : map.entry(q)) prod *= x[i];
    out[static_cast<Eigen::Index>(q)] = prod;
  }
  return out;
}

BoolColumn tensorize_mask(const BoolColumn& omega, const TensorIndexMap& map) {
  if (static_cast<std::size_t>(omega.size()) != map.d()) {
    throw DimensionMismatch("tensorize_mask: length " + std::to_string(omega.size()) +
                            " != d = " + std::to_string(map.d()));
  }
  BoolColumn out(static_cast<Eigen::Index>(map.D()));
  for (std::size_t q = 0; q < map.D(); ++q) {
    bool seen = true;
    for (const auto i : map.entry(q)) seen = seen && omega[i];
    out[static_cast<Eigen::Index>(q)] = seen;
  }
  return out;
}

TensorizedMatrix tensorize_matrix(const Matrix& X, const ObservationMask& mask,
                                  const TensorIndexMap& map) {
  require_congruent(X, mask, "tensorize_matrix");
  if (static_cast<std::size_t>(X.rows()) != map.d()) {
    throw DimensionMismatch("tensorize_matrix: X has " + std::to_string(X.rows()) +
                            " rows, map expects d = " + std::to_string(map.d()));
  }
  const Matrix filled = zero_fill(X, mask);
  // Any product touching an unobserved factor is zero after the fill.
  return {tensorize_all(filled, map), tensorize_mask_matrix(mask, map)};
}

Matrix tensorize_all(const Matrix& X, const TensorIndexMap& map) {
  if (static_cast<std::size_t>(X.rows()) != map.d()) {
    throw DimensionMismatch("tensorize_all: X has " + std::to_string(X.rows()) +
                            " rows, map expects d = " + std::to_string(map.d()));
  }
  const auto D = static_cast<Eigen::Index>(map.D());
  Matrix out(D, X.cols());
  if (map.p() == 2) {
    for (Eigen::Index q = 0; q < D; ++q) {
      const auto e = map.entry(static_cast<std::size_t>(q));
      out.row(q) = X.row(e[0]).cwiseProduct(X.row(e[1]));
    }
    return out;
  }
  for (Eigen::Index q = 0; q < D; ++q) {
    const auto e = map.entry(static_cast<std::size_t>(q));
    auto row = out.row(q);
    row = X.row(e[0]);
    for (std::size_t k = 1; k < e.size(); ++k) row = row.cwiseProduct(X.row(e[k]));
  }
  return out;
}

ObservationMask tensorize_mask_matrix(const ObservationMask& mask,
                                      const TensorIndexMap& map) {
  if (static_cast<std::size_t>(mask.rows()) != map.d()) {
    throw DimensionMismatch("tensorize_mask_matrix: mask has " +
                            std::to_string(mask.rows()) + " rows, map expects d = " +
                            std::to_string(map.d()));
  }
  const auto D = static_cast<Eigen::Index>(map.D());
  ObservationMask::Storage bits(D, mask.cols());
  for (Eigen::Index q = 0; q < D; ++q) {
    const auto e = map.entry(static_cast<std::size_t>(q));
    auto row = bits.row(q);
    row = mask.bits().row(e[0]);
    for (std::size_t k = 1; k < e.size(); ++k) row = row && mask.bits().row(e[k]);
  }
  return ObservationMask(std::move(bits));
}

std::pair<Matrix, ObservationMask> augment_ones(const Matrix& X,
                                                const ObservationMask& mask) {
  require_congruent(X, mask, "augment_ones");
  Matrix Xa(X.rows() + 1, X.cols());
  Xa.row(0).setOnes();
  Xa.bottomRows(X.rows()) = X;
  ObservationMask::Storage bits(X.rows() + 1, X.cols());
  bits.row(0).setConstant(true);
  bits.bottomRows(X.rows()) = mask.bits();
  return {std::move(Xa), ObservationMask(std::move(bits))};
}

}  // namespace ladmc
