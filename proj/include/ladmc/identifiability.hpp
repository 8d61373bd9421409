#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ladmc/core.hpp"
#include "ladmc/tensorize.hpp"

namespace ladmc {

/// min(K * C(r+p-1, p), C(d+p-1, p)): dimension of the span of a tensorized
/// union of K generic r-dimensional subspaces.
std::size_t uos_tensor_rank(std::size_t K, std::size_t r, std::size_t d, std::size_t p);

/// Smallest l with C(l+p-1, p) >= R.
std::size_t minimal_samples(std::size_t R, std::size_t p);

/**
 * Symmetrized tensor products of basis vectors, one column per sorted tuple
 * of basis indices per subspace (subspace-major). For p = 2 the column for
 * (j, k) is (u_j (x) u_k + u_k (x) u_j) restricted to the D unique
 * coordinates, so j = k gives twice the plain tensorization.
 */
Matrix spanning_set_uos(const std::vector<Matrix>& bases, const TensorIndexMap& map);

/// Numerical rank with threshold rel_tol * sigma_1.
int numerical_rank(const Matrix& M, double rel_tol = 1e-8);

struct ConstraintPatterns {
  std::size_t D = 0;
  std::size_t R = 0;
  // Each entry lists the R+1 sorted row indices of one constraint column.
  std::vector<std::vector<std::uint32_t>> columns;
  struct Source {
    std::size_t upsilon_column;  // index among the distinct input columns
    std::size_t kappa;           // 1-based offset
  };
  std::vector<Source> provenance;
  std::size_t duplicates_removed = 0;

  std::size_t size() const { return columns.size(); }
  ObservationMask as_mask() const;
};

/// Expand each distinct column of upsilon with m_i > R observed rows
/// k(1) < ... < k(m_i) into m_i - R patterns {k(1..R), k(R+kappa)}.
ConstraintPatterns build_constraint_patterns(const ObservationMask& upsilon, std::size_t R);

struct ConstraintMatrix {
  Matrix A;                  // D x (#usable patterns)
  std::size_t skipped = 0;   // patterns whose restricted block was rank deficient
};

/// One unit kernel vector per pattern of the transposed (R+1) x R restriction
/// of basis_B, scattered into R^D.
ConstraintMatrix build_A(const Matrix& basis_B, const ConstraintPatterns& patterns);

enum class CheckMethod { combinatorial, algebraic };

struct IdentifiabilityVerdict {
  bool identifiable = false;
  bool inconclusive = false;
  CheckMethod method = CheckMethod::algebraic;
  std::optional<std::size_t> kernel_dim;  // largest dim ker A^T seen over trials
  std::size_t trials = 0;
  std::string details;
  // Combinatorial only: indices (into patterns.columns) of the certificate.
  std::vector<std::size_t> certificate;
};

/// Algebraic test: draws `trials` Gaussian R-dimensional bases
/// of the tensor space, builds A from Omega's tensorized patterns and checks
/// dim ker A^T == R in every trial.
IdentifiabilityVerdict check_identifiable_algebraic(const ObservationMask& omega,
                                                    std::size_t R, std::size_t p,
                                                    std::size_t trials, std::uint64_t seed);

/// Algebraic test against an explicit basis (e.g. from spanning_set_uos).
IdentifiabilityVerdict check_identifiable_with_basis(const ObservationMask& omega,
                                                     const Matrix& basis_B, std::size_t p);

/**
 * Combinatorial test: is there a set of D-R constraint columns such that any
 * eta of them cover at least eta+R rows?
 *
 * Such sets are the bases of the matroid induced by |rows(S)| - R, so a greedy
 * scan with a matching-based independence oracle decides existence exactly.
 * The certificate found is then verified over all 2^(D-R)-1 subsets, which
 * bounds D-R at 22.
 */
IdentifiabilityVerdict check_identifiable_combinatorial(const ConstraintPatterns& patterns,
                                                        std::size_t R, std::size_t D);

inline constexpr std::size_t kMaxCombinatorialCodim = 22;

/// Estimate of the column count needed for R copies of every m-of-d pattern:
/// ceil(n ln n + (R-1) n ln ln n + n), n = C(d, m); R*n when n < 3.
std::uint64_t coupon_collector_columns(std::size_t d, std::size_t m, std::size_t R);

/// Coefficient vectors v of the polynomials v^T x^{(x)p} = 0.
struct VarietyCoefficients {
  std::size_t D = 0;
  std::size_t p = 0;
  std::vector<Vector> vectors;
};

/// Residual v_j^T tensorize(x) per polynomial.
Vector evaluate_variety(const VarietyCoefficients& V, const Eigen::Ref<const Vector>& x,
                        const TensorIndexMap& map);

/// All residuals below 1e-10 * |v_j| * |x|^p.
bool on_variety(const VarietyCoefficients& V, const Eigen::Ref<const Vector>& x,
                const TensorIndexMap& map);

}  // namespace ladmc
