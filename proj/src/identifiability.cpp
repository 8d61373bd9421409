#include "ladmc/identifiability.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>

#include "ladmc/synth.hpp"

namespace ladmc {
namespace {

std::size_t checked_mul(std::size_t a, std::size_t b) {
  std::size_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw ArithmeticOverflow("uos_tensor_rank: product overflows");
  }
  return out;
}

double permanent(const Matrix& P) {
  const auto n = P.rows();
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double acc = 0.0;
  do {
    double prod = 1.0;
    for (Eigen::Index k = 0; k < n; ++k) prod *= P(k, perm[static_cast<std::size_t>(k)]);
    acc += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return acc;
}

std::vector<std::uint32_t> support(const BoolColumn& c) {
  std::vector<std::uint32_t> out;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (c[i]) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

// Bipartite matching (Kuhn) of left vertices onto rows.
class RowMatcher {
 public:
  explicit RowMatcher(std::size_t rows) : owner_(rows) {}

  bool saturates(const std::vector<const std::vector<std::uint32_t>*>& left) {
    std::fill(owner_.begin(), owner_.end(), kFree);
    for (std::size_t v = 0; v < left.size(); ++v) {
      visited_.assign(owner_.size(), false);
      if (!augment(v, left)) return false;
    }
    return true;
  }

 private:
  static constexpr std::size_t kFree = static_cast<std::size_t>(-1);

  bool augment(std::size_t v, const std::vector<const std::vector<std::uint32_t>*>& left) {
    for (const auto row : *left[v]) {
      if (visited_[row]) continue;
      visited_[row] = true;
      if (owner_[row] == kFree || augment(owner_[row], left)) {
        owner_[row] = v;
        return true;
      }
    }
    return false;
  }

  std::vector<std::size_t> owner_;
  std::vector<bool> visited_;
};

// Every nonempty subset S of the chosen columns covers >= |S| + R rows.
bool verify_all_subsets(const ConstraintPatterns& patterns,
                        const std::vector<std::size_t>& chosen, std::size_t R) {
  const std::size_t n = chosen.size();
  std::vector<int> count(patterns.D, 0);
  std::size_t covered = 0;
  std::uint64_t gray = 0;
  for (std::uint64_t i = 1; i < (std::uint64_t{1} << n); ++i) {
    const auto bit = static_cast<std::size_t>(std::countr_zero(i));
    gray ^= std::uint64_t{1} << bit;
    const bool adding = (gray >> bit) & 1u;
    for (const auto row : patterns.columns[chosen[bit]]) {
      if (adding) {
        if (count[row]++ == 0) ++covered;
      } else {
        if (--count[row] == 0) --covered;
      }
    }
    if (covered < static_cast<std::size_t>(std::popcount(gray)) + R) return false;
  }
  return true;
}

IdentifiabilityVerdict algebraic_trial_loop(const ConstraintPatterns& patterns,
                                            std::size_t D, std::size_t R,
                                            std::size_t trials, std::uint64_t seed,
                                            const Matrix* explicit_basis) {
  IdentifiabilityVerdict v;
  v.method = CheckMethod::algebraic;
  v.identifiable = true;
  std::size_t worst = 0;
  std::size_t skipped = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Matrix B;
    if (explicit_basis != nullptr) {
      B = *explicit_basis;
    } else {
      auto rng = make_rng(seed, 0x616c67, t);
      std::normal_distribution<double> gauss;
      B.resize(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(R));
      for (Eigen::Index j = 0; j < B.cols(); ++j) {
        for (Eigen::Index i = 0; i < B.rows(); ++i) B(i, j) = gauss(rng);
      }
    }
    const ConstraintMatrix cm = build_A(B, patterns);
    skipped += cm.skipped;
    const std::size_t rank =
        cm.A.cols() == 0 ? 0 : static_cast<std::size_t>(numerical_rank(cm.A));
    const std::size_t kernel = D - rank;
    worst = std::max(worst, kernel);
    if (kernel != R) v.identifiable = false;
    ++v.trials;
  }
  v.kernel_dim = worst;
  v.details = "constraint columns=" + std::to_string(patterns.size()) +
              " D=" + std::to_string(D) + " R=" + std::to_string(R) +
              " max dim ker A^T=" + std::to_string(worst);
  if (skipped > 0) v.details += " skipped degenerate blocks=" + std::to_string(skipped);
  return v;
}

}  // namespace

std::size_t uos_tensor_rank(std::size_t K, std::size_t r, std::size_t d, std::size_t p) {
  if (K < 1 || r < 1 || r > d) throw ConfigError("uos_tensor_rank: need K >= 1, 1 <= r <= d");
  const std::size_t per = tensor_dimension(r, p);
  return std::min(checked_mul(K, per), tensor_dimension(d, p));
}

std::size_t minimal_samples(std::size_t R, std::size_t p) {
  if (R < 1) throw ConfigError("minimal_samples: R must be >= 1");
  if (p < 1) throw ConfigError("minimal_samples: p must be >= 1");
  std::size_t l = 1;
  while (binomial(l + p - 1, p) < R) ++l;
  return l;
}

Matrix spanning_set_uos(const std::vector<Matrix>& bases, const TensorIndexMap& map) {
  if (bases.empty()) return Matrix(static_cast<Eigen::Index>(map.D()), 0);
  const auto p = map.p();
  Eigen::Index total = 0;
  for (const auto& U : bases) {
    if (static_cast<std::size_t>(U.rows()) != map.d()) {
      throw DimensionMismatch("spanning_set_uos: basis has " + std::to_string(U.rows()) +
                              " rows, map expects d = " + std::to_string(map.d()));
    }
    total += static_cast<Eigen::Index>(tensor_dimension(static_cast<std::size_t>(U.cols()), p));
  }
  Matrix out(static_cast<Eigen::Index>(map.D()), total);
  Matrix P(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  Eigen::Index col = 0;
  for (const auto& U : bases) {
    const TensorIndexMap tuples(static_cast<std::size_t>(U.cols()), p);
    for (std::size_t t = 0; t < tuples.D(); ++t, ++col) {
      const auto js = tuples.entry(t);
      for (std::size_t q = 0; q < map.D(); ++q) {
        const auto is = map.entry(q);
        for (std::size_t k = 0; k < p; ++k) {
          for (std::size_t l = 0; l < p; ++l) {
            P(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = U(is[k], js[l]);
          }
        }
        out(static_cast<Eigen::Index>(q), col) = permanent(P);
      }
    }
  }
  return out;
}

int numerical_rank(const Matrix& M, double rel_tol) {
  if (M.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(M);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || !(s[0] > 0.0)) return 0;
  return static_cast<int>((s.array() > rel_tol * s[0]).count());
}

ObservationMask ConstraintPatterns::as_mask() const {
  ObservationMask mask(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    for (const auto row : columns[c]) mask.set(row, static_cast<Eigen::Index>(c));
  }
  return mask;
}

ConstraintPatterns build_constraint_patterns(const ObservationMask& upsilon, std::size_t R) {
  ConstraintPatterns out;
  out.D = static_cast<std::size_t>(upsilon.rows());
  out.R = R;
  std::map<std::vector<std::uint32_t>, std::size_t> seen;
  for (Eigen::Index j = 0; j < upsilon.cols(); ++j) {
    auto rows = support(upsilon.column(j));
    if (!seen.emplace(rows, seen.size()).second) {
      ++out.duplicates_removed;
      continue;
    }
    const std::size_t source = seen.size() - 1;
    if (rows.size() <= R) continue;
    for (std::size_t kappa = 1; kappa + R <= rows.size(); ++kappa) {
      std::vector<std::uint32_t> pattern(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(R));
      pattern.push_back(rows[R + kappa - 1]);
      out.columns.push_back(std::move(pattern));
      out.provenance.push_back({source, kappa});
    }
  }
  return out;
}

ConstraintMatrix build_A(const Matrix& basis_B, const ConstraintPatterns& patterns) {
  const auto R = basis_B.cols();
  if (static_cast<std::size_t>(basis_B.rows()) != patterns.D ||
      static_cast<std::size_t>(R) != patterns.R) {
    throw DimensionMismatch("build_A: basis is " + std::to_string(basis_B.rows()) + "x" +
                            std::to_string(R) + ", patterns expect D = " +
                            std::to_string(patterns.D) + ", R = " + std::to_string(patterns.R));
  }
  ConstraintMatrix out;
  out.A = Matrix::Zero(basis_B.rows(), static_cast<Eigen::Index>(patterns.size()));
  Matrix block(R + 1, R);
  Eigen::Index col = 0;
  for (const auto& rows : patterns.columns) {
    for (Eigen::Index k = 0; k <= R; ++k) block.row(k) = basis_B.row(rows[static_cast<std::size_t>(k)]);
    Eigen::JacobiSVD<Matrix> svd(block, Eigen::ComputeFullU);
    const Vector& s = svd.singularValues();
    if (R > 0 && !(s[R - 1] > 1e-8 * s[0])) {
      ++out.skipped;
      continue;
    }
    Vector a = svd.matrixU().col(R);
    for (Eigen::Index k = 0; k <= R; ++k) {
      if (std::abs(a[k]) > 1e-12) {
        if (a[k] < 0) a = -a;
        break;
      }
    }
    for (Eigen::Index k = 0; k <= R; ++k) out.A(rows[static_cast<std::size_t>(k)], col) = a[k];
    ++col;
  }
  out.A.conservativeResize(Eigen::NoChange, col);
  return out;
}

IdentifiabilityVerdict check_identifiable_algebraic(const ObservationMask& omega,
                                                    std::size_t R, std::size_t p,
                                                    std::size_t trials, std::uint64_t seed) {
  const TensorIndexMap map(static_cast<std::size_t>(omega.rows()), p);
  if (R < 1 || R > map.D()) {
    throw ConfigError("check_identifiable_algebraic: R must lie in [1, D], D = " +
                      std::to_string(map.D()));
  }
  if (trials < 1) throw ConfigError("check_identifiable_algebraic: trials must be >= 1");
  const ConstraintPatterns patterns =
      build_constraint_patterns(tensorize_mask_matrix(omega, map), R);
  return algebraic_trial_loop(patterns, map.D(), R, trials, seed, nullptr);
}

IdentifiabilityVerdict check_identifiable_with_basis(const ObservationMask& omega,
                                                     const Matrix& basis_B, std::size_t p) {
  const TensorIndexMap map(static_cast<std::size_t>(omega.rows()), p);
  if (static_cast<std::size_t>(basis_B.rows()) != map.D()) {
    throw DimensionMismatch("check_identifiable_with_basis: basis must have D rows");
  }
  const auto R = static_cast<std::size_t>(basis_B.cols());
  const ConstraintPatterns patterns =
      build_constraint_patterns(tensorize_mask_matrix(omega, map), R);
  return algebraic_trial_loop(patterns, map.D(), R, 1, 0, &basis_B);
}

IdentifiabilityVerdict check_identifiable_combinatorial(const ConstraintPatterns& patterns,
                                                        std::size_t R, std::size_t D) {
  if (R > D) throw ConfigError("check_identifiable_combinatorial: R exceeds D");
  if (patterns.D != D || patterns.R != R) {
    throw DimensionMismatch("check_identifiable_combinatorial: patterns built for other D, R");
  }
  IdentifiabilityVerdict v;
  v.method = CheckMethod::combinatorial;
  v.trials = 1;
  const std::size_t codim = D - R;
  if (patterns.size() < codim) {
    v.details = "only " + std::to_string(patterns.size()) +
                " constraint columns, need D-R = " + std::to_string(codim);
    return v;
  }
  if (codim > kMaxCombinatorialCodim) {
    throw ConfigError("check_identifiable_combinatorial: D-R = " + std::to_string(codim) +
                      " exceeds " + std::to_string(kMaxCombinatorialCodim) +
                      "; use algebraic check");
  }
  for (const auto& c : patterns.columns) {
    if (c.size() != R + 1) {
      throw DimensionMismatch("check_identifiable_combinatorial: pattern without R+1 rows");
    }
  }

  RowMatcher matcher(D);
  std::vector<std::size_t> chosen;
  std::vector<const std::vector<std::uint32_t>*> left;
  for (std::size_t i = 0; i < patterns.size() && chosen.size() < codim; ++i) {
    left.clear();
    for (std::size_t copy = 0; copy <= R; ++copy) left.push_back(&patterns.columns[i]);
    for (const auto c : chosen) left.push_back(&patterns.columns[c]);
    if (matcher.saturates(left)) chosen.push_back(i);
  }

  if (chosen.size() < codim) {
    v.details = "largest qualifying column set has " + std::to_string(chosen.size()) +
                " columns, need D-R = " + std::to_string(codim);
    return v;
  }
  if (!verify_all_subsets(patterns, chosen, R)) {
    v.inconclusive = true;
    v.details = "selected set failed exhaustive verification; use algebraic check";
    return v;
  }
  v.identifiable = true;
  v.certificate = std::move(chosen);
  v.details = "verified " + std::to_string((std::uint64_t{1} << codim) - 1) +
              " subsets of a " + std::to_string(codim) + "-column certificate";
  return v;
}

std::uint64_t coupon_collector_columns(std::size_t d, std::size_t m, std::size_t R) {
  if (m < 1 || m > d) throw ConfigError("coupon_collector_columns: need 1 <= m <= d");
  const auto n_int = binomial(d, m);
  if (n_int < 3) return static_cast<std::uint64_t>(R) * n_int;
  const double n = static_cast<double>(n_int);
  const double est = n * std::log(n) + (static_cast<double>(R) - 1.0) * n * std::log(std::log(n)) + n;
  return static_cast<std::uint64_t>(std::ceil(est));
}

Vector evaluate_variety(const VarietyCoefficients& V, const Eigen::Ref<const Vector>& x,
                        const TensorIndexMap& map) {
  if (V.D != map.D() || V.p != map.p()) {
    throw DimensionMismatch("evaluate_variety: coefficients built for another tensor space");
  }
  const Vector t = tensorize_column(x, map);
  Vector out(static_cast<Eigen::Index>(V.vectors.size()));
  for (std::size_t j = 0; j < V.vectors.size(); ++j) {
    if (static_cast<std::size_t>(V.vectors[j].size()) != V.D) {
      throw DimensionMismatch("evaluate_variety: coefficient vector has wrong length");
    }
    out[static_cast<Eigen::Index>(j)] = V.vectors[j].dot(t);
  }
  return out;
}

bool on_variety(const VarietyCoefficients& V, const Eigen::Ref<const Vector>& x,
                const TensorIndexMap& map) {
  const Vector res = evaluate_variety(V, x, map);
  const double xp = std::pow(x.norm(), static_cast<double>(map.p()));
  for (std::size_t j = 0; j < V.vectors.size(); ++j) {
    if (std::abs(res[static_cast<Eigen::Index>(j)]) > 1e-10 * V.vectors[j].norm() * xp) return false;
  }
  return true;
}

}  // namespace ladmc
