#include "ladmc/lrmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ladmc {
namespace {

void require_feasible_rank(const Matrix& M, int R, const char* where) {
  const auto limit = std::min(M.rows(), M.cols());
  if (R < 1 || R > limit) {
    throw ConfigError(std::string(where) + ": rank " + std::to_string(R) +
                      " infeasible for a " + std::to_string(M.rows()) + "x" +
                      std::to_string(M.cols()) + " matrix");
  }
}

Vector top_values(const Vector& descending, int R) {
  const auto n = std::min<Eigen::Index>(R + 1, descending.size());
  return descending.head(n);
}

// Rank-R projection of Y. Also returns an orthonormal basis of the
// projected column space.
Matrix project_gram(const Matrix& Y, int R, Vector* singular_values, Matrix* col_basis) {
  const bool wide = Y.rows() <= Y.cols();
  const auto n = wide ? Y.rows() : Y.cols();
  Matrix G = Matrix::Zero(n, n);
  if (wide) {
    G.selfadjointView<Eigen::Lower>().rankUpdate(Y);
  } else {
    G.selfadjointView<Eigen::Lower>().rankUpdate(Y.transpose());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(G);
  if (eig.info() != Eigen::Success) {
    throw SolverError("rank_project: Gram eigendecomposition failed");
  }
  // Eigenvalues ascend; the dominant subspace is the trailing block.
  const Matrix basis = eig.eigenvectors().rightCols(R).rowwise().reverse();
  if (singular_values != nullptr) {
    const Vector ev = eig.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
    *singular_values = top_values(ev, R);
  }
  if (wide) {
    if (col_basis != nullptr) *col_basis = basis;
    return basis * (basis.transpose() * Y);
  }
  const Matrix yv = Y * basis;
  if (col_basis != nullptr) {
    *col_basis = yv.householderQr().householderQ() * Matrix::Identity(Y.rows(), R);
  }
  return yv * basis.transpose();
}

Matrix project_with_basis(const Matrix& M, int R, SvdBackend backend,
                          Vector* singular_values, Matrix* col_basis) {
  require_feasible_rank(M, R, "rank_project");
  if (backend == SvdBackend::gram) return project_gram(M, R, singular_values, col_basis);
  TruncatedSvd t = truncated_svd(M, R);
  if (singular_values != nullptr) *singular_values = t.S;
  Matrix out = t.U * t.S.head(R).asDiagonal() * t.V.transpose();
  if (col_basis != nullptr) *col_basis = std::move(t.U);
  return out;
}

}  // namespace

TruncatedSvd truncated_svd(const Matrix& M, int R) {
  require_feasible_rank(M, R, "truncated_svd");
  Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw SolverError("truncated_svd: SVD failed to converge");
  }
  return {svd.matrixU().leftCols(R), top_values(svd.singularValues(), R),
          svd.matrixV().leftCols(R)};
}

Matrix truncated_svd_project(const Matrix& M, int R) {
  const TruncatedSvd t = truncated_svd(M, R);
  return t.U * t.S.head(R).asDiagonal() * t.V.transpose();
}

Matrix rank_project(const Matrix& M, int R, SvdBackend backend, Vector* singular_values) {
  return project_with_basis(M, R, backend, singular_values, nullptr);
}

double observed_rms(const Matrix& A, const Matrix& B, const ObservationMask& mask) {
  require_congruent(A, mask, "observed_rms");
  require_congruent(B, mask, "observed_rms");
  const auto n = mask.count();
  if (n == 0) return 0.0;
  const double ss = mask.bits().select((A - B).array().square(), 0.0).sum();
  return std::sqrt(ss / static_cast<double>(n));
}

namespace {

SvpResult run_svp(Matrix Z, const Matrix& filled, const ObservationMask& mask,
                  const SvpOptions& opts, int steps) {
  require_feasible_rank(filled, opts.rank, "svp");
  if (mask.count() == 0) throw SolverError("svp: nothing observed");
  if (!(opts.rel_tol > 0.0)) throw ConfigError("svp: rel_tol must be positive");
  if (opts.step_rule == StepRule::fixed && !(opts.step_size > 0.0)) {
    throw ConfigError("svp: step_size must be positive");
  }

  const auto& bits = mask.bits();
  const double n_obs = static_cast<double>(mask.count());
  auto residual = [&](const Matrix& A) {
    return std::sqrt(bits.select((filled - A).array().square(), 0.0).sum() / n_obs);
  };

  SolveDiagnostics diag;
  diag.initial_residual = std::sqrt(filled.squaredNorm() / n_obs);

  Matrix extrapolated = Z;
  Matrix basis;  // dominant column space of the previous iterate
  Matrix best;
  double best_res = std::numeric_limits<double>::infinity();
  double prev_res = std::numeric_limits<double>::infinity();
  double momentum_k = 1.0;

  for (int t = 0; t < steps; ++t) {
    const Matrix grad = bits.select(filled - extrapolated, 0.0).matrix();

    double step = opts.step_size;
    if (opts.step_rule == StepRule::adaptive && basis.size() != 0) {
      const Matrix pg = basis * (basis.transpose() * grad);
      const double den = bits.select(pg.array().square(), 0.0).sum();
      if (den > 0.0) step = pg.squaredNorm() / den;
    }

    Vector sv;
    Matrix next = project_with_basis(extrapolated + step * grad, opts.rank, opts.backend,
                                     &sv, &basis);
    if (!next.allFinite()) {
      throw SolverError("svp: iterate diverged at iteration " + std::to_string(t + 1));
    }

    const double change = (next - Z).norm() / std::max(Z.norm(), 1e-300);
    const double res = residual(next);
    if (res < best_res) {
      best_res = res;
      best = next;
    }

    if (opts.momentum) {
      if (res > prev_res) {
        momentum_k = 1.0;
        extrapolated = next;
      } else {
        momentum_k += 1.0;
        extrapolated = next + ((momentum_k - 1.0) / (momentum_k + 2.0)) * (next - Z);
      }
    } else {
      extrapolated = next;
    }
    prev_res = res;
    Z = std::move(next);
    diag.singular_values = sv;
    diag.iterations_run = t + 1;
    if (change < opts.rel_tol) {
      diag.converged = true;
      break;
    }
  }

  diag.final_residual = residual(Z);
  if (diag.final_residual > diag.initial_residual && best.size() != 0) {
    Z = std::move(best);
    diag.final_residual = best_res;
  }
  return {std::move(Z), std::move(diag)};
}

}  // namespace

SvpResult svp_complete(const Matrix& M_obs, const ObservationMask& mask,
                       const SvpOptions& opts) {
  require_congruent(M_obs, mask, "svp_complete");
  Matrix filled = zero_fill(M_obs, mask);
  Matrix start = filled;
  return run_svp(std::move(start), filled, mask, opts, opts.max_iters);
}

SvpResult svp_refine(const Matrix& start, const Matrix& M_obs,
                     const ObservationMask& mask, const SvpOptions& opts, int steps) {
  require_congruent(M_obs, mask, "svp_refine");
  if (start.rows() != M_obs.rows() || start.cols() != M_obs.cols()) {
    throw DimensionMismatch("svp_refine: start and observations differ in shape");
  }
  const Matrix filled = zero_fill(M_obs, mask);
  return run_svp(start, filled, mask, opts, steps);
}

}  // namespace ladmc
