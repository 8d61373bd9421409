#pragma once

#include <cstdint>
#include <optional>

#include "ladmc/core.hpp"

namespace ladmc {

enum class StepRule {
  fixed,     // Z + step_size * P(M - Z)
  adaptive,  // normalized IHT: step = |P_U G|^2 / |P_mask P_U G|^2
};

enum class SvdBackend {
  exact,  // divide-and-conquer SVD of the full iterate
  gram,   // eigendecomposition of the smaller Gram matrix
};

/// Options for singular value projection (iterative hard thresholding).
struct SvpOptions {
  int rank = 1;
  StepRule step_rule = StepRule::adaptive;
  double step_size = 1.0;
  // Nesterov extrapolation between projections, restarted whenever the
  // observed residual increases.
  bool momentum = true;
  int max_iters = 500;
  double rel_tol = 1e-6;
  SvdBackend backend = SvdBackend::gram;
  // Reserved for randomized backends; both current backends are deterministic.
  std::uint64_t seed = 0;
};

struct SolveDiagnostics {
  int iterations_run = 0;
  double initial_residual = 0.0;  // RMS over observed entries of the zero matrix
  double final_residual = 0.0;    // RMS over observed entries at return
  bool converged = false;
  Vector singular_values;         // top rank+1 of the last projected matrix
};

struct SvpResult {
  Matrix completed;
  SolveDiagnostics diagnostics;
};

struct TruncatedSvd {
  Matrix U;  // rows x R
  Vector S;  // top min(R+1, min(rows, cols)) singular values, descending
  Matrix V;  // cols x R
};

/// Top-R singular triplets via a full thin SVD. Ties at sigma_R = sigma_{R+1}
/// keep the decomposition's first R triplets.
TruncatedSvd truncated_svd(const Matrix& M, int R);

/// Best rank-R approximation in Frobenius norm.
Matrix truncated_svd_project(const Matrix& M, int R);

/// Rank-R projection with a selectable backend. Fills singular_values with the
/// top R+1 values (fewer if the matrix is smaller).
Matrix rank_project(const Matrix& M, int R, SvdBackend backend,
                    Vector* singular_values = nullptr);

/// RMS of (A - B) over observed cells.
double observed_rms(const Matrix& A, const Matrix& B, const ObservationMask& mask);

/**
 * Low-rank completion by singular value projection.
 *
 * Starts from the zero-filled observations and iterates
 * Z <- P_R(Z + step * P_mask(M_obs - Z)) until the relative change drops below
 * rel_tol or max_iters is reached.
 */
SvpResult svp_complete(const Matrix& M_obs, const ObservationMask& mask,
                       const SvpOptions& opts);

/// Same iteration seeded from an arbitrary starting matrix, run for at most
/// `steps` projections. Used by the iterative pipeline.
SvpResult svp_refine(const Matrix& start, const Matrix& M_obs,
                     const ObservationMask& mask, const SvpOptions& opts, int steps);

}  // namespace ladmc
