#pragma once

#include <optional>
#include <vector>

#include "ladmc/core.hpp"
#include "ladmc/lrmc.hpp"
#include "ladmc/preimage.hpp"

namespace ladmc {

struct LadmcConfig {
  int p = 2;
  std::optional<int> rank;  // tensor-space rank; empty selects by spectral gap
  SvpOptions svp;           // svp.rank is overwritten by the resolved rank
  int iladmc_inner_T = 30;
  int iladmc_max_outer = 100;
  double iladmc_rel_tol = 1e-7;
  bool augment_ones = false;
  // Rescale each column by the norm of its observed entries before lifting.
  // Column scaling leaves the tensorized column space unchanged.
  bool normalize_columns = true;
  // Weight tensor row q by sqrt of its multinomial coefficient during the
  // solve, so inner products of lifted columns equal (x^T y)^p. Row scaling
  // leaves the rank and the pre-image unchanged once undone.
  bool weighted_lift = true;
  double rank1_flag_ratio = 0.1;
  HopmOptions hopm;
};

struct CompletionReport {
  Matrix X_hat;
  int rank_used = 0;
  int outer_iterations = 0;
  int svp_iterations = 0;  // total projections across all outer iterations
  bool converged = false;
  double tensor_residual = 0.0;  // observed-entry RMS in the (scaled) tensor space
  std::vector<double> per_column_rank1_ratio;
  std::vector<Eigen::Index> flagged_columns;  // rank1 ratio above the flag level
  std::vector<Eigen::Index> empty_columns;    // no observations, returned as zero
  std::optional<double> nrmse;
  std::optional<bool> success;
};

/// |X_hat - X_true|_F / |X_true|_F.
double nrmse(const Matrix& X_hat, const Matrix& X_true);

/// Fill nrmse and success (nrmse < success_tol) from ground truth.
void score(CompletionReport& report, const Matrix& X_true, double success_tol = 1e-4);

/// Rank R maximizing sigma_R / sigma_{R+1} over the given descending spectrum.
int select_rank_by_gap(const Vector& singular_values);

/// Tensorize, complete in tensor space, and map each column back.
CompletionReport ladmc(const Matrix& X_obs, const ObservationMask& mask,
                       const LadmcConfig& cfg);

/// Alternate T tensor-space projections with pre-image and known-entry refill.
CompletionReport iladmc(const Matrix& X_obs, const ObservationMask& mask,
                        const LadmcConfig& cfg);

/// Plain SVP completion in the original space.
CompletionReport lrmc_baseline(const Matrix& X_obs, const ObservationMask& mask,
                               const SvpOptions& svp);

}  // namespace ladmc
