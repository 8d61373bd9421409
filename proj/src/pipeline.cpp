#include "ladmc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "ladmc/tensorize.hpp"

namespace ladmc {
namespace {

// sqrt(p! / prod_k c_k!) for the multiplicities c_k of each sorted multi-index.
Vector multinomial_weights(const TensorIndexMap& map) {
  Vector w(static_cast<Eigen::Index>(map.D()));
  for (std::size_t q = 0; q < map.D(); ++q) {
    const auto e = map.entry(q);
    double coeff = std::tgamma(static_cast<double>(e.size()) + 1.0);
    std::size_t run = 1;
    for (std::size_t k = 1; k <= e.size(); ++k) {
      if (k < e.size() && e[k] == e[k - 1]) {
        ++run;
      } else {
        coeff /= std::tgamma(static_cast<double>(run) + 1.0);
        run = 1;
      }
    }
    w[static_cast<Eigen::Index>(q)] = std::sqrt(coeff);
  }
  return w;
}

// Problem mapped into the space where completion happens: optional constant
// row, per-column rescaling, then tensorization.
struct LiftedProblem {
  Matrix work;
  ObservationMask work_mask;
  Vector scale;
  Vector row_weight;  // applied to tensor.values; ones when unweighted
  TensorIndexMap map;
  TensorizedMatrix tensor;
  int rank = 0;
};

LiftedProblem lift_problem(const Matrix& X_obs, const ObservationMask& mask,
                           const LadmcConfig& cfg) {
  require_congruent(X_obs, mask, "ladmc");
  if (cfg.p < 2) throw ConfigError("ladmc: tensor order p must be >= 2");
  if (X_obs.rows() < 1) throw ConfigError("ladmc: matrix has no rows");

  Matrix work;
  ObservationMask work_mask;
  if (cfg.augment_ones) {
    std::tie(work, work_mask) = augment_ones(zero_fill(X_obs, mask), mask);
  } else {
    work = zero_fill(X_obs, mask);
    work_mask = mask;
  }

  Vector scale = Vector::Ones(work.cols());
  if (cfg.normalize_columns) {
    for (Eigen::Index j = 0; j < work.cols(); ++j) {
      const double n = work.col(j).norm();  // unobserved cells are zero
      if (n > 0.0) {
        scale[j] = n;
        work.col(j) /= n;
      }
    }
  }

  TensorIndexMap map(static_cast<std::size_t>(work.rows()), static_cast<std::size_t>(cfg.p));
  TensorizedMatrix tensor = tensorize_matrix(work, work_mask, map);
  Vector row_weight = Vector::Ones(static_cast<Eigen::Index>(map.D()));
  if (cfg.weighted_lift) {
    row_weight = multinomial_weights(map);
    tensor.values = row_weight.asDiagonal() * tensor.values;
  }

  const auto D = static_cast<int>(map.D());
  int rank = 0;
  if (cfg.rank) {
    rank = *cfg.rank;
    if (rank < 1 || rank > D) {
      throw ConfigError("ladmc: rank " + std::to_string(rank) +
                        " outside [1, D] with D = " + std::to_string(D));
    }
    if (rank > tensor.values.cols()) {
      throw ConfigError("ladmc: rank " + std::to_string(rank) + " exceeds column count " +
                        std::to_string(tensor.values.cols()));
    }
  } else {
    Eigen::BDCSVD<Matrix> svd(tensor.values);
    rank = select_rank_by_gap(svd.singularValues());
  }
  return {std::move(work),       std::move(work_mask), std::move(scale),
          std::move(row_weight), std::move(map),       std::move(tensor), rank};
}

// Pre-image of every tensor column, with observed working-space entries
// written back. Z is in the weighted coordinates of lp.tensor.
Matrix map_back(const LiftedProblem& lp, const Matrix& Z_weighted, const LadmcConfig& cfg,
                std::vector<double>& ratios) {
  const Matrix Z = lp.row_weight.cwiseInverse().asDiagonal() * Z_weighted;
  Matrix out(lp.work.rows(), lp.work.cols());
  ratios.assign(static_cast<std::size_t>(Z.cols()), 0.0);
  for (Eigen::Index j = 0; j < Z.cols(); ++j) {
    const auto obs = observed_entries(lp.work, lp.work_mask, j);
    PreimageResult pre = preimage_column(Z.col(j), lp.map, obs, cfg.hopm);
    for (const auto& e : obs) pre.x[e.index] = e.value;
    out.col(j) = pre.x;
    ratios[static_cast<std::size_t>(j)] = pre.rank1_ratio;
  }
  return out;
}

void finalize(const LiftedProblem& lp, const Matrix& work_est, const Matrix& X_obs,
              const ObservationMask& mask, const LadmcConfig& cfg,
              CompletionReport& report) {
  Matrix est = work_est;
  for (Eigen::Index j = 0; j < est.cols(); ++j) est.col(j) *= lp.scale[j];
  report.X_hat = cfg.augment_ones ? Matrix(est.bottomRows(X_obs.rows())) : est;
  for (Eigen::Index j = 0; j < X_obs.cols(); ++j) {
    if (mask.column_count(j) == 0) {
      report.X_hat.col(j).setZero();
      report.empty_columns.push_back(j);
      continue;
    }
    for (Eigen::Index i = 0; i < X_obs.rows(); ++i) {
      if (mask(i, j)) report.X_hat(i, j) = X_obs(i, j);
    }
  }
  report.flagged_columns.clear();
  for (std::size_t j = 0; j < report.per_column_rank1_ratio.size(); ++j) {
    if (report.per_column_rank1_ratio[j] > cfg.rank1_flag_ratio) {
      report.flagged_columns.push_back(static_cast<Eigen::Index>(j));
    }
  }
}

}  // namespace

double nrmse(const Matrix& X_hat, const Matrix& X_true) {
  if (X_hat.rows() != X_true.rows() || X_hat.cols() != X_true.cols()) {
    throw DimensionMismatch("nrmse: shapes differ");
  }
  const double denom = X_true.norm();
  if (!(denom > 0.0)) throw ConfigError("nrmse: ground truth is zero");
  return (X_hat - X_true).norm() / denom;
}

void score(CompletionReport& report, const Matrix& X_true, double success_tol) {
  report.nrmse = nrmse(report.X_hat, X_true);
  report.success = *report.nrmse < success_tol;
}

int select_rank_by_gap(const Vector& s) {
  const auto n = s.size();
  if (n < 2 || !(s[0] > 0.0)) return 1;
  const double floor = s[0] * 1e-14;
  int best = 1;
  double best_ratio = -1.0;
  for (Eigen::Index R = 1; R < n; ++R) {
    if (!(s[R - 1] > floor)) break;
    const double ratio = s[R - 1] / std::max(s[R], floor);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = static_cast<int>(R);
    }
  }
  return best;
}

CompletionReport ladmc(const Matrix& X_obs, const ObservationMask& mask,
                       const LadmcConfig& cfg) {
  const LiftedProblem lp = lift_problem(X_obs, mask, cfg);
  CompletionReport report;
  report.rank_used = lp.rank;

  SvpOptions svp = cfg.svp;
  svp.rank = lp.rank;
  const SvpResult solved = svp_complete(lp.tensor.values, lp.tensor.mask, svp);
  report.outer_iterations = 1;
  report.svp_iterations = solved.diagnostics.iterations_run;
  report.converged = solved.diagnostics.converged;
  report.tensor_residual = solved.diagnostics.final_residual;

  const Matrix est = map_back(lp, solved.completed, cfg, report.per_column_rank1_ratio);
  finalize(lp, est, X_obs, mask, cfg, report);
  return report;
}

CompletionReport iladmc(const Matrix& X_obs, const ObservationMask& mask,
                        const LadmcConfig& cfg) {
  if (cfg.iladmc_inner_T < 1) throw ConfigError("iladmc: inner T must be >= 1");
  if (cfg.iladmc_max_outer < 1) throw ConfigError("iladmc: max outer must be >= 1");
  const LiftedProblem lp = lift_problem(X_obs, mask, cfg);
  CompletionReport report;
  report.rank_used = lp.rank;

  SvpOptions svp = cfg.svp;
  svp.rank = lp.rank;

  Matrix current = lp.work;  // zero-filled, scaled
  for (int outer = 1; outer <= cfg.iladmc_max_outer; ++outer) {
    const Matrix start = lp.row_weight.asDiagonal() * tensorize_all(current, lp.map);
    const SvpResult inner = svp_refine(start, lp.tensor.values,
                                       lp.tensor.mask, svp, cfg.iladmc_inner_T);
    report.svp_iterations += inner.diagnostics.iterations_run;
    report.tensor_residual = inner.diagnostics.final_residual;

    Matrix next = map_back(lp, inner.completed, cfg, report.per_column_rank1_ratio);
    const double change = (next - current).norm() / std::max(current.norm(), 1e-300);
    current = std::move(next);
    report.outer_iterations = outer;
    if (change < cfg.iladmc_rel_tol) {
      report.converged = true;
      break;
    }
  }
  finalize(lp, current, X_obs, mask, cfg, report);
  return report;
}

CompletionReport lrmc_baseline(const Matrix& X_obs, const ObservationMask& mask,
                               const SvpOptions& svp) {
  require_congruent(X_obs, mask, "lrmc_baseline");
  const SvpResult solved = svp_complete(X_obs, mask, svp);
  CompletionReport report;
  report.rank_used = svp.rank;
  report.outer_iterations = 1;
  report.svp_iterations = solved.diagnostics.iterations_run;
  report.converged = solved.diagnostics.converged;
  report.tensor_residual = solved.diagnostics.final_residual;
  report.X_hat = solved.completed;
  for (Eigen::Index j = 0; j < X_obs.cols(); ++j) {
    if (mask.column_count(j) == 0) report.empty_columns.push_back(j);
    for (Eigen::Index i = 0; i < X_obs.rows(); ++i) {
      if (mask(i, j)) report.X_hat(i, j) = X_obs(i, j);
    }
  }
  return report;
}

}  // namespace ladmc
