// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ladmc/csv.hpp"
#include "ladmc/harness.hpp"
#include "ladmc/identifiability.hpp"
#include "ladmc/pipeline.hpp"
#include "ladmc/preimage.hpp"
#include "ladmc/synth.hpp"
#include "ladmc/tensorize.hpp"

using namespace ladmc;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, double budget_s,
            const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = budget_s <= 0.0 || s < budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::string budget = budget_s > 0.0 ? " < " + io::format_double(budget_s) + " s" : "";
  std::printf("%s criterion %d: %s [%s] (%.2f s%s%s)\n", pass ? "PASS" : "FAIL", id,
              title.c_str(), o.detail.c_str(), s, budget.c_str(),
              in_time ? "" : ", over budget");
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Outcome rank_check(int K, int r, int d, int p, int N, std::size_t want) {
  const auto v = harness::rank_verify(K, r, d, p, N, 2024);
  Outcome o;
  o.pass = v.pass && v.formula == want && static_cast<std::size_t>(v.numerical_rank) == want;
  o.detail = "rank " + std::to_string(v.numerical_rank) + ", formula " +
             std::to_string(v.formula) + ", s_R/s_1 " + fmt(v.sigma_R_ratio) +
             ", s_R+1/s_1 " + fmt(v.sigma_next_ratio);
  return o;
}

// Two symmetric squares restricted to the D unique coordinates.
int intersection_dim(const Matrix& B1, const Matrix& B2) {
  const int r1 = numerical_rank(B1), r2 = numerical_rank(B2);
  Matrix both(B1.rows(), B1.cols() + B2.cols());
  both << B1, B2;
  return r1 + r2 - numerical_rank(both);
}

int principal_angle_dim(const Matrix& B1, const Matrix& B2) {
  const Matrix Q1 = Eigen::HouseholderQR<Matrix>(B1).householderQ() *
                    Matrix::Identity(B1.rows(), B1.cols());
  const Matrix Q2 = Eigen::HouseholderQR<Matrix>(B2).householderQ() *
                    Matrix::Identity(B2.rows(), B2.cols());
  const Vector c = Eigen::JacobiSVD<Matrix>(Q1.transpose() * Q2).singularValues();
  int n = 0;
  for (const double v : c) n += v > 1.0 - 1e-8;
  return n;
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();

  report(1, "rank of lifted UoS (K,r,d,p)=(10,2,15,2), N=1000 is 30", 10.0,
         [] { return rank_check(10, 2, 15, 2, 1000, 30); });

  report(2, "rank of lifted UoS (K,r,d,p)=(2,2,8,3), N=1000 is 8", 10.0,
         [] { return rank_check(2, 2, 8, 3, 1000, 8); });

  report(3, "minimal_samples(30,2)=8 and minimal_samples(2,2)=2", 0.0, [] {
    const auto a = minimal_samples(30, 2), b = minimal_samples(2, 2);
    return Outcome{a == 8 && b == 2, "got " + std::to_string(a) + ", " + std::to_string(b)};
  });

  report(4, "d=3, all 2-of-3 patterns, R=2 not identifiable over 5 seeds", 1.0, [] {
    Outcome o{true, "kernel dims"};
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto v = check_identifiable_algebraic(gen_all_patterns(3, 2), 2, 2, 1, seed);
      const std::size_t k = v.kernel_dim.value_or(0);
      o.pass = o.pass && !v.identifiable && !v.inconclusive && k > 2;
      o.detail += " " + std::to_string(k);
    }
    return o;
  });

  report(5, "d=6, all 4-of-6 patterns, R=2 identifiable over 5 seeds; stacked identity R=3, D=12",
         5.0, [] {
           Outcome o{true, "kernel dims"};
           for (std::uint64_t seed = 1; seed <= 5; ++seed) {
             const auto v = check_identifiable_algebraic(gen_all_patterns(6, 4), 2, 2, 1, seed);
             o.pass = o.pass && v.identifiable && v.kernel_dim.value_or(0) == 2;
             o.detail += " " + std::to_string(v.kernel_dim.value_or(0));
           }
           ObservationMask ups(12, 9);
           for (Eigen::Index j = 0; j < 9; ++j) {
             for (Eigen::Index i = 0; i < 3; ++i) ups.set(i, j);
             ups.set(3 + j, j);
           }
           const auto c = check_identifiable_combinatorial(build_constraint_patterns(ups, 3), 3, 12);
           o.pass = o.pass && c.identifiable;
           o.detail += std::string("; combinatorial ") + (c.identifiable ? "true" : "false");
           return o;
         });

  // Criteria 6 and 7 share instances and one time budget.
  harness::PhaseGridConfig cfg;
  cfg.d = 15;
  cfg.r = 2;
  cfg.K_range = {10};
  cfg.m_range = {9};
  cfg.N_rule.kind = harness::ColumnRule::Kind::fixed;
  cfg.N_rule.value = 2700;
  cfg.trials = 10;
  cfg.seed = 7;
  cfg.ladmc.svp.max_iters = 2000;
  cfg.ladmc.svp.rel_tol = 1e-8;
  cfg.lrmc.max_iters = 2000;
  cfg.lrmc.rel_tol = 1e-8;
  int ladmc_ok = 0, lrmc_fail = 0;
  double budget_used = 0.0;
  report(6, "LADMC d=15 r=2 K=10 N=2700 m=9 R=30: NRMSE < 1e-4 in >= 8/10", 300.0, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o{false, "nrmse"};
    for (int t = 0; t < cfg.trials; ++t) {
      const auto r = harness::run_trial(cfg, 10, 9, t);
      ladmc_ok += !r.failed && r.nrmse < 1e-4;
      o.detail += " " + (r.failed ? "error" : fmt(r.nrmse));
    }
    budget_used = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.detail = std::to_string(ladmc_ok) + "/10 ok;" + o.detail.substr(5);
    o.pass = ladmc_ok >= 8;
    return o;
  });

  report(7, "LRMC rank 15 on the same instances: NRMSE > 1e-2 in >= 9/10", 0.0, [&] {
    auto lc = cfg;
    lc.algorithm = harness::Algorithm::lrmc;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    for (int t = 0; t < cfg.trials; ++t) {
      const auto r = harness::run_trial(lc, 10, 9, t);
      lrmc_fail += !r.failed && r.nrmse > 1e-2;
      o.detail += " " + (r.failed ? "error" : fmt(r.nrmse));
    }
    budget_used += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.pass = lrmc_fail >= 9 && ladmc_ok >= 8 && budget_used < 300.0;
    o.detail = std::to_string(lrmc_fail) + "/10 fail; shared budget " + fmt(budget_used) +
               " s of 300;" + o.detail;
    return o;
  });

  report(8, "pre-image of 1000 random x in R^15 with one observed entry, rel err < 1e-10", 5.0,
         [] {
           std::mt19937_64 rng(8);
           std::normal_distribution<double> g;
           std::uniform_int_distribution<int> pick(0, 14);
           const TensorIndexMap map(15, 2);
           double worst = 0.0;
           for (int n = 0; n < 1000; ++n) {
             Vector x(15);
             for (auto& v : x) v = g(rng);
             const int i = pick(rng);
             const ObservedEntry obs[] = {{i, x[i]}};
             const auto res = preimage_column(tensorize_column(x, map), map, obs);
             worst = std::max(worst, (res.x - x).norm() / x.norm());
           }
           return Outcome{worst < 1e-10, "worst " + fmt(worst)};
         });

  report(9, "three quadratics vanish on e1, e2, (1,1,1) and multiples, not on (1,0,1)", 0.0, [] {
    VarietyCoefficients V{6, 2, {}};
    Vector v(6);
    v << 0, -5.0 / 6, 1.0 / 2, 0, 1.0 / 6, 1.0 / 6;
    V.vectors.push_back(v);
    v << 0, -1.0 / 6, -1.0 / 2, 0, 5.0 / 6, -1.0 / 6;
    V.vectors.push_back(v);
    v << 0, -1.0 / 6, -1.0 / 2, 0, -1.0 / 6, 5.0 / 6;
    V.vectors.push_back(v);
    const TensorIndexMap map(3, 2);
    double worst = 0.0;
    for (const Vector& base : {Vector(Vector::Unit(3, 0)), Vector(Vector::Unit(3, 1)),
                               Vector(Vector::Ones(3))}) {
      for (const double c : {1.0, -1.0, 0.25, -3.0, 7.5, 10.0}) {
        worst = std::max(worst, evaluate_variety(V, c * base, map).cwiseAbs().maxCoeff());
      }
    }
    Vector off(3);
    off << 1, 0, 1;
    const double off_res = evaluate_variety(V, off, map).cwiseAbs().maxCoeff();
    return Outcome{worst < 1e-12 && off_res > 1e-12,
                   "max on-variety " + fmt(worst) + ", off-variety " + fmt(off_res)};
  });

  report(10, "two 3-dim subspaces of R^10 sharing a line: dim of symmetric-square meet is 1",
         5.0, [] {
           std::mt19937_64 rng(10);
           std::normal_distribution<double> g;
           auto gauss = [&](int r, int c) {
             Matrix M(r, c);
             for (auto& v : M.reshaped()) v = g(rng);
             return M;
           };
           const TensorIndexMap map(10, 2);
           const Matrix shared = gauss(10, 1);
           Matrix U1(10, 3), U2(10, 3);
           U1 << shared, gauss(10, 2);
           U2 << shared, gauss(10, 2);
           const Matrix B1 = spanning_set_uos({U1}, map);
           const Matrix B2 = spanning_set_uos({U2}, map);
           const int a = intersection_dim(B1, B2), b = principal_angle_dim(B1, B2);
           return Outcome{a == 1 && b == 1, "rank count " + std::to_string(a) +
                                                 ", principal angles " + std::to_string(b)};
         });

  report(11, "desk-scale substitution for full grids, real data and the VMC comparison", 0.0,
         [&] {
           Outcome o;
           o.pass = ladmc_ok >= 8 && lrmc_fail >= 9;
           o.detail =
               "stand-ins are the unit property suites and criteria 6-7 (" +
               std::string(o.pass ? "passing" : "not passing") + ")";
           const char* oil = std::getenv("LADMC_OILFLOW_CSV");
           if (oil == nullptr || *oil == '\0') {
             o.detail += "; oil flow file not supplied, Table I row skipped";
             return o;
           }
           const auto data = io::read_matrix_csv(oil);
           harness::RealConfig rc;
           rc.split.fractions = std::vector<double>{0.5, 0.25, 0.25};
           rc.seed = 11;
           for (int R = 5; R < 78; R += 5) rc.ladmc_ranks.push_back(R);
           for (int R = 1; R < 12; ++R) rc.lrmc_ranks.push_back(R);
           const auto res = harness::run_real_experiment(data.values, data.mask, rc);
           const double want[] = {0.237, 0.164, 0.155, 0.127};
           for (std::size_t k = 0; k < res.methods.size(); ++k) {
             const auto& m = res.methods[k];
             o.detail += "; " + m.method + " " + fmt(m.test_rmse) + " vs " + fmt(want[k]);
             // The LRMC row uses a different solver and is reported only.
             if (m.method != "lrmc" && std::abs(m.test_rmse - want[k]) > 0.03) o.pass = false;
           }
           return o;
         });

  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d of 11 criteria failed; total %.1f s\n", failures, total);
  return failures == 0 ? 0 : 1;
}
