#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ladmc/csv.hpp"
#include "ladmc/harness.hpp"
#include "ladmc/identifiability.hpp"
#include "ladmc/pipeline.hpp"
#include "ladmc/synth.hpp"
#include "ladmc/tensorize.hpp"

namespace fs = std::filesystem;
using namespace ladmc;
using harness::Report;

namespace {

struct SolverFlags {
  int max_iters = 2000;
  double rel_tol = 1e-8;
  std::string step = "adaptive";
  double step_size = 1.0;
  bool no_momentum = false;
  std::string svd = "gram";

  void add(CLI::App* app) {
    app->add_option("--max-iters", max_iters, "SVP iteration cap");
    app->add_option("--tol", rel_tol, "relative change stopping tolerance");
    app->add_option("--step", step, "step rule")->check(CLI::IsMember({"adaptive", "fixed"}));
    app->add_option("--step-size", step_size, "step size for --step fixed");
    app->add_flag("--no-momentum", no_momentum, "disable extrapolation");
    app->add_option("--svd", svd, "rank projection backend")
        ->check(CLI::IsMember({"gram", "exact"}));
  }

  SvpOptions options() const {
    SvpOptions o;
    o.max_iters = max_iters;
    o.rel_tol = rel_tol;
    o.step_rule = step == "fixed" ? StepRule::fixed : StepRule::adaptive;
    o.step_size = step_size;
    o.momentum = !no_momentum;
    o.backend = svd == "exact" ? SvdBackend::exact : SvdBackend::gram;
    return o;
  }
};

std::optional<int> parse_rank(const std::string& s) {
  if (s == "auto") return std::nullopt;
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || v < 1) throw ConfigError("--rank expects a positive integer or 'auto'");
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& s, const char* what) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-', 1);
    try {
      if constexpr (std::is_integral_v<T>) {
        if (dash != std::string::npos) {
          const T a = static_cast<T>(std::stoll(item.substr(0, dash)));
          const T b = static_cast<T>(std::stoll(item.substr(dash + 1)));
          for (T v = a; v <= b; ++v) out.push_back(v);
          continue;
        }
        out.push_back(static_cast<T>(std::stoll(item)));
      } else {
        out.push_back(static_cast<T>(std::stod(item)));
      }
    } catch (const std::exception&) {
      throw ConfigError(std::string("cannot parse ") + what + " list '" + s + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string(what) + " list is empty");
  return out;
}

void print_report(const Report& r) { r.write(std::cout); }

int run_synth(int d, int K, int r, int N, int m, std::uint64_t seed, const fs::path& dir) {
  fs::create_directories(dir);
  const auto data = gen_uos(d, K, r, N, seed);
  const auto mask = gen_mask_uniform(d, N, m, seed + 1);
  io::write_matrix_csv(dir / "X_true.csv", data.X);
  io::write_mask_csv(dir / "mask.csv", mask);
  io::write_matrix_csv(dir / "X_obs.csv", data.X, &mask);
  Report rep;
  rep.set("d", d);
  rep.set("K", K);
  rep.set("r", r);
  rep.set("N", N);
  rep.set("m", m);
  rep.set("seed", static_cast<long long>(seed));
  rep.set("matrix_rank", std::min(K * r, d));
  rep.set("tensor_rank_p2", uos_tensor_rank(static_cast<std::size_t>(K),
                                            static_cast<std::size_t>(r),
                                            static_cast<std::size_t>(d), 2));
  rep.write(dir / "synth.txt");
  print_report(rep);
  return 0;
}

struct CompleteArgs {
  std::string input, mask, truth, rank = "auto", algorithm = "ladmc";
  int order = 2;
  int inner_T = 30;
  int max_outer = 100;
  bool augment = false;
  bool no_normalize = false;
  double success_tol = 1e-4;
  std::string out_dir = ".";
  SolverFlags solver;
};

int run_complete(const CompleteArgs& a) {
  const auto alg = harness::parse_algorithm(a.algorithm);
  auto in = io::read_matrix_csv(a.input);
  ObservationMask mask = in.mask;
  if (!a.mask.empty()) {
    mask = io::read_mask_csv(a.mask);
    require_congruent(in.values, mask, "--mask");
    for (Eigen::Index j = 0; j < mask.cols(); ++j) {
      for (Eigen::Index i = 0; i < mask.rows(); ++i) {
        if (mask(i, j) && !in.mask(i, j)) {
          throw ParseError(a.mask + ": cell (" + std::to_string(i + 1) + ", " +
                           std::to_string(j + 1) + ") is marked observed but the input is blank");
        }
      }
    }
  }
  const Matrix X_obs = zero_fill(in.values, mask);
  const auto rank = parse_rank(a.rank);

  CompletionReport rep;
  const auto t0 = std::chrono::steady_clock::now();
  if (alg == harness::Algorithm::lrmc) {
    SvpOptions svp = a.solver.options();
    if (!rank) throw ConfigError("--rank auto is only supported for ladmc and iladmc");
    svp.rank = *rank;
    rep = lrmc_baseline(X_obs, mask, svp);
  } else {
    LadmcConfig cfg;
    cfg.p = a.order;
    cfg.rank = rank;
    cfg.svp = a.solver.options();
    cfg.iladmc_inner_T = a.inner_T;
    cfg.iladmc_max_outer = a.max_outer;
    cfg.augment_ones = a.augment;
    cfg.normalize_columns = !a.no_normalize;
    rep = alg == harness::Algorithm::ladmc ? ladmc::ladmc(X_obs, mask, cfg)
                                           : ladmc::iladmc(X_obs, mask, cfg);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::optional<Matrix> truth;
  if (!a.truth.empty()) {
    truth = io::read_matrix_csv(a.truth).values;
    score(rep, *truth, a.success_tol);
  }

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  io::write_matrix_csv(dir / "X_hat.csv", rep.X_hat);
  Report r;
  r.set("algorithm", harness::algorithm_name(alg));
  if (alg != harness::Algorithm::lrmc) r.set("order", a.order);
  if (alg == harness::Algorithm::iladmc) r.set("inner_T", a.inner_T);
  r.set("rank_used", rep.rank_used);
  r.set("iterations", rep.svp_iterations);
  r.set("outer_iterations", rep.outer_iterations);
  r.set("converged", rep.converged);
  r.set("residual", rep.tensor_residual);
  r.set("flagged_columns", rep.flagged_columns.size());
  r.set("empty_columns", rep.empty_columns.size());
  if (rep.nrmse) {
    r.set("nrmse", *rep.nrmse);
    r.set("success", *rep.success);
    r.set("success_tol", a.success_tol);
  }
  r.set("seconds", seconds);
  r.write(dir / "report.txt");
  print_report(r);
  return 0;
}

struct CheckArgs {
  std::string patterns;
  bool all_patterns = false;
  bool tensor_space = false;
  int d = 0, m = 0, copies = 1;
  int rank = 1;
  int order = 2;
  std::string method = "algebraic";
  int trials = 5;
  std::uint64_t seed = 0;
  std::string out_dir;
};

int run_check(const CheckArgs& a) {
  ObservationMask omega;
  if (!a.patterns.empty()) {
    omega = io::read_mask_csv(a.patterns);
  } else if (a.all_patterns) {
    omega = gen_all_patterns(a.d, a.m, a.copies);
  } else {
    throw ConfigError("check needs --patterns FILE or --all-patterns --d D --m M");
  }
  const auto R = static_cast<std::size_t>(a.rank);
  const auto p = static_cast<std::size_t>(a.order);

  IdentifiabilityVerdict v;
  std::size_t D = 0;
  if (a.tensor_space) {
    D = static_cast<std::size_t>(omega.rows());
    if (a.method != "combinatorial") {
      throw ConfigError("--tensor-space patterns are checked with --method combinatorial");
    }
    v = check_identifiable_combinatorial(build_constraint_patterns(omega, R), R, D);
  } else {
    const TensorIndexMap map(static_cast<std::size_t>(omega.rows()), p);
    D = map.D();
    if (a.method == "combinatorial") {
      const auto pats = build_constraint_patterns(tensorize_mask_matrix(omega, map), R);
      v = check_identifiable_combinatorial(pats, R, D);
    } else {
      v = check_identifiable_algebraic(omega, R, p, static_cast<std::size_t>(a.trials), a.seed);
    }
  }

  const auto ell = minimal_samples(R, p);
  Report r;
  r.set("verdict", v.inconclusive ? "inconclusive"
                                  : (v.identifiable ? "identifiable" : "not identifiable"));
  r.set("method", v.method == CheckMethod::combinatorial ? "combinatorial" : "algebraic");
  r.set("R", R);
  r.set("p", p);
  r.set("D", D);
  r.set("ell", ell);
  r.set("sufficient_m", ell + 2);
  r.set("note", "m < " + std::to_string(ell) + " never suffices; m >= " +
                    std::to_string(ell + 2) + " suffices when all patterns are present");
  if (v.kernel_dim) r.set("kernel_dim", *v.kernel_dim);
  r.set("trials", v.trials);
  if (!v.details.empty()) r.set("details", v.details);
  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    r.write(fs::path(a.out_dir) / "verdict.txt");
  }
  print_report(r);
  return 0;
}

struct PhaseArgs {
  int d = 15, r = 2, order = 2;
  std::string K = "2,4,6,8,10", m = "4-12";
  int n_per = 50;
  int n_fixed = 0;
  int n_cap = 3000;
  int trials = 10;
  double success_tol = 1e-4;
  std::string algorithm = "ladmc";
  std::uint64_t seed = 0;
  int workers = 0;
  int inner_T = 30;
  std::string out_dir = "phase_out";
  SolverFlags solver;
};

int run_phase(const PhaseArgs& a) {
  harness::PhaseGridConfig cfg;
  cfg.d = a.d;
  cfg.r = a.r;
  cfg.p = a.order;
  cfg.K_range = parse_list<int>(a.K, "K");
  cfg.m_range = parse_list<int>(a.m, "m");
  if (a.n_fixed > 0) {
    cfg.N_rule.kind = harness::ColumnRule::Kind::fixed;
    cfg.N_rule.value = a.n_fixed;
  } else {
    cfg.N_rule.value = a.n_per;
    cfg.N_rule.cap = a.n_cap;
  }
  cfg.trials = a.trials;
  cfg.success_tol = a.success_tol;
  cfg.algorithm = harness::parse_algorithm(a.algorithm);
  cfg.seed = a.seed;
  cfg.workers = a.workers > 0 ? a.workers : harness::default_workers();
  cfg.ladmc.svp = a.solver.options();
  cfg.ladmc.iladmc_inner_T = a.inner_T;
  cfg.lrmc = a.solver.options();

  const auto rec = harness::run_phase_grid(cfg);
  harness::write_phase_outputs(a.out_dir, rec);
  harness::write_phase_csv(std::cout, rec);
  return 0;
}

int run_rank_verify(int K, int r, int d, int p, int N, std::uint64_t seed) {
  const auto v = harness::rank_verify(K, r, d, p, N, seed);
  Report rep;
  rep.set("numerical_rank", v.numerical_rank);
  rep.set("formula", v.formula);
  rep.set("sigma_R_ratio", v.sigma_R_ratio);
  rep.set("sigma_next_ratio", v.sigma_next_ratio);
  rep.set("pass", v.pass);
  print_report(rep);
  return v.pass ? 0 : 1;
}

struct RealArgs {
  std::string input, mask, split = "0.5,0.25,0.25", split_counts;
  std::string ladmc_ranks, lrmc_ranks;
  int order = 2;
  int inner_T = 30;
  bool augment = false;
  std::uint64_t seed = 0;
  std::string out_dir = "real_out";
  SolverFlags solver;
};

int run_real(const RealArgs& a) {
  auto in = io::read_matrix_csv(a.input);
  ObservationMask observed = in.mask;
  if (!a.mask.empty()) observed = io::read_mask_csv(a.mask);
  const auto d = static_cast<int>(in.values.rows());
  const TensorIndexMap map(static_cast<std::size_t>(d), static_cast<std::size_t>(a.order));

  harness::RealConfig cfg;
  if (!a.split_counts.empty()) {
    cfg.split.counts = parse_list<int>(a.split_counts, "split count");
  } else {
    cfg.split.fractions = parse_list<double>(a.split, "split fraction");
  }
  if (a.lrmc_ranks.empty()) {
    for (int R = 1; R < d; ++R) cfg.lrmc_ranks.push_back(R);
  } else {
    cfg.lrmc_ranks = parse_list<int>(a.lrmc_ranks, "lrmc rank");
  }
  if (a.ladmc_ranks.empty()) {
    const int D = static_cast<int>(map.D());
    const int step = std::max(1, D / 12);
    for (int R = step; R < D; R += step) cfg.ladmc_ranks.push_back(R);
  } else {
    cfg.ladmc_ranks = parse_list<int>(a.ladmc_ranks, "ladmc rank");
  }
  cfg.seed = a.seed;
  cfg.ladmc.p = a.order;
  cfg.ladmc.svp = a.solver.options();
  cfg.ladmc.iladmc_inner_T = a.inner_T;
  cfg.ladmc.augment_ones = a.augment;
  cfg.lrmc = a.solver.options();

  const auto res = harness::run_real_experiment(zero_fill(in.values, observed), observed, cfg);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  std::ofstream table(dir / "rmse.csv");
  table << "method,rank,validation_rmse,test_rmse\n";
  for (const auto& m : res.methods) {
    table << m.method << ',' << (m.rank ? std::to_string(*m.rank) : std::string()) << ','
          << io::format_double(m.validation_rmse) << ',' << io::format_double(m.test_rmse)
          << '\n';
  }
  Report r;
  r.set("excluded_columns", res.excluded_columns);
  r.set("train_entries", res.train_entries);
  r.set("validation_entries", res.validation_entries);
  r.set("test_entries", res.test_entries);
  for (const auto& m : res.methods) {
    r.set(m.method + ".test_rmse", m.test_rmse);
    if (m.rank) r.set(m.method + ".rank", *m.rank);
  }
  r.write(dir / "report.txt");
  print_report(r);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low algebraic dimension matrix completion"};
  app.set_config("--config", "", "key=value config file; flags override");
  app.fallthrough();
  app.require_subcommand(1);

  int sd = 15, sK = 10, sr = 2, sN = 500, sm = 9;
  std::uint64_t sseed = 0;
  std::string sdir = "synth_out";
  auto* synth = app.add_subcommand("synth", "generate a union-of-subspaces sample and mask");
  synth->add_option("--d", sd);
  synth->add_option("--K", sK);
  synth->add_option("--r", sr);
  synth->add_option("--N", sN);
  synth->add_option("--m", sm, "observed entries per column");
  synth->add_option("--seed", sseed);
  synth->add_option("--out-dir", sdir);

  CompleteArgs ca;
  auto* complete = app.add_subcommand("complete", "complete a partially observed matrix");
  complete->add_option("--input", ca.input, "matrix CSV, blank or NaN cells missing")->required();
  complete->add_option("--mask", ca.mask, "0/1 mask CSV");
  complete->add_option("--truth", ca.truth, "ground truth CSV for scoring");
  complete->add_option("--rank", ca.rank, "rank N, or auto for the spectral-gap heuristic");
  complete->add_option("--order", ca.order, "tensor order p")->check(CLI::Range(2, 3));
  complete->add_option("--algorithm", ca.algorithm)
      ->check(CLI::IsMember({"ladmc", "iladmc", "lrmc"}));
  complete->add_option("--inner-T", ca.inner_T, "projections per outer iteration");
  complete->add_option("--max-outer", ca.max_outer);
  complete->add_flag("--augment-ones", ca.augment, "append a constant coordinate");
  complete->add_flag("--no-normalize", ca.no_normalize, "skip column rescaling");
  complete->add_option("--success-tol", ca.success_tol);
  complete->add_option("--out-dir", ca.out_dir);
  ca.solver.add(complete);

  CheckArgs ka;
  auto* check = app.add_subcommand("check", "identifiability of a sampling pattern");
  check->add_option("--patterns", ka.patterns, "0/1 pattern CSV, one column per pattern");
  check->add_flag("--all-patterns", ka.all_patterns, "use every m-subset of d rows");
  check->add_flag("--tensor-space", ka.tensor_space, "patterns are already tensorized");
  check->add_option("--d", ka.d);
  check->add_option("--m", ka.m);
  check->add_option("--copies", ka.copies);
  check->add_option("--rank", ka.rank, "tensor-space rank R")->required();
  check->add_option("--order", ka.order)->check(CLI::Range(2, 3));
  check->add_option("--method", ka.method)
      ->check(CLI::IsMember({"algebraic", "combinatorial"}));
  check->add_option("--trials", ka.trials);
  check->add_option("--seed", ka.seed);
  check->add_option("--out-dir", ka.out_dir);

  PhaseArgs pa;
  auto* phase = app.add_subcommand("phase", "success-rate grid over (K, m)");
  phase->add_option("--d", pa.d);
  phase->add_option("--r", pa.r);
  phase->add_option("--order", pa.order)->check(CLI::Range(2, 3));
  phase->add_option("--K", pa.K, "list such as 2,4,6 or 2-10");
  phase->add_option("--m", pa.m, "list such as 4-12");
  phase->add_option("--N-per-subspace", pa.n_per);
  phase->add_option("--N", pa.n_fixed, "fixed column count (overrides per-subspace)");
  phase->add_option("--N-cap", pa.n_cap);
  phase->add_option("--trials", pa.trials);
  phase->add_option("--success-tol", pa.success_tol);
  phase->add_option("--algorithm", pa.algorithm)
      ->check(CLI::IsMember({"ladmc", "iladmc", "lrmc"}));
  phase->add_option("--seed", pa.seed);
  phase->add_option("--workers", pa.workers, "defaults to LADMC_WORKERS or 1");
  phase->add_option("--inner-T", pa.inner_T);
  phase->add_option("--out-dir", pa.out_dir);
  pa.solver.add(phase);

  int vK = 10, vr = 2, vd = 15, vp = 2, vN = 1000;
  std::uint64_t vseed = 0;
  auto* rv = app.add_subcommand("rank-verify", "numerical rank of a lifted sample");
  rv->add_option("--K", vK);
  rv->add_option("--r", vr);
  rv->add_option("--d", vd);
  rv->add_option("--order", vp)->check(CLI::Range(2, 3));
  rv->add_option("--N", vN);
  rv->add_option("--seed", vseed);

  RealArgs ra;
  auto* real = app.add_subcommand("real", "train/validation/test RMSE on a CSV dataset");
  real->add_option("--input", ra.input, "rows are features, columns are items")->required();
  real->add_option("--mask", ra.mask);
  real->add_option("--split", ra.split, "train,val,test fractions");
  real->add_option("--split-counts", ra.split_counts, "train,val,test entries per column");
  real->add_option("--ladmc-ranks", ra.ladmc_ranks);
  real->add_option("--lrmc-ranks", ra.lrmc_ranks);
  real->add_option("--order", ra.order)->check(CLI::Range(2, 3));
  real->add_option("--inner-T", ra.inner_T);
  real->add_flag("--augment-ones", ra.augment);
  real->add_option("--seed", ra.seed);
  real->add_option("--out-dir", ra.out_dir);
  ra.solver.add(real);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return run_synth(sd, sK, sr, sN, sm, sseed, sdir);
    if (*complete) return run_complete(ca);
    if (*check) return run_check(ka);
    if (*phase) return run_phase(pa);
    if (*rv) return run_rank_verify(vK, vr, vd, vp, vN, vseed);
    if (*real) return run_real(ra);
  } catch (const ladmc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
