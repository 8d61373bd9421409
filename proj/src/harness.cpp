#include "ladmc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "ladmc/csv.hpp"
#include "ladmc/identifiability.hpp"
#include "ladmc/synth.hpp"
#include "ladmc/tensorize.hpp"

namespace ladmc::harness {

Algorithm parse_algorithm(const std::string& name) {
  if (name == "ladmc") return Algorithm::ladmc;
  if (name == "iladmc") return Algorithm::iladmc;
  if (name == "lrmc" || name == "lrmc-baseline") return Algorithm::lrmc;
  throw ConfigError("unknown algorithm '" + name + "' (expected ladmc, iladmc or lrmc)");
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::ladmc: return "ladmc";
    case Algorithm::iladmc: return "iladmc";
    case Algorithm::lrmc: return "lrmc";
  }
  return "?";
}

int ColumnRule::columns(int K) const {
  if (kind == Kind::fixed) return value;
  return std::min(value * K, cap);
}

void PhaseGridConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (!(success_tol > 0.0)) throw ConfigError("success_tol must be positive");
  if (K_range.empty() || m_range.empty()) throw ConfigError("phase grid is empty");
  if (d < 1 || r < 1 || r > d) throw ConfigError("need 1 <= r <= d");
  if (p < 2) throw ConfigError("order p must be >= 2");
  for (const int K : K_range) {
    if (K < 1) throw ConfigError("K values must be >= 1");
    if (N_rule.columns(K) < 1) throw ConfigError("column rule yields N < 1");
  }
  for (const int m : m_range) {
    if (m < 1 || m > d) throw ConfigError("m values must lie in [1, d]");
  }
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

const Cell& ExperimentRecord::at(int K, int m) const {
  for (const auto& c : cells) {
    if (c.K == K && c.m == m) return c;
  }
  throw ConfigError("no cell for K=" + std::to_string(K) + ", m=" + std::to_string(m));
}

namespace {

int cell_rank(const PhaseGridConfig& cfg, int K) {
  if (cfg.algorithm == Algorithm::lrmc) return std::min(K * cfg.r, cfg.d);
  return static_cast<int>(uos_tensor_rank(static_cast<std::size_t>(K),
                                          static_cast<std::size_t>(cfg.r),
                                          static_cast<std::size_t>(cfg.d),
                                          static_cast<std::size_t>(cfg.p)));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

TrialOutcome run_trial(const PhaseGridConfig& cfg, int K, int m, int trial) {
  TrialOutcome out;
  try {
    auto rng = make_rng(cfg.seed, static_cast<std::uint64_t>(K), static_cast<std::uint64_t>(m),
                        static_cast<std::uint64_t>(trial));
    const std::uint64_t data_seed = rng();
    const std::uint64_t mask_seed = rng();
    const int N = cfg.N_rule.columns(K);
    const auto data = gen_uos(cfg.d, K, cfg.r, N, data_seed);
    const auto mask = gen_mask_uniform(cfg.d, N, m, mask_seed);
    const Matrix X_obs = zero_fill(data.X, mask);
    const int R = cell_rank(cfg, K);

    CompletionReport rep;
    if (cfg.algorithm == Algorithm::lrmc) {
      SvpOptions svp = cfg.lrmc;
      svp.rank = R;
      rep = lrmc_baseline(X_obs, mask, svp);
    } else {
      LadmcConfig lc = cfg.ladmc;
      lc.p = cfg.p;
      lc.rank = R;
      rep = cfg.algorithm == Algorithm::ladmc ? ladmc::ladmc(X_obs, mask, lc)
                                              : ladmc::iladmc(X_obs, mask, lc);
    }
    score(rep, data.X, cfg.success_tol);
    out.nrmse = *rep.nrmse;
    out.success = *rep.success;
  } catch (const std::exception& e) {
    out.failed = true;
    out.nrmse = std::numeric_limits<double>::quiet_NaN();
    out.error = e.what();
  }
  return out;
}

ExperimentRecord run_phase_grid(const PhaseGridConfig& cfg) {
  cfg.validate();
  ExperimentRecord rec;
  rec.config = cfg;
  for (const int K : cfg.K_range) {
    for (const int m : cfg.m_range) {
      Cell c;
      c.K = K;
      c.m = m;
      c.N = cfg.N_rule.columns(K);
      c.rank = cell_rank(cfg, K);
      c.trials = cfg.trials;
      rec.cells.push_back(c);
    }
  }

  const std::size_t T = static_cast<std::size_t>(cfg.trials);
  const std::size_t jobs = rec.cells.size() * T;
  std::vector<TrialOutcome> outcomes(jobs);
  std::vector<double> seconds(jobs, 0.0);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs) return;
      const Cell& c = rec.cells[j / T];
      const auto t0 = std::chrono::steady_clock::now();
      outcomes[j] = run_trial(cfg, c.K, c.m, static_cast<int>(j % T));
      seconds[j] = seconds_since(t0);
    }
  };
  const auto nthreads =
      static_cast<std::size_t>(std::max(1, std::min<int>(cfg.workers, static_cast<int>(jobs))));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  for (std::size_t ci = 0; ci < rec.cells.size(); ++ci) {
    Cell& c = rec.cells[ci];
    double sum = 0.0;
    int scored = 0;
    for (std::size_t t = 0; t < T; ++t) {
      const auto& o = outcomes[ci * T + t];
      c.seconds += seconds[ci * T + t];
      if (o.failed) {
        ++c.failures;
        continue;
      }
      if (o.success) ++c.successes;
      sum += o.nrmse;
      ++scored;
    }
    c.mean_nrmse = scored > 0 ? sum / scored : std::numeric_limits<double>::quiet_NaN();
  }
  return rec;
}

int ell_curve(int K, int r, int d, int p) {
  const auto R = uos_tensor_rank(static_cast<std::size_t>(K), static_cast<std::size_t>(r),
                                 static_cast<std::size_t>(d), static_cast<std::size_t>(p));
  return static_cast<int>(minimal_samples(R, static_cast<std::size_t>(p)));
}

void write_phase_csv(std::ostream& out, const ExperimentRecord& rec) {
  out << "K,m,N,rank,trials,successes,failures,success_fraction,mean_nrmse\n";
  for (const auto& c : rec.cells) {
    out << c.K << ',' << c.m << ',' << c.N << ',' << c.rank << ',' << c.trials << ','
        << c.successes << ',' << c.failures << ',' << io::format_double(c.success_fraction())
        << ',' << io::format_double(c.mean_nrmse) << '\n';
  }
}

// Columns follow K_range, rows follow m_range with the largest m on top.
void write_phase_pgm(std::ostream& out, const ExperimentRecord& rec) {
  const auto& Ks = rec.config.K_range;
  const auto& ms = rec.config.m_range;
  out << "P2\n" << Ks.size() << ' ' << ms.size() << "\n255\n";
  for (auto mi = ms.size(); mi-- > 0;) {
    for (std::size_t ki = 0; ki < Ks.size(); ++ki) {
      const Cell& c = rec.at(Ks[ki], ms[mi]);
      const int level = c.trials == 0 ? 0 : (255 * c.successes + c.trials / 2) / c.trials;
      out << level << (ki + 1 == Ks.size() ? '\n' : ' ');
    }
  }
}

void write_lcurve_csv(std::ostream& out, const ExperimentRecord& rec) {
  const auto& cfg = rec.config;
  out << "K,R,ell\n";
  for (const int K : cfg.K_range) {
    out << K << ','
        << uos_tensor_rank(static_cast<std::size_t>(K), static_cast<std::size_t>(cfg.r),
                           static_cast<std::size_t>(cfg.d), static_cast<std::size_t>(cfg.p))
        << ',' << ell_curve(K, cfg.r, cfg.d, cfg.p) << '\n';
  }
}

void write_timing_csv(std::ostream& out, const ExperimentRecord& rec) {
  out << "K,m,seconds\n";
  for (const auto& c : rec.cells) {
    out << c.K << ',' << c.m << ',' << io::format_double(c.seconds) << '\n';
  }
}

namespace {

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) s += ' ';
    s += std::to_string(v[i]);
  }
  return s;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

}  // namespace

void write_phase_outputs(const std::filesystem::path& dir, const ExperimentRecord& rec) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "phase.csv");
    write_phase_csv(out, rec);
  }
  {
    auto out = open_out(dir / "phase.pgm");
    write_phase_pgm(out, rec);
  }
  {
    auto out = open_out(dir / "lcurve.csv");
    write_lcurve_csv(out, rec);
  }
  {
    auto out = open_out(dir / "timing.csv");
    write_timing_csv(out, rec);
  }
  const auto& cfg = rec.config;
  Report r;
  r.set("algorithm", algorithm_name(cfg.algorithm));
  r.set("d", cfg.d);
  r.set("r", cfg.r);
  r.set("p", cfg.p);
  r.set("K_range", join(cfg.K_range));
  r.set("m_range", join(cfg.m_range));
  r.set("N_rule", cfg.N_rule.kind == ColumnRule::Kind::fixed ? "fixed" : "per_subspace");
  r.set("N_value", cfg.N_rule.value);
  r.set("N_cap", cfg.N_rule.cap);
  r.set("trials", cfg.trials);
  r.set("success_tol", cfg.success_tol);
  r.set("seed", static_cast<long long>(cfg.seed));
  int failures = 0;
  for (const auto& c : rec.cells) failures += c.failures;
  r.set("failed_trials", failures);
  r.write(dir / "record.txt");
}

RankVerify rank_verify(int K, int r, int d, int p, int N, std::uint64_t seed) {
  const auto data = gen_uos(d, K, r, N, seed);
  const TensorIndexMap map(static_cast<std::size_t>(d), static_cast<std::size_t>(p));
  const Matrix T = tensorize_all(data.X, map);
  const Vector s = Eigen::BDCSVD<Matrix>(T).singularValues();

  RankVerify out;
  out.formula = uos_tensor_rank(static_cast<std::size_t>(K), static_cast<std::size_t>(r),
                                static_cast<std::size_t>(d), static_cast<std::size_t>(p));
  out.numerical_rank = numerical_rank(T);
  const auto R = static_cast<Eigen::Index>(out.formula);
  if (s.size() == 0 || s[0] == 0.0 || R > s.size()) return out;
  out.sigma_R_ratio = R > 0 ? s[R - 1] / s[0] : 1.0;
  out.sigma_next_ratio = R < s.size() ? s[R] / s[0] : 0.0;
  out.pass = out.numerical_rank == static_cast<int>(out.formula) && out.sigma_R_ratio > 1e-6 &&
             out.sigma_next_ratio < 1e-8;
  return out;
}

void SplitSpec::validate() const {
  if (fractions.has_value() == counts.has_value()) {
    throw ConfigError("split needs exactly one of fractions or counts");
  }
  if (fractions) {
    if (fractions->size() != 3) throw ConfigError("split fractions need train,val,test");
    double total = 0.0;
    for (const double f : *fractions) {
      if (f < 0.0) throw ConfigError("split fractions must be nonnegative");
      total += f;
    }
    if (total > 1.0 + 1e-12) throw ConfigError("split fractions sum to more than 1");
    if ((*fractions)[0] <= 0.0) throw ConfigError("train fraction must be positive");
  } else {
    if (counts->size() != 3) throw ConfigError("split counts need train,val,test");
    for (const int c : *counts) {
      if (c < 0) throw ConfigError("split counts must be nonnegative");
    }
    if ((*counts)[0] == 0) throw ConfigError("train count must be positive");
  }
}

namespace {

struct Split {
  ObservationMask train, val, test;
};

Split split_columns(const ObservationMask& observed, const SplitSpec& spec, std::uint64_t seed,
                    std::size_t& excluded) {
  const auto d = observed.rows();
  const auto n = observed.cols();
  Split s{ObservationMask(d, n, false), ObservationMask(d, n, false),
          ObservationMask(d, n, false)};
  auto rng = make_rng(seed, 0x73706c6974);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index j = 0; j < n; ++j) {
    rows.clear();
    for (Eigen::Index i = 0; i < d; ++i) {
      if (observed(i, j)) rows.push_back(i);
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto total = rows.size();
    std::size_t ntr, nva, nte;
    if (spec.fractions) {
      const auto& f = *spec.fractions;
      ntr = static_cast<std::size_t>(std::llround(f[0] * static_cast<double>(total)));
      nva = static_cast<std::size_t>(std::llround(f[1] * static_cast<double>(total)));
      nte = static_cast<std::size_t>(std::llround(f[2] * static_cast<double>(total)));
    } else {
      const auto& c = *spec.counts;
      ntr = static_cast<std::size_t>(c[0]);
      nva = static_cast<std::size_t>(c[1]);
      nte = static_cast<std::size_t>(c[2]);
    }
    ntr = std::min(ntr, total);
    nva = std::min(nva, total - ntr);
    nte = std::min(nte, total - ntr - nva);
    if (ntr == 0) {
      ++excluded;
      continue;
    }
    std::size_t k = 0;
    for (; k < ntr; ++k) s.train.set(rows[k], j);
    for (; k < ntr + nva; ++k) s.val.set(rows[k], j);
    for (; k < ntr + nva + nte; ++k) s.test.set(rows[k], j);
  }
  return s;
}

double masked_rmse(const Matrix& X_hat, const Matrix& X, const ObservationMask& mask) {
  const auto count = mask.count();
  if (count == 0) return 0.0;
  return observed_rms(X_hat, X, mask);
}

Matrix column_mean_fill(const Matrix& X, const ObservationMask& train) {
  Matrix out = Matrix::Zero(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    double sum = 0.0;
    int n = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      if (train(i, j)) {
        sum += X(i, j);
        ++n;
      }
    }
    const double mean = n > 0 ? sum / n : 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i, j) = train(i, j) ? X(i, j) : mean;
  }
  return out;
}

template <class Complete>
MethodScore select_rank(const std::string& name, const std::vector<int>& ranks,
                        const Matrix& X, const Split& s, Complete&& complete) {
  MethodScore best;
  best.method = name;
  bool any = false;
  for (const int R : ranks) {
    Matrix X_hat;
    try {
      X_hat = complete(R);
    } catch (const ConfigError&) {
      continue;
    } catch (const SolverError&) {
      continue;
    }
    const double v = masked_rmse(X_hat, X, s.val);
    if (!any || v < best.validation_rmse) {
      any = true;
      best.rank = R;
      best.validation_rmse = v;
      best.test_rmse = masked_rmse(X_hat, X, s.test);
    }
  }
  if (!any) {
    best.validation_rmse = std::numeric_limits<double>::quiet_NaN();
    best.test_rmse = std::numeric_limits<double>::quiet_NaN();
  }
  return best;
}

}  // namespace

RealResult run_real_experiment(const Matrix& X, const ObservationMask& observed,
                               const RealConfig& cfg) {
  require_congruent(X, observed, "run_real_experiment");
  cfg.split.validate();
  RealResult res;
  const Split s = split_columns(observed, cfg.split, cfg.seed, res.excluded_columns);
  res.train_entries = static_cast<std::size_t>(s.train.count());
  res.validation_entries = static_cast<std::size_t>(s.val.count());
  res.test_entries = static_cast<std::size_t>(s.test.count());
  if (res.train_entries == 0) throw ConfigError("no training entries after split");
  const Matrix X_train = zero_fill(X, s.train);

  {
    const Matrix X_hat = column_mean_fill(X, s.train);
    MethodScore m{"mean-fill", std::nullopt, masked_rmse(X_hat, X, s.val),
                  masked_rmse(X_hat, X, s.test)};
    res.methods.push_back(m);
  }
  res.methods.push_back(select_rank("lrmc", cfg.lrmc_ranks, X, s, [&](int R) {
    SvpOptions svp = cfg.lrmc;
    svp.rank = R;
    return lrmc_baseline(X_train, s.train, svp).X_hat;
  }));
  res.methods.push_back(select_rank("ladmc", cfg.ladmc_ranks, X, s, [&](int R) {
    LadmcConfig lc = cfg.ladmc;
    lc.rank = R;
    return ladmc::ladmc(X_train, s.train, lc).X_hat;
  }));
  res.methods.push_back(select_rank("iladmc", cfg.ladmc_ranks, X, s, [&](int R) {
    LadmcConfig lc = cfg.ladmc;
    lc.rank = R;
    return ladmc::iladmc(X_train, s.train, lc).X_hat;
  }));
  return res;
}

void Report::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void Report::set(const std::string& key, double value) { set(key, io::format_double(value)); }

void Report::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

void Report::write(std::ostream& out) const {
  for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
}

void Report::write(const std::filesystem::path& path) const {
  auto out = open_out(path);
  write(out);
}

const std::string* Report::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return &v;
  }
  return nullptr;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

int default_workers() {
  if (const char* env = std::getenv("LADMC_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

}  // namespace ladmc::harness
