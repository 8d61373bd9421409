#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ladmc/core.hpp"
#include "ladmc/pipeline.hpp"

namespace ladmc::harness {

enum class Algorithm { ladmc, iladmc, lrmc };

Algorithm parse_algorithm(const std::string& name);
std::string algorithm_name(Algorithm a);

struct ColumnRule {
  enum class Kind { fixed, per_subspace } kind = Kind::per_subspace;
  int value = 50;      // N for fixed, N/K otherwise
  int cap = 3000;      // upper bound on N for per_subspace
  int columns(int K) const;
};

struct PhaseGridConfig {
  int d = 15;
  int r = 2;
  int p = 2;
  std::vector<int> K_range{2, 4, 6, 8, 10};
  std::vector<int> m_range{4, 5, 6, 7, 8, 9, 10, 11, 12};
  ColumnRule N_rule;
  int trials = 10;
  double success_tol = 1e-4;
  Algorithm algorithm = Algorithm::ladmc;
  std::uint64_t seed = 0;
  int workers = 1;
  LadmcConfig ladmc;  // rank is resolved per cell
  SvpOptions lrmc;    // rank is resolved per cell

  void validate() const;
};

struct Cell {
  int K = 0;
  int m = 0;
  int N = 0;
  int rank = 0;
  int successes = 0;
  int trials = 0;
  int failures = 0;  // trials that threw
  double mean_nrmse = 0.0;
  double seconds = 0.0;

  // Exact in the sense that it is a single division of two integers.
  double success_fraction() const {
    return trials == 0 ? 0.0 : static_cast<double>(successes) / trials;
  }
};

struct ExperimentRecord {
  PhaseGridConfig config;
  std::vector<Cell> cells;  // K-major, m-minor
  const Cell& at(int K, int m) const;
};

/// Trial outcome for one seeded instance.
struct TrialOutcome {
  double nrmse = 0.0;
  bool success = false;
  bool failed = false;
  std::string error;
};

TrialOutcome run_trial(const PhaseGridConfig& cfg, int K, int m, int trial);

ExperimentRecord run_phase_grid(const PhaseGridConfig& cfg);

/// Smallest m with C(m+p-1, p) >= uos_tensor_rank(K, r, d, p).
int ell_curve(int K, int r, int d, int p);

void write_phase_csv(std::ostream& out, const ExperimentRecord& rec);
void write_phase_pgm(std::ostream& out, const ExperimentRecord& rec);
void write_lcurve_csv(std::ostream& out, const ExperimentRecord& rec);
void write_timing_csv(std::ostream& out, const ExperimentRecord& rec);
void write_phase_outputs(const std::filesystem::path& dir, const ExperimentRecord& rec);

struct RankVerify {
  int numerical_rank = 0;
  std::size_t formula = 0;
  double sigma_R_ratio = 0.0;     // sigma_R / sigma_1
  double sigma_next_ratio = 0.0;  // sigma_{R+1} / sigma_1, 0 if R = min(D, N)
  bool pass = false;
};

/// Lifts a generated UoS sample and compares its numerical rank with the formula.
RankVerify rank_verify(int K, int r, int d, int p, int N, std::uint64_t seed);

struct SplitSpec {
  // Either fractions (train, val, test) or per-column counts.
  std::optional<std::vector<double>> fractions;
  std::optional<std::vector<int>> counts;
  void validate() const;
};

struct RealConfig {
  SplitSpec split;
  std::vector<int> ladmc_ranks;  // tensor-space ranks to try
  std::vector<int> lrmc_ranks;   // original-space ranks to try
  std::uint64_t seed = 0;
  LadmcConfig ladmc;
  SvpOptions lrmc;
};

struct MethodScore {
  std::string method;
  std::optional<int> rank;
  double validation_rmse = 0.0;
  double test_rmse = 0.0;
};

struct RealResult {
  std::vector<MethodScore> methods;
  std::size_t excluded_columns = 0;
  std::size_t train_entries = 0;
  std::size_t validation_entries = 0;
  std::size_t test_entries = 0;
};

RealResult run_real_experiment(const Matrix& X, const ObservationMask& observed,
                               const RealConfig& cfg);

/// Flat key=value report, keys in insertion order.
class Report {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
  void set(const std::string& key, std::size_t value) {
    set(key, static_cast<long long>(value));
  }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }

  void write(std::ostream& out) const;
  void write(const std::filesystem::path& path) const;
  const std::string* get(const std::string& key) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// key=value lines; '#' starts a comment.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

/// Default worker count from LADMC_WORKERS, else 1.
int default_workers();

}  // namespace ladmc::harness
