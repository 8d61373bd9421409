#include "ladmc/synth.hpp"

#include <numeric>
#include <string>

#include "ladmc/tensorize.hpp"

namespace ladmc {
namespace {

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Matrix M(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = gauss(rng);
  }
  return M;
}

Matrix full_rank_basis(int d, int r, std::mt19937_64& rng) {
  for (;;) {
    Matrix B = gaussian_matrix(d, r, rng);
    Eigen::JacobiSVD<Matrix> svd(B);
    const Vector& s = svd.singularValues();
    if (s[r - 1] > 1e-10 * s[0]) return B;
  }
}

void check_sizes(int d, int r, int N, const char* where) {
  if (d < 1 || r < 1 || r > d || N < 1) {
    throw ConfigError(std::string(where) + ": need 1 <= r <= d and N >= 1");
  }
}

}  // namespace

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                         std::uint64_t c) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c),    static_cast<std::uint32_t>(c >> 32)};
  return std::mt19937_64(seq);
}

UoSData gen_uos(int d, int K, int r, int N, std::uint64_t seed) {
  check_sizes(d, r, N, "gen_uos");
  if (K < 1) throw ConfigError("gen_uos: K must be >= 1");
  auto rng = make_rng(seed, 0x756f73);
  UoSData out;
  out.model.d = d;
  out.model.K = K;
  out.model.r = r;
  for (int k = 0; k < K; ++k) out.model.bases.push_back(full_rank_basis(d, r, rng));

  out.X.resize(d, N);
  out.model.labels.resize(static_cast<std::size_t>(N));
  std::normal_distribution<double> gauss;
  Vector c(r);
  for (int i = 0; i < N; ++i) {
    const int label = i % K;
    out.model.labels[static_cast<std::size_t>(i)] = label;
    for (int k = 0; k < r; ++k) c[k] = gauss(rng);
    out.X.col(i) = out.model.bases[static_cast<std::size_t>(label)] * c;
  }
  return out;
}

Matrix gen_single_subspace(int d, int r, int N, std::uint64_t seed) {
  return gen_uos(d, 1, r, N, seed).X;
}

ObservationMask gen_mask_uniform(int d, int N, int m, std::uint64_t seed) {
  if (d < 1 || N < 0 || m < 1 || m > d) {
    throw ConfigError("gen_mask_uniform: need 1 <= m <= d");
  }
  auto rng = make_rng(seed, 0x6d61736b);
  ObservationMask mask(d, N, false);
  std::vector<int> rows(static_cast<std::size_t>(d));
  for (int j = 0; j < N; ++j) {
    std::iota(rows.begin(), rows.end(), 0);
    // Partial Fisher-Yates: the first m slots are a uniform m-subset.
    for (int k = 0; k < m; ++k) {
      std::uniform_int_distribution<int> pick(k, d - 1);
      std::swap(rows[static_cast<std::size_t>(k)],
                rows[static_cast<std::size_t>(pick(rng))]);
      mask.set(rows[static_cast<std::size_t>(k)], j);
    }
  }
  return mask;
}

ObservationMask gen_all_patterns(int d, int m, int copies) {
  if (d < 1 || m < 0 || m > d || copies < 1) {
    throw ConfigError("gen_all_patterns: need 0 <= m <= d and copies >= 1");
  }
  const std::uint64_t n = binomial(static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(m));
  const std::uint64_t total = n * static_cast<std::uint64_t>(copies);
  if (total / static_cast<std::uint64_t>(copies) != n || total > (1u << 28)) {
    throw ArithmeticOverflow("gen_all_patterns: C(d, m) * copies is too large");
  }
  ObservationMask mask(d, static_cast<Eigen::Index>(total), false);
  std::vector<int> combo(static_cast<std::size_t>(m));
  std::iota(combo.begin(), combo.end(), 0);
  Eigen::Index col = 0;
  for (std::uint64_t c = 0; c < n; ++c) {
    for (int rep = 0; rep < copies; ++rep, ++col) {
      for (const int i : combo) mask.set(i, col);
    }
    // Next m-combination in lexicographic order.
    int pos = m - 1;
    while (pos >= 0 && combo[static_cast<std::size_t>(pos)] == d - m + pos) --pos;
    if (pos < 0) break;
    ++combo[static_cast<std::size_t>(pos)];
    for (int k = pos + 1; k < m; ++k) {
      combo[static_cast<std::size_t>(k)] = combo[static_cast<std::size_t>(k - 1)] + 1;
    }
  }
  return mask;
}

Matrix add_gaussian_noise(const Matrix& X, double sigma, std::uint64_t seed) {
  auto rng = make_rng(seed, 0x6e6f697365);
  return X + sigma * gaussian_matrix(X.rows(), X.cols(), rng);
}

double subspace_residual(const Matrix& basis, const Eigen::Ref<const Vector>& x) {
  const Vector coef = basis.colPivHouseholderQr().solve(x);
  return (x - basis * coef).norm();
}

}  // namespace ladmc
