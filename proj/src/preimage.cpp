#include "ladmc/preimage.hpp"

#include <cmath>
#include <random>
#include <string>

namespace ladmc {
namespace {

constexpr double kTieTol = 1e-12;

void canonical_sign(Vector& u) {
  const double scale = u.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (std::abs(u[i]) > kTieTol * scale) {
      if (u[i] < 0) u = -u;
      return;
    }
  }
}

// Mode-1 unfolding of the cubical symmetric tensor: row a, column b + d*c.
Matrix unfold_cubic(const Eigen::Ref<const Vector>& t, const TensorIndexMap& map) {
  const auto d = static_cast<Eigen::Index>(map.d());
  Matrix T = Matrix::Zero(d, d * d);
  for (std::size_t q = 0; q < map.D(); ++q) {
    const auto e = map.entry(q);
    const Eigen::Index i = e[0], j = e[1], k = e[2];
    const double v = t[static_cast<Eigen::Index>(q)];
    T(i, j + d * k) = v;
    T(i, k + d * j) = v;
    T(j, i + d * k) = v;
    T(j, k + d * i) = v;
    T(k, i + d * j) = v;
    T(k, j + d * i) = v;
  }
  return T;
}

Vector outer_flat(const Vector& u) { return (u * u.transpose()).reshaped(); }

PreimageResult preimage_cubic(const Eigen::Ref<const Vector>& t, const TensorIndexMap& map,
                              std::span<const ObservedEntry> observed,
                              const HopmOptions& opts) {
  const auto d = static_cast<Eigen::Index>(map.d());
  const Matrix T = unfold_cubic(t, map);
  const double t_norm = T.norm();
  if (t_norm == 0.0) return {Vector::Zero(d), 0.0};

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss;

  double best_lambda = 0.0;
  Vector best_u = Vector::Zero(d);
  for (int r = 0; r < std::max(1, opts.restarts); ++r) {
    Vector u(d);
    if (r == 0) {
      // Dominant slice: exact for a rank-one tensor.
      Eigen::Index col = 0;
      T.colwise().squaredNorm().maxCoeff(&col);
      u = T.col(col);
    } else {
      for (Eigen::Index i = 0; i < d; ++i) u[i] = gauss(rng);
    }
    if (u.norm() == 0.0) continue;
    u.normalize();

    for (int it = 0; it < opts.max_iters; ++it) {
      Vector w = T * outer_flat(u);
      const double nw = w.norm();
      if (nw == 0.0) break;
      w /= nw;
      const double delta = (w - u).norm();
      u = std::move(w);
      if (delta < opts.tol) break;
    }
    const double lambda = u.dot(T * outer_flat(u));
    if (std::abs(lambda) > std::abs(best_lambda)) {
      best_lambda = lambda;
      best_u = u;
    }
  }

  const double resid =
      (T - best_lambda * best_u * outer_flat(best_u).transpose()).norm() / t_norm;
  Vector x = std::cbrt(best_lambda) * best_u;
  return {resolve_sign(std::move(x), observed), resid};
}

}  // namespace

SymmetricLift assemble_symmetric(const Eigen::Ref<const Vector>& t,
                                 const TensorIndexMap& map) {
  if (map.p() != 2) {
    throw ConfigError("assemble_symmetric: requires p = 2, got p = " +
                      std::to_string(map.p()));
  }
  if (static_cast<std::size_t>(t.size()) != map.D()) {
    throw DimensionMismatch("assemble_symmetric: length " + std::to_string(t.size()) +
                            " != D = " + std::to_string(map.D()));
  }
  const auto d = static_cast<Eigen::Index>(map.d());
  SymmetricLift lift{Matrix(d, d)};
  for (std::size_t q = 0; q < map.D(); ++q) {
    const auto e = map.entry(q);
    lift.values(e[0], e[1]) = t[static_cast<Eigen::Index>(q)];
    lift.values(e[1], e[0]) = t[static_cast<Eigen::Index>(q)];
  }
  return lift;
}

Rank1Pair extract_rank1(const SymmetricLift& lift) {
  const Matrix& S = lift.values;
  const auto d = S.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
  if (eig.info() != Eigen::Success) {
    throw SolverError("extract_rank1: eigendecomposition failed");
  }
  const Vector& lambda = eig.eigenvalues();
  const Matrix& vecs = eig.eigenvectors();

  Eigen::Index top = 0;
  lambda.cwiseAbs().maxCoeff(&top);
  const double sigma = std::abs(lambda[top]);

  // Dominant eigenspace: eigenvalues tied with lambda[top] (same sign).
  std::vector<Eigen::Index> tied;
  double second = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::abs(lambda[i] - lambda[top]) <= kTieTol * std::max(sigma, 1.0)) {
      tied.push_back(i);
    } else {
      second = std::max(second, std::abs(lambda[i]));
    }
  }

  Rank1Pair out;
  out.sigma = sigma;
  if (tied.size() > 1) second = sigma;
  out.ratio = sigma > 0.0 ? second / sigma : 0.0;

  if (tied.size() == 1) {
    out.u = vecs.col(top);
  } else {
    Matrix Q(d, static_cast<Eigen::Index>(tied.size()));
    for (std::size_t c = 0; c < tied.size(); ++c) {
      Q.col(static_cast<Eigen::Index>(c)) = vecs.col(tied[c]);
    }
    out.u = Vector::Unit(d, 0);
    for (Eigen::Index i = 0; i < d; ++i) {
      const Vector proj = Q * Q.row(i).transpose();
      if (proj.norm() > 1e-8) {
        out.u = proj.normalized();
        break;
      }
    }
  }
  canonical_sign(out.u);
  return out;
}

std::vector<ObservedEntry> observed_entries(const Matrix& X, const ObservationMask& mask,
                                            Eigen::Index j) {
  std::vector<ObservedEntry> out;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (mask(i, j)) out.push_back({i, X(i, j)});
  }
  return out;
}

Vector resolve_sign(Vector candidate, std::span<const ObservedEntry> observed) {
  if (candidate.size() == 0) return candidate;
  const double sign_tol = 1e-9 * candidate.cwiseAbs().maxCoeff();
  const ObservedEntry* anchor = nullptr;
  for (const auto& e : observed) {
    if (e.index < 0 || e.index >= candidate.size()) {
      throw DimensionMismatch("resolve_sign: observed index out of range");
    }
    if (anchor == nullptr || std::abs(e.value) > std::abs(anchor->value)) anchor = &e;
  }
  if (anchor == nullptr || !(std::abs(anchor->value) > sign_tol)) return candidate;
  if (anchor->value * candidate[anchor->index] < 0.0) candidate = -candidate;
  return candidate;
}

PreimageResult preimage_column(const Eigen::Ref<const Vector>& t, const TensorIndexMap& map,
                               std::span<const ObservedEntry> observed,
                               const HopmOptions& hopm) {
  if (static_cast<std::size_t>(t.size()) != map.D()) {
    throw DimensionMismatch("preimage_column: length " + std::to_string(t.size()) +
                            " != D = " + std::to_string(map.D()));
  }
  if (map.p() == 3) return preimage_cubic(t, map, observed, hopm);
  if (map.p() != 2) {
    throw ConfigError("preimage_column: unsupported tensor order p = " +
                      std::to_string(map.p()));
  }
  const Rank1Pair pair = extract_rank1(assemble_symmetric(t, map));
  Vector x = std::sqrt(pair.sigma) * pair.u;
  return {resolve_sign(std::move(x), observed), pair.ratio};
}

}  // namespace ladmc
