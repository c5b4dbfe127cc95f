#pragma once

// Seeded generators of random states, channels and POVMs for property tests.

#include <cstdint>
#include <vector>

#include "qkdlab/qinfo.hpp"
#include "qkdlab/qmatrix.hpp"
#include "qkdlab/random.hpp"

namespace qkdlab::testing {

inline Matrix ginibre(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = Complex(rng.normal(), rng.normal());
  return g;
}

/// Haar-random pure state.
inline Vector random_ket(Rng& rng, Eigen::Index dim) {
  Vector v = ginibre(rng, dim, 1).col(0);
  return v / v.norm();
}

/// Induced-measure random mixed state of the given rank.
inline DensityMatrix random_density(Rng& rng, Eigen::Index dim, Eigen::Index rank = -1) {
  if (rank < 0) rank = dim;
  const Matrix g = ginibre(rng, dim, rank);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix(rho);
}

inline Matrix random_unitary(Rng& rng, Eigen::Index dim) {
  Eigen::HouseholderQR<Matrix> qr(ginibre(rng, dim, dim));
  return qr.householderQ() * Matrix::Identity(dim, dim);
}

/// Random channel with `count` Kraus operators (Stinespring isometry slices).
inline KrausChannel random_channel(Rng& rng, Eigen::Index dim, Eigen::Index count) {
  Eigen::HouseholderQR<Matrix> qr(ginibre(rng, dim * count, dim));
  const Matrix iso = qr.householderQ() * Matrix::Identity(dim * count, dim);
  std::vector<Matrix> ops;
  for (Eigen::Index k = 0; k < count; ++k) ops.push_back(iso.block(k * dim, 0, dim, dim));
  return KrausChannel(ops);
}

/// Random POVM with `count` elements: G^{-1/2} A_k G^{-1/2}, A_k Wishart.
inline Povm random_povm(Rng& rng, Eigen::Index dim, Eigen::Index count) {
  std::vector<Matrix> raw;
  Matrix sum = Matrix::Zero(dim, dim);
  for (Eigen::Index k = 0; k < count; ++k) {
    const Matrix g = ginibre(rng, dim, dim);
    raw.push_back(g * g.adjoint());
    sum += raw.back();
  }
  const auto eig = hermitian_eigen(sum);
  const Matrix inv_sqrt =
      eig.vectors * eig.values.cwiseSqrt().cwiseInverse().cast<Complex>().asDiagonal() * eig.vectors.adjoint();
  std::vector<Matrix> els;
  for (const auto& a : raw) {
    Matrix e = inv_sqrt * a * inv_sqrt;
    els.push_back(0.5 * (e + e.adjoint()));
  }
  return Povm(els);
}

inline DensityMatrix ket_state(const Vector& v) { return DensityMatrix::from_pure(v); }

// Random ensemble with Dirichlet(1,...,1) priors.
inline CqEnsemble random_ensemble(Rng& rng, Eigen::Index dim, std::size_t count, bool pure = false) {
  std::vector<double> w(count);
  double total = 0.0;
  for (auto& x : w) {
    double u = 0.0;
    while (u <= 0.0) u = rng.uniform();
    x = -std::log(u);
    total += x;
  }
  std::vector<CqEnsemble::Entry> entries;
  for (std::size_t i = 0; i < count; ++i) {
    auto rho = pure ? ket_state(random_ket(rng, dim)) : random_density(rng, dim, 1 + rng.below(dim));
    entries.push_back({std::to_string(i), w[i] / total, rho});
  }
  return CqEnsemble(entries);
}

// Pair (a, b) with supp(a) inside supp(b); b may be rank deficient.
inline std::pair<DensityMatrix, DensityMatrix> nested_pair(Rng& rng, Eigen::Index dim) {
  const Eigen::Index rank_b = 1 + static_cast<Eigen::Index>(rng.below(dim));
  const Eigen::Index rank_a = 1 + static_cast<Eigen::Index>(rng.below(rank_b));
  const Matrix u = random_unitary(rng, dim);
  Matrix small_b = Matrix::Zero(dim, dim);
  small_b.topLeftCorner(rank_b, rank_b) = random_density(rng, rank_b).matrix();
  Matrix small_a = Matrix::Zero(dim, dim);
  small_a.topLeftCorner(rank_a, rank_a) = random_density(rng, rank_a).matrix();
  return {DensityMatrix(u * small_a * u.adjoint()), DensityMatrix(u * small_b * u.adjoint())};
}

}  // namespace qkdlab::testing
