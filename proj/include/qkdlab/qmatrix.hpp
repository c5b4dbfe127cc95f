#pragma once

// Dense complex-matrix kernel: density matrices, pure states, Kraus channels,
// POVMs, tensor algebra, partial trace and purification. Every value type
// validates its invariants at construction and is immutable afterwards.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qkdlab/errors.hpp"

namespace qkdlab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Largest total Hilbert-space dimension accepted by the dense kernel.
inline constexpr std::size_t kMaxDim = 4096;
/// Tolerance on max|A - A^dagger| and on |Tr - 1|.
inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
/// Eigenvalues in [-kClampTol, 0) are clamped to zero; below that is an error.
inline constexpr double kClampTol = 1e-9;

namespace detail {

inline std::size_t product(std::span<const std::size_t> dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

inline double hermitian_defect(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline std::vector<std::size_t> default_dims(std::size_t dim) {
  if (dim <= 1) return {};
  return {dim};
}

inline void check_dims(std::size_t dim, const std::vector<std::size_t>& dims) {
  if (dim > kMaxDim) {
    throw CapacityError("dimension " + std::to_string(dim) + " exceeds the dense cap of " +
                        std::to_string(kMaxDim));
  }
  for (auto d : dims) {
    if (d < 2) throw ValidationError("subsystem dimensions must be >= 2");
  }
  const std::size_t expected = dims.empty() ? 1 : product(dims);
  if (expected != dim) {
    throw ValidationError("subsystem dimensions multiply to " + std::to_string(expected) +
                          ", matrix dimension is " + std::to_string(dim));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Hermitian spectral primitives

struct HermitianEigen {
  RealVector values;  // ascending
  Matrix vectors;     // columns are eigenvectors
};

/// Eigendecomposition of the Hermitian part (A + A^dagger)/2.
inline HermitianEigen hermitian_eigen(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("eigendecomposition needs a square matrix");
  if (a.rows() == 0) return {RealVector(0), Matrix(0, 0)};
  const Matrix h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline RealVector hermitian_eigenvalues(const Matrix& a) {
  if (a.rows() == 0) return RealVector(0);
  const Matrix h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver failed");
  return solver.eigenvalues();
}

/// Applies a real function to the spectrum of a Hermitian matrix.
template <typename Fn>
Matrix spectral_map(const Matrix& a, Fn&& fn) {
  const auto eig = hermitian_eigen(a);
  RealVector mapped(eig.values.size());
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) mapped[i] = fn(eig.values[i]);
  return eig.vectors * mapped.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
}

/// Square root of a PSD matrix. Eigenvalues at the rounding floor of the
/// solver (below 1e-14 of the largest) count as zero.
inline Matrix psd_sqrt(const Matrix& a) {
  const auto eig = hermitian_eigen(a);
  const double floor = 1e-14 * std::max(1.0, eig.values.size() ? eig.values.cwiseAbs().maxCoeff() : 0.0);
  RealVector mapped = eig.values;
  for (Eigen::Index i = 0; i < mapped.size(); ++i) mapped[i] = mapped[i] > floor ? std::sqrt(mapped[i]) : 0.0;
  return eig.vectors * mapped.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
}

/// Sum of |eigenvalues| of a Hermitian matrix.
inline double hermitian_trace_norm(const Matrix& a) {
  return hermitian_eigenvalues(a).cwiseAbs().sum();
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
  return out;
}

// ---------------------------------------------------------------------------
// PureState

class PureState {
 public:
  explicit PureState(Vector amplitudes, std::vector<std::size_t> subsystem_dims = {})
      : amplitudes_(std::move(amplitudes)), dims_(std::move(subsystem_dims)) {
    const auto dim = static_cast<std::size_t>(amplitudes_.size());
    if (dim == 0) throw ValidationError("pure state needs at least one amplitude");
    if (dims_.empty()) dims_ = detail::default_dims(dim);
    detail::check_dims(dim, dims_);
    if (std::abs(amplitudes_.norm() - 1.0) > kTraceTol) {
      throw ValidationError("pure state amplitudes are not unit norm");
    }
  }

  std::size_t dim() const { return static_cast<std::size_t>(amplitudes_.size()); }
  const Vector& amplitudes() const { return amplitudes_; }
  const std::vector<std::size_t>& subsystem_dims() const { return dims_; }
  Matrix projector() const { return amplitudes_ * amplitudes_.adjoint(); }

 private:
  Vector amplitudes_;
  std::vector<std::size_t> dims_;
};

// ---------------------------------------------------------------------------
// DensityMatrix

class DensityMatrix {
 public:
  explicit DensityMatrix(const Matrix& entries, std::vector<std::size_t> subsystem_dims = {})
      : dims_(std::move(subsystem_dims)) {
    if (entries.rows() != entries.cols()) throw DimensionError("density matrix must be square");
    const auto dim = static_cast<std::size_t>(entries.rows());
    if (dim == 0) throw ValidationError("density matrix must have dimension >= 1");
    if (dims_.empty()) dims_ = detail::default_dims(dim);
    detail::check_dims(dim, dims_);
    if (detail::hermitian_defect(entries) > kHermitianTol) {
      throw ValidationError("density matrix is not Hermitian");
    }
    const Complex tr = entries.trace();
    if (std::abs(tr.real() - 1.0) > kTraceTol || std::abs(tr.imag()) > kTraceTol) {
      throw ValidationError("density matrix trace is " + std::to_string(tr.real()) + ", not 1");
    }
    entries_ = 0.5 * (entries + entries.adjoint());
    const auto eig = hermitian_eigen(entries_);
    const double min_eig = eig.values.size() ? eig.values.minCoeff() : 0.0;
    if (min_eig < -kClampTol) {
      throw ValidationError("density matrix has eigenvalue " + std::to_string(min_eig));
    }
    if (min_eig < 0.0) {
      RealVector clamped = eig.values.cwiseMax(0.0);
      clamped /= clamped.sum();
      entries_ = eig.vectors * clamped.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
    }
  }

  static DensityMatrix from_pure(const PureState& psi) {
    return trusted(psi.projector(), psi.subsystem_dims());
  }
  static DensityMatrix from_pure(const Vector& amplitudes) {
    return from_pure(PureState(amplitudes));
  }
  static DensityMatrix maximally_mixed(std::size_t dim) {
    if (dim == 0) throw ValidationError("density matrix must have dimension >= 1");
    return trusted(Matrix::Identity(dim, dim) / static_cast<double>(dim), {});
  }
  static DensityMatrix basis_state(std::size_t dim, std::size_t index) {
    if (index >= dim) throw DimensionError("basis index out of range");
    Matrix m = Matrix::Zero(dim, dim);
    m(index, index) = 1.0;
    return trusted(m, {});
  }
  static DensityMatrix diagonal(std::span<const double> probs) {
    Matrix m = Matrix::Zero(probs.size(), probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) m(i, i) = probs[i];
    return DensityMatrix(m);
  }

  std::size_t dim() const { return static_cast<std::size_t>(entries_.rows()); }
  const Matrix& matrix() const { return entries_; }
  const std::vector<std::size_t>& subsystem_dims() const { return dims_; }
  RealVector eigenvalues() const { return hermitian_eigenvalues(entries_); }

  /// Same entries, different factorization of the dimension.
  DensityMatrix with_subsystem_dims(std::vector<std::size_t> dims) const {
    return trusted(entries_, std::move(dims));
  }

  /// Skips the spectral check. Only for matrices positive by construction
  /// (products and reductions of valid states, projectors).
  static DensityMatrix trusted(const Matrix& entries, std::vector<std::size_t> subsystem_dims) {
    DensityMatrix out;
    if (entries.rows() != entries.cols()) throw DimensionError("density matrix must be square");
    const auto dim = static_cast<std::size_t>(entries.rows());
    out.dims_ = subsystem_dims.empty() ? detail::default_dims(dim) : std::move(subsystem_dims);
    detail::check_dims(dim, out.dims_);
    out.entries_ = 0.5 * (entries + entries.adjoint());
    return out;
  }

 private:
  DensityMatrix() = default;

  Matrix entries_;
  std::vector<std::size_t> dims_;
};

// ---------------------------------------------------------------------------
// KrausChannel and Povm

class KrausChannel {
 public:
  explicit KrausChannel(std::vector<Matrix> operators) : ops_(std::move(operators)) {
    if (ops_.empty()) throw ValidationError("channel needs at least one Kraus operator");
    const auto rows = ops_.front().rows();
    const auto cols = ops_.front().cols();
    Matrix sum = Matrix::Zero(cols, cols);
    for (const auto& k : ops_) {
      if (k.rows() != rows || k.cols() != cols) {
        throw DimensionError("Kraus operators must share one shape");
      }
      sum += k.adjoint() * k;
    }
    if ((sum - Matrix::Identity(cols, cols)).cwiseAbs().maxCoeff() > kHermitianTol) {
      throw ValidationError("Kraus operators are not trace preserving");
    }
  }

  static KrausChannel identity(std::size_t dim) {
    return KrausChannel({Matrix::Identity(dim, dim)});
  }

  std::size_t dim_in() const { return static_cast<std::size_t>(ops_.front().cols()); }
  std::size_t dim_out() const { return static_cast<std::size_t>(ops_.front().rows()); }
  const std::vector<Matrix>& operators() const { return ops_; }

 private:
  std::vector<Matrix> ops_;
};

class Povm {
 public:
  explicit Povm(std::vector<Matrix> elements) : elements_(std::move(elements)) {
    if (elements_.empty()) throw ValidationError("POVM needs at least one element");
    const auto dim = elements_.front().rows();
    Matrix sum = Matrix::Zero(dim, dim);
    for (const auto& e : elements_) {
      if (e.rows() != dim || e.cols() != dim) throw DimensionError("POVM elements must be square");
      if (detail::hermitian_defect(e) > kHermitianTol) {
        throw ValidationError("POVM element is not Hermitian");
      }
      const auto ev = hermitian_eigenvalues(e);
      if (ev.size() && ev.minCoeff() < -kClampTol) {
        throw ValidationError("POVM element is not positive semidefinite");
      }
      sum += e;
    }
    if ((sum - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff() > kHermitianTol) {
      throw ValidationError("POVM elements do not sum to the identity");
    }
  }

  /// Projective measurement in the columns of an orthonormal basis.
  static Povm from_basis(const Matrix& basis) {
    std::vector<Matrix> els;
    for (Eigen::Index j = 0; j < basis.cols(); ++j) els.push_back(basis.col(j) * basis.col(j).adjoint());
    return Povm(std::move(els));
  }
  static Povm computational(std::size_t dim) {
    return from_basis(Matrix::Identity(dim, dim));
  }
  static Povm trivial(std::size_t dim) { return Povm({Matrix::Identity(dim, dim)}); }

  std::size_t dim() const { return static_cast<std::size_t>(elements_.front().rows()); }
  std::size_t size() const { return elements_.size(); }
  const std::vector<Matrix>& elements() const { return elements_; }

 private:
  std::vector<Matrix> elements_;
};

// ---------------------------------------------------------------------------
// Operations

inline DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  const std::size_t dim = a.dim() * b.dim();
  if (dim > kMaxDim) {
    throw CapacityError("tensor product dimension " + std::to_string(dim) + " exceeds " +
                        std::to_string(kMaxDim));
  }
  std::vector<std::size_t> dims = a.subsystem_dims();
  dims.insert(dims.end(), b.subsystem_dims().begin(), b.subsystem_dims().end());
  return DensityMatrix::trusted(kron(a.matrix(), b.matrix()), std::move(dims));
}

inline PureState tensor(const PureState& a, const PureState& b) {
  const std::size_t dim = a.dim() * b.dim();
  if (dim > kMaxDim) {
    throw CapacityError("tensor product dimension " + std::to_string(dim) + " exceeds " +
                        std::to_string(kMaxDim));
  }
  std::vector<std::size_t> dims = a.subsystem_dims();
  dims.insert(dims.end(), b.subsystem_dims().begin(), b.subsystem_dims().end());
  return PureState(kron(a.amplitudes(), b.amplitudes()), std::move(dims));
}

/// Reduced matrix on the kept subsystems (ascending order). Works on any
/// square matrix whose dimension factors as `dims`; no validation of the result.
inline Matrix partial_trace_matrix(const Matrix& m, const std::vector<std::size_t>& dims,
                                   std::vector<std::size_t> keep) {
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  for (auto k : keep) {
    if (k >= dims.size()) throw DimensionError("subsystem index " + std::to_string(k) + " out of range");
  }
  const std::size_t full = detail::product(dims);
  if (static_cast<std::size_t>(m.rows()) != full || m.rows() != m.cols()) {
    throw DimensionError("matrix does not match subsystem dimensions");
  }
  std::vector<bool> kept(dims.size(), false);
  for (auto k : keep) kept[k] = true;

  // Split each full index into (kept, traced) mixed-radix indices.
  std::vector<std::size_t> kept_index(full), traced_index(full);
  std::size_t kept_dim = 1, traced_dim = 1;
  for (std::size_t i = 0; i < dims.size(); ++i) (kept[i] ? kept_dim : traced_dim) *= dims[i];
  for (std::size_t idx = 0; idx < full; ++idx) {
    std::size_t rem = idx, k = 0, t = 0, kstride = 1, tstride = 1;
    for (std::size_t s = dims.size(); s-- > 0;) {
      const std::size_t digit = rem % dims[s];
      rem /= dims[s];
      if (kept[s]) {
        k += digit * kstride;
        kstride *= dims[s];
      } else {
        t += digit * tstride;
        tstride *= dims[s];
      }
    }
    kept_index[idx] = k;
    traced_index[idx] = t;
  }
  // Inverse map (kept, traced) -> full index.
  std::vector<std::size_t> compose(kept_dim * traced_dim);
  for (std::size_t idx = 0; idx < full; ++idx) compose[kept_index[idx] * traced_dim + traced_index[idx]] = idx;

  Matrix out = Matrix::Zero(kept_dim, kept_dim);
  for (std::size_t r = 0; r < full; ++r) {
    const std::size_t t = traced_index[r];
    const std::size_t kr = kept_index[r];
    for (std::size_t kc = 0; kc < kept_dim; ++kc) {
      out(kr, kc) += m(r, compose[kc * traced_dim + t]);
    }
  }
  return out;
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::size_t>& keep) {
  if (keep.empty()) throw DimensionError("partial trace must keep at least one subsystem");
  const auto& dims = rho.subsystem_dims();
  std::vector<std::size_t> sorted = keep;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  Matrix reduced = partial_trace_matrix(rho.matrix(), dims, sorted);
  std::vector<std::size_t> kept_dims;
  for (auto k : sorted) kept_dims.push_back(dims[k]);
  return DensityMatrix::trusted(reduced, kept_dims);
}

/// Canonical purification sum_i sqrt(lambda_i) |v_i>|i> on dim^2; the
/// ancilla is the second factor.
inline PureState purify(const DensityMatrix& rho) {
  const std::size_t d = rho.dim();
  if (d * d > kMaxDim) throw CapacityError("purification dimension exceeds the dense cap");
  const auto eig = hermitian_eigen(rho.matrix());
  Vector psi = Vector::Zero(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    const double lambda = std::max(eig.values[i], 0.0);
    if (lambda == 0.0) continue;
    Vector anc = Vector::Zero(d);
    anc[i] = 1.0;
    psi += std::sqrt(lambda) * kron(Vector(eig.vectors.col(i)), anc);
  }
  psi /= psi.norm();
  std::vector<std::size_t> dims;
  if (d >= 2) dims = {d, d};
  return PureState(psi, dims);
}

inline DensityMatrix apply_channel(const DensityMatrix& rho, const KrausChannel& ch) {
  if (ch.dim_in() != rho.dim()) throw DimensionError("channel input dimension does not match state");
  Matrix out = Matrix::Zero(ch.dim_out(), ch.dim_out());
  for (const auto& k : ch.operators()) out += k * rho.matrix() * k.adjoint();
  std::vector<std::size_t> dims;
  if (ch.dim_out() == rho.dim()) dims = rho.subsystem_dims();
  return DensityMatrix(out, dims);
}

struct MeasurementOutcome {
  double probability;
  std::optional<DensityMatrix> post_state;  // absent when probability < 1e-12
};

inline constexpr double kOutcomeFloor = 1e-12;

inline std::vector<MeasurementOutcome> measure(const DensityMatrix& rho, const Povm& povm) {
  if (povm.dim() != rho.dim()) throw DimensionError("POVM dimension does not match state");
  std::vector<MeasurementOutcome> out;
  out.reserve(povm.size());
  for (const auto& el : povm.elements()) {
    const double p = std::max(0.0, (el * rho.matrix()).trace().real());
    if (p < kOutcomeFloor) {
      out.push_back({p, std::nullopt});
      continue;
    }
    const Matrix root = psd_sqrt(el);
    Matrix post = root * rho.matrix() * root.adjoint() / p;
    // Renormalize away the small drift of the sqrt.
    post /= post.trace().real();
    out.push_back({p, DensityMatrix(post, rho.subsystem_dims())});
  }
  return out;
}

// ---------------------------------------------------------------------------
// BlockState: block-diagonal operator with classical labels.
//
// Represents sum_l |l><l| (x) B_l, where the B_l are PSD and may be
// sub-normalized. Classical registers never need to be materialized densely;
// every functional over such states decomposes over the labels.

class BlockState {
 public:
  using Blocks = std::map<std::string, Matrix>;

  BlockState() = default;
  explicit BlockState(Blocks blocks) : blocks_(std::move(blocks)) {}

  void accumulate(const std::string& label, const Matrix& block, double weight = 1.0) {
    auto it = blocks_.find(label);
    if (it == blocks_.end()) {
      blocks_.emplace(label, weight * block);
      return;
    }
    if (it->second.rows() != block.rows()) {
      throw DimensionError("block '" + label + "' accumulated with mismatched dimension");
    }
    it->second += weight * block;
  }

  void accumulate(const BlockState& other, double weight = 1.0) {
    for (const auto& [label, block] : other.blocks_) accumulate(label, block, weight);
  }

  /// Each label gets `prefix` prepended.
  void accumulate_prefixed(const std::string& prefix, const BlockState& other, double weight = 1.0) {
    for (const auto& [label, block] : other.blocks_) accumulate(prefix + label, block, weight);
  }

  const Blocks& blocks() const { return blocks_; }
  bool empty() const { return blocks_.empty(); }
  std::size_t block_count() const { return blocks_.size(); }

  double trace() const {
    double t = 0.0;
    for (const auto& [label, block] : blocks_) t += block.trace().real();
    return t;
  }

  std::size_t dim() const {
    std::size_t d = 0;
    for (const auto& [label, block] : blocks_) d += static_cast<std::size_t>(block.rows());
    return d;
  }

  BlockState scaled(double s) const {
    BlockState out = *this;
    for (auto& [label, block] : out.blocks_) block *= s;
    return out;
  }

  BlockState normalized() const {
    const double t = trace();
    if (!(t > 0.0)) throw ValidationError("cannot normalize a zero block state");
    return scaled(1.0 / t);
  }

  /// Dense block-diagonal matrix with blocks in label order.
  Matrix to_matrix() const {
    const std::size_t d = dim();
    if (d > kMaxDim) throw CapacityError("block state too large to densify");
    Matrix out = Matrix::Zero(d, d);
    Eigen::Index offset = 0;
    for (const auto& [label, block] : blocks_) {
      out.block(offset, offset, block.rows(), block.cols()) = block;
      offset += block.rows();
    }
    return out;
  }

  DensityMatrix to_density() const { return DensityMatrix(to_matrix()); }

  /// Checks unit trace, Hermitian and PSD blocks.
  void validate() const {
    if (std::abs(trace() - 1.0) > kTraceTol) {
      throw ValidationError("block state trace is " + std::to_string(trace()));
    }
    for (const auto& [label, block] : blocks_) {
      if (detail::hermitian_defect(block) > kHermitianTol) {
        throw ValidationError("block is not Hermitian");
      }
      const auto ev = hermitian_eigenvalues(block);
      if (ev.size() && ev.minCoeff() < -kClampTol) throw ValidationError("block is not PSD");
    }
  }

 private:
  Blocks blocks_;
};

// ---------------------------------------------------------------------------
// Frequently used qubit objects

namespace qubit {

inline Vector ket(Complex a, Complex b) {
  Vector v(2);
  v << a, b;
  return v;
}
inline Vector zero() { return ket(1.0, 0.0); }
inline Vector one() { return ket(0.0, 1.0); }
inline Vector plus() { return ket(M_SQRT1_2, M_SQRT1_2); }
inline Vector minus() { return ket(M_SQRT1_2, -M_SQRT1_2); }

inline Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}
inline Matrix pauli_y() {
  Matrix m(2, 2);
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return m;
}
inline Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

/// (|00> + |11>)/sqrt(2).
inline Vector epr() {
  Vector v = Vector::Zero(4);
  v[0] = M_SQRT1_2;
  v[3] = M_SQRT1_2;
  return v;
}

}  // namespace qubit

}  // namespace qkdlab
