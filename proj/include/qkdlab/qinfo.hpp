#pragma once

// Information-theoretic functionals on states, ensembles and classical
// tables, plus the measurement search behind accessible-information lower
// bounds. All entropies are in bits.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "qkdlab/errors.hpp"
#include "qkdlab/parallel.hpp"
#include "qkdlab/qmatrix.hpp"
#include "qkdlab/random.hpp"

namespace qkdlab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
/// Eigenvalues of the second argument below this count as outside its support.
inline constexpr double kSupportTol = 1e-12;
/// Required agreement between the two Holevo forms.
inline constexpr double kHolevoAgreementTol = 1e-8;

inline bool is_infinite(double x) { return std::isinf(x) && x > 0; }

inline double xlog2x(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

inline double shannon_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) h -= xlog2x(p);
  return h;
}

inline double binary_entropy(double p) {
  const std::array<double, 2> probs{p, 1.0 - p};
  return shannon_entropy(probs);
}

// ---------------------------------------------------------------------------
// Distances and entropies on dense states

inline void require_same_dim(std::size_t a, std::size_t b) {
  if (a != b) throw DimensionError("states have different dimensions");
}

/// ||a - b||_1, the sum of singular values of the difference.
inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  require_same_dim(a.dim(), b.dim());
  return hermitian_trace_norm(a.matrix() - b.matrix());
}

/// Tr sqrt(sqrt(a) b sqrt(a)) for PSD a, b (not necessarily normalized),
/// computed as the nuclear norm of sqrt(a) sqrt(b).
inline double root_fidelity(const Matrix& a, const Matrix& b) {
  const Matrix prod = psd_sqrt(a) * psd_sqrt(b);
  return Eigen::JacobiSVD<Matrix>(prod).singularValues().sum();
}

/// (Tr sqrt(sqrt(a) b sqrt(a)))^2.
inline double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  require_same_dim(a.dim(), b.dim());
  const double f = root_fidelity(a.matrix(), b.matrix());
  return std::clamp(f * f, 0.0, 1.0);
}

inline double entropy_of_block(const Matrix& m) {
  const RealVector ev = hermitian_eigenvalues(m);
  double h = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) h -= xlog2x(ev[i]);
  return h;
}

inline double von_neumann_entropy(const DensityMatrix& rho) {
  return std::max(0.0, entropy_of_block(rho.matrix()));
}

/// Tr a (log a - log b) for PSD blocks; +infinity when a has weight outside
/// the support of b.
inline double relative_entropy_of_blocks(const Matrix& a, const Matrix& b) {
  const auto ea = hermitian_eigen(a);
  const auto eb = hermitian_eigen(b);
  double a_log_a = 0.0;
  for (Eigen::Index i = 0; i < ea.values.size(); ++i) a_log_a += xlog2x(ea.values[i]);
  double a_log_b = 0.0;
  const double scale = std::max(1.0, a.trace().real());
  for (Eigen::Index j = 0; j < eb.values.size(); ++j) {
    const Vector w = eb.vectors.col(j);
    const double weight = (w.adjoint() * a * w)(0, 0).real();
    if (eb.values[j] < kSupportTol) {
      if (weight > kSupportTol * scale) return kInfinity;
      continue;
    }
    a_log_b += weight * std::log2(eb.values[j]);
  }
  return a_log_a - a_log_b;
}

inline double relative_entropy(const DensityMatrix& a, const DensityMatrix& b) {
  require_same_dim(a.dim(), b.dim());
  const double s = relative_entropy_of_blocks(a.matrix(), b.matrix());
  return is_infinite(s) ? s : std::max(0.0, s);
}

// ---------------------------------------------------------------------------
// The same functionals on block-diagonal (classical-quantum) states

namespace detail {

inline const Matrix* find_block(const BlockState& s, const std::string& label) {
  auto it = s.blocks().find(label);
  return it == s.blocks().end() ? nullptr : &it->second;
}

inline std::set<std::string> label_union(const BlockState& a, const BlockState& b) {
  std::set<std::string> labels;
  for (const auto& [l, m] : a.blocks()) labels.insert(l);
  for (const auto& [l, m] : b.blocks()) labels.insert(l);
  return labels;
}

}  // namespace detail

inline double trace_distance(const BlockState& a, const BlockState& b) {
  double total = 0.0;
  for (const auto& label : detail::label_union(a, b)) {
    const Matrix* ma = detail::find_block(a, label);
    const Matrix* mb = detail::find_block(b, label);
    if (ma && mb) {
      if (ma->rows() != mb->rows()) throw DimensionError("block '" + label + "' dimensions differ");
      total += hermitian_trace_norm(*ma - *mb);
    } else {
      total += hermitian_trace_norm(ma ? *ma : *mb);
    }
  }
  return total;
}

inline double fidelity(const BlockState& a, const BlockState& b) {
  double root = 0.0;
  for (const auto& [label, ma] : a.blocks()) {
    const Matrix* mb = detail::find_block(b, label);
    if (!mb) continue;
    if (ma.rows() != mb->rows()) throw DimensionError("block '" + label + "' dimensions differ");
    root += root_fidelity(ma, *mb);
  }
  return std::clamp(root * root, 0.0, 1.0);
}

inline double von_neumann_entropy(const BlockState& rho) {
  double h = 0.0;
  for (const auto& [label, m] : rho.blocks()) h += entropy_of_block(m);
  return std::max(0.0, h);
}

inline double relative_entropy(const BlockState& a, const BlockState& b) {
  double s = 0.0;
  for (const auto& [label, ma] : a.blocks()) {
    const Matrix* mb = detail::find_block(b, label);
    if (!mb) {
      if (ma.trace().real() > kSupportTol) return kInfinity;
      continue;
    }
    if (ma.rows() != mb->rows()) throw DimensionError("block '" + label + "' dimensions differ");
    const double term = relative_entropy_of_blocks(ma, *mb);
    if (is_infinite(term)) return kInfinity;
    s += term;
  }
  return std::max(0.0, s);
}

// ---------------------------------------------------------------------------
// Ensembles

template <typename State>
struct EnsembleEntry {
  std::string label;
  double prob;
  State state;
};

/// Finite table of (label, probability, state).
template <typename State>
class Ensemble {
 public:
  using Entry = EnsembleEntry<State>;

  explicit Ensemble(std::vector<Entry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw ValidationError("ensemble must have at least one entry");
    double total = 0.0;
    std::set<std::string> labels;
    for (const auto& e : entries_) {
      if (e.prob < 0.0 || e.prob > 1.0 + 1e-12) throw ValidationError("ensemble probability outside [0,1]");
      if (!labels.insert(e.label).second) throw ValidationError("duplicate ensemble label '" + e.label + "'");
      total += e.prob;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("ensemble probabilities do not sum to 1");
    if constexpr (std::is_same_v<State, DensityMatrix>) {
      for (const auto& e : entries_) require_same_dim(e.state.dim(), entries_.front().state.dim());
    }
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<Entry> entries_;
};

using CqEnsemble = Ensemble<DensityMatrix>;
using BlockEnsemble = Ensemble<BlockState>;

inline DensityMatrix average_state(const CqEnsemble& e) {
  const auto& first = e.entries().front().state;
  Matrix avg = Matrix::Zero(first.dim(), first.dim());
  for (const auto& x : e.entries()) avg += x.prob * x.state.matrix();
  avg /= avg.trace().real();
  return DensityMatrix(avg, first.subsystem_dims());
}

inline BlockState average_state(const BlockEnsemble& e) {
  BlockState avg;
  for (const auto& x : e.entries()) {
    if (x.prob > 0.0) avg.accumulate(x.state, x.prob);
  }
  return avg;
}

/// Both forms of the Holevo quantity.
struct HolevoForms {
  double entropy_form;            // S(avg) - sum q_x S(rho_x)
  double relative_entropy_form;   // sum q_x S(rho_x || avg)
};

template <typename State>
HolevoForms holevo_forms(const Ensemble<State>& e) {
  const auto avg = average_state(e);
  double mean_entropy = 0.0;
  double mean_divergence = 0.0;
  for (const auto& x : e.entries()) {
    if (x.prob <= 0.0) continue;
    mean_entropy += x.prob * von_neumann_entropy(x.state);
    mean_divergence += x.prob * relative_entropy(x.state, avg);
  }
  return {von_neumann_entropy(avg) - mean_entropy, mean_divergence};
}

/// Holevo information chi; throws NumericalError if the entropy-difference
/// and average-relative-entropy forms disagree by more than 1e-8.
template <typename State>
double holevo_chi(const Ensemble<State>& e) {
  const auto forms = holevo_forms(e);
  if (!(std::abs(forms.entropy_form - forms.relative_entropy_form) <= kHolevoAgreementTol)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "Holevo forms disagree: " << forms.entropy_form << " vs " << forms.relative_entropy_form;
    throw NumericalError(msg.str());
  }
  return std::max(0.0, forms.entropy_form);
}

// ---------------------------------------------------------------------------
// Classical tables

/// Mutual information I(X:Y) of a joint table p[x][y].
inline double mutual_information(const std::vector<std::vector<double>>& joint) {
  if (joint.empty()) return 0.0;
  const std::size_t ny = joint.front().size();
  std::vector<double> px(joint.size(), 0.0), py(ny, 0.0);
  for (std::size_t x = 0; x < joint.size(); ++x) {
    for (std::size_t y = 0; y < ny; ++y) {
      px[x] += joint[x][y];
      py[y] += joint[x][y];
    }
  }
  double info = 0.0;
  for (std::size_t x = 0; x < joint.size(); ++x) {
    for (std::size_t y = 0; y < ny; ++y) {
      const double p = joint[x][y];
      if (p > 0.0) info += p * std::log2(p / (px[x] * py[y]));
    }
  }
  return std::max(0.0, info);
}

/// Probability table over tuples of discrete variable values.
class ClassicalJointTable {
 public:
  using Outcome = std::vector<int>;

  ClassicalJointTable(std::size_t arity, std::map<Outcome, double> probs)
      : arity_(arity), probs_(std::move(probs)) {
    if (probs_.empty()) throw ValidationError("joint table is empty");
    double total = 0.0;
    for (const auto& [outcome, p] : probs_) {
      if (outcome.size() != arity_) throw DimensionError("joint table tuple has wrong arity");
      if (p < 0.0) throw ValidationError("joint table has a negative probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("joint table does not sum to 1");
  }

  std::size_t arity() const { return arity_; }
  const std::map<Outcome, double>& probs() const { return probs_; }

  /// Shannon entropy of the marginal on `vars`.
  double entropy(const std::vector<std::size_t>& vars) const {
    std::map<Outcome, double> marginal;
    for (const auto& [outcome, p] : probs_) {
      Outcome key;
      key.reserve(vars.size());
      for (auto v : vars) key.push_back(outcome[v]);
      marginal[key] += p;
    }
    double h = 0.0;
    for (const auto& [key, p] : marginal) h -= xlog2x(p);
    return h;
  }

 private:
  std::size_t arity_;
  std::map<Outcome, double> probs_;
};

/// I(X:Y|Z) = sum_z Pr(z) I(X:Y|Z=z), evaluated as H(XZ)+H(YZ)-H(XYZ)-H(Z).
inline double conditional_mutual_info(const ClassicalJointTable& t, const std::vector<std::size_t>& x,
                                      const std::vector<std::size_t>& y,
                                      const std::vector<std::size_t>& z = {}) {
  std::set<std::size_t> seen;
  for (const auto* group : {&x, &y, &z}) {
    for (auto v : *group) {
      if (v >= t.arity()) throw DimensionError("variable index out of range");
      if (!seen.insert(v).second) throw DimensionError("variable sets must be disjoint");
    }
  }
  if (x.empty() || y.empty()) throw DimensionError("X and Y must be nonempty");
  auto cat = [](std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  const double info =
      t.entropy(cat(x, z)) + t.entropy(cat(y, z)) - t.entropy(cat(cat(x, y), z)) - t.entropy(z);
  return std::max(0.0, info);
}

// ---------------------------------------------------------------------------
// Measurements

inline double measurement_mutual_info(const CqEnsemble& e, const Povm& m) {
  if (m.dim() != e.entries().front().state.dim()) throw DimensionError("POVM dimension does not match ensemble");
  std::vector<std::vector<double>> joint;
  for (const auto& x : e.entries()) {
    std::vector<double> row;
    for (const auto& el : m.elements()) {
      row.push_back(x.prob * std::max(0.0, (el * x.state.matrix()).trace().real()));
    }
    joint.push_back(std::move(row));
  }
  return mutual_information(joint);
}

enum class MeasurementFamily {
  kQubitProjectiveGrid,  // qubits: Fibonacci-sphere projective grid; other dims: random POVMs
  kRandomRank1Povm,      // random rank-1 POVMs in every dimension
};

struct MeasurementFamilyConfig {
  MeasurementFamily kind = MeasurementFamily::kQubitProjectiveGrid;
  /// Sphere directions for the qubit grid, or candidate count for random POVMs.
  int grid_size = 10000;
  int refinement_rounds = 3;
  /// Outcome count k of random rank-1 POVMs (raised to the dimension if smaller).
  int outcomes = 4;
  std::uint64_t seed = 1;
  /// Candidate count for random POVMs when the qubit grid is selected but the
  /// ensemble is not a qubit ensemble.
  int fallback_candidates = 200;
  int threads = 1;

  void validate() const {
    if (grid_size < 2) throw ConfigError("measurement grid size must be >= 2");
    if (refinement_rounds < 0) throw ConfigError("refinement rounds must be >= 0");
    if (outcomes < 1) throw ConfigError("outcome count must be >= 1");
    if (fallback_candidates < 1) throw ConfigError("fallback candidate count must be >= 1");
  }
};

struct AccessibleInfoEstimate {
  double lower;   // max over the searched family (certified lower bound on I_acc)
  double upper;   // Holevo chi
  Povm best_povm; // attains `lower`
};

namespace detail {

using Bloch = std::array<double, 3>;

inline Bloch bloch_vector(const Matrix& rho) {
  // rho = (I + r.sigma)/2 for unit-trace rho
  return {2.0 * rho(0, 1).real(), -2.0 * rho(0, 1).imag(), (rho(0, 0) - rho(1, 1)).real()};
}

/// Mutual information of a qubit ensemble under the projective measurement
/// along unit vector n.
inline double qubit_direction_info(std::span<const double> probs, std::span<const Bloch> blochs,
                                   const Bloch& n) {
  std::vector<std::vector<double>> joint(probs.size(), std::vector<double>(2));
  for (std::size_t x = 0; x < probs.size(); ++x) {
    const double dot = n[0] * blochs[x][0] + n[1] * blochs[x][1] + n[2] * blochs[x][2];
    const double up = std::clamp(0.5 * (1.0 + dot), 0.0, 1.0);
    joint[x][0] = probs[x] * up;
    joint[x][1] = probs[x] * (1.0 - up);
  }
  return mutual_information(joint);
}

inline Bloch normalize(Bloch v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

/// Coordinate axes first, then a Fibonacci sphere of `count` points.
inline std::vector<Bloch> qubit_grid(int count) {
  std::vector<Bloch> dirs = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    dirs.push_back({r * std::cos(phi), r * std::sin(phi), z});
  }
  return dirs;
}

inline Povm qubit_projective(const Bloch& n) {
  const Matrix ns = n[0] * qubit::pauli_x() + n[1] * qubit::pauli_y() + n[2] * qubit::pauli_z();
  const Matrix id = Matrix::Identity(2, 2);
  return Povm({0.5 * (id + ns), 0.5 * (id - ns)});
}

struct QubitSearch {
  double value;
  Bloch direction;
};

inline QubitSearch search_qubit(std::span<const double> probs, std::span<const Bloch> blochs,
                                const MeasurementFamilyConfig& cfg) {
  const auto dirs = qubit_grid(cfg.grid_size);
  std::vector<double> values(dirs.size());
  parallel_for(dirs.size(), cfg.threads, [&](std::size_t i) {
    values[i] = qubit_direction_info(probs, blochs, dirs[i]);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  QubitSearch result{values[best], dirs[best]};

  // Shrinking local grids in the tangent plane of the incumbent direction.
  constexpr int kHalfWidth = 4;
  double radius = 2.0 * std::sqrt(4.0 * M_PI / cfg.grid_size);
  for (int round = 0; round < cfg.refinement_rounds; ++round) {
    const Bloch n = result.direction;
    const Bloch a = std::abs(n[0]) < 0.9 ? Bloch{1.0, 0.0, 0.0} : Bloch{0.0, 1.0, 0.0};
    const double an = a[0] * n[0] + a[1] * n[1] + a[2] * n[2];
    const Bloch u = normalize({a[0] - an * n[0], a[1] - an * n[1], a[2] - an * n[2]});
    const Bloch v = {n[1] * u[2] - n[2] * u[1], n[2] * u[0] - n[0] * u[2], n[0] * u[1] - n[1] * u[0]};
    const double step = radius / kHalfWidth;
    for (int i = -kHalfWidth; i <= kHalfWidth; ++i) {
      for (int j = -kHalfWidth; j <= kHalfWidth; ++j) {
        if (i == 0 && j == 0) continue;
        const Bloch cand = normalize({n[0] + step * (i * u[0] + j * v[0]), n[1] + step * (i * u[1] + j * v[1]),
                                      n[2] + step * (i * u[2] + j * v[2])});
        const double val = qubit_direction_info(probs, blochs, cand);
        if (val > result.value) result = {val, cand};
      }
    }
    radius /= 4.0;
  }
  return result;
}

/// Rank-1 POVM built from the columns v_j of `vecs`: O_j = G^{-1/2} v_j v_j^dagger G^{-1/2}
/// with G = sum_j v_j v_j^dagger. Returns the whitened vectors.
inline std::optional<Matrix> whiten(const Matrix& vecs) {
  const Matrix g = vecs * vecs.adjoint();
  const auto eig = hermitian_eigen(g);
  if (eig.values.minCoeff() < 1e-10 * std::max(1.0, eig.values.maxCoeff())) return std::nullopt;
  RealVector inv_sqrt = eig.values.cwiseSqrt().cwiseInverse();
  const Matrix g_inv_sqrt = eig.vectors * inv_sqrt.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
  return g_inv_sqrt * vecs;
}

inline double rank1_info(std::span<const double> probs, std::span<const Matrix> states, const Matrix& w) {
  std::vector<std::vector<double>> joint(probs.size(), std::vector<double>(w.cols()));
  for (std::size_t x = 0; x < probs.size(); ++x) {
    const Matrix pw = states[x] * w;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      joint[x][j] = probs[x] * std::max(0.0, w.col(j).dot(pw.col(j)).real());
    }
  }
  return mutual_information(joint);
}

inline Povm rank1_povm(const Matrix& w) {
  std::vector<Matrix> els;
  for (Eigen::Index j = 0; j < w.cols(); ++j) els.push_back(w.col(j) * w.col(j).adjoint());
  // Absorb rounding so the POVM constructor's 1e-10 completeness check holds.
  const Matrix sum = std::accumulate(els.begin(), els.end(), Matrix(Matrix::Zero(w.rows(), w.rows())));
  const auto eig = hermitian_eigen(sum);
  const Matrix fix = eig.vectors * eig.values.cwiseSqrt().cwiseInverse().cast<Complex>().asDiagonal() *
                     eig.vectors.adjoint();
  for (auto& e : els) {
    e = fix * e * fix.adjoint();
    e = 0.5 * (e + e.adjoint()).eval();
  }
  return Povm(std::move(els));
}

struct GeneralSearch {
  double value;
  Matrix vectors;  // whitened POVM vectors
};

inline GeneralSearch search_general(std::span<const double> probs, std::span<const Matrix> states,
                                    int candidates, const MeasurementFamilyConfig& cfg) {
  const Eigen::Index d = states.front().rows();
  const Eigen::Index k = std::max<Eigen::Index>(cfg.outcomes, d);

  // Deterministic candidates: computational basis and eigenbases of the average
  // and of each state, then random rank-1 POVMs.
  std::vector<Matrix> seeds;
  seeds.push_back(Matrix::Identity(d, d));
  Matrix avg = Matrix::Zero(d, d);
  for (std::size_t x = 0; x < states.size(); ++x) avg += probs[x] * states[x];
  seeds.push_back(hermitian_eigen(avg).vectors);
  for (const auto& s : states) seeds.push_back(hermitian_eigen(s).vectors);

  const std::size_t total = seeds.size() + static_cast<std::size_t>(candidates);
  std::vector<double> values(total, -1.0);
  std::vector<Matrix> whitened(total);
  parallel_for(total, cfg.threads, [&](std::size_t i) {
    Matrix raw;
    if (i < seeds.size()) {
      raw = seeds[i];
    } else {
      Rng rng = Rng::stream(cfg.seed, i - seeds.size());
      raw.resize(d, k);
      for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < k; ++c) raw(r, c) = Complex(rng.normal(), rng.normal());
    }
    auto w = whiten(raw);
    if (!w) return;
    whitened[i] = *w;
    values[i] = rank1_info(probs, states, *w);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < total; ++i) {
    if (values[i] > values[best]) best = i;
  }
  GeneralSearch result{values[best], whitened[best]};

  // Coordinate-wise refinement of the raw vectors with halving steps.
  double step = 0.1;
  for (int round = 0; round < cfg.refinement_rounds; ++round) {
    for (Eigen::Index c = 0; c < result.vectors.cols(); ++c) {
      for (Eigen::Index r = 0; r < d; ++r) {
        for (Complex delta : {Complex(step, 0), Complex(-step, 0), Complex(0, step), Complex(0, -step)}) {
          Matrix trial = result.vectors;
          trial(r, c) += delta;
          auto w = whiten(trial);
          if (!w) continue;
          const double val = rank1_info(probs, states, *w);
          if (val > result.value) result = {val, *w};
        }
      }
    }
    step /= 2.0;
  }
  return result;
}

}  // namespace detail

/// Lower bound on I_acc by searching the configured measurement family, and
/// the Holevo upper bound.
inline AccessibleInfoEstimate accessible_info_estimate(const CqEnsemble& e,
                                                       const MeasurementFamilyConfig& cfg = {}) {
  cfg.validate();
  const double upper = holevo_chi(e);
  const std::size_t d = e.entries().front().state.dim();
  std::vector<double> probs;
  std::vector<Matrix> states;
  for (const auto& x : e.entries()) {
    probs.push_back(x.prob);
    states.push_back(x.state.matrix());
  }
  if (d == 1) return {0.0, upper, Povm::trivial(1)};

  if (d == 2 && cfg.kind == MeasurementFamily::kQubitProjectiveGrid) {
    std::vector<detail::Bloch> blochs;
    for (const auto& s : states) blochs.push_back(detail::bloch_vector(s));
    const auto found = detail::search_qubit(probs, blochs, cfg);
    return {found.value, upper, detail::qubit_projective(found.direction)};
  }
  const int candidates =
      cfg.kind == MeasurementFamily::kRandomRank1Povm ? cfg.grid_size : cfg.fallback_candidates;
  const auto found = detail::search_general(probs, states, candidates, cfg);
  return {found.value, upper, detail::rank1_povm(found.vectors)};
}

/// Shannon distinguishability: family lower bound on the accessible
/// information of the uniform two-state ensemble {1/2 a, 1/2 b}.
inline double shannon_distinguishability(const DensityMatrix& a, const DensityMatrix& b,
                                         const MeasurementFamilyConfig& cfg = {}) {
  require_same_dim(a.dim(), b.dim());
  const CqEnsemble e({{"0", 0.5, a}, {"1", 0.5, b}});
  return accessible_info_estimate(e, cfg).lower;
}

struct AccessibleInfoBounds {
  double lower;
  double upper;
};

/// Accessible-information bounds for an ensemble of block-diagonal states.
/// Reading the block label commutes with every state, so
/// I_acc = I(X:label) + sum_t Pr(t) I_acc(ensemble conditioned on t);
/// the lower bound applies the family search inside each block.
inline AccessibleInfoBounds accessible_info_bounds(const BlockEnsemble& e, const MeasurementFamilyConfig& cfg = {}) {
  cfg.validate();
  const double upper = holevo_chi(e);

  std::set<std::string> labels;
  for (const auto& x : e.entries()) {
    for (const auto& [l, m] : x.state.blocks()) labels.insert(l);
  }
  std::vector<std::string> label_list(labels.begin(), labels.end());

  // Joint table Pr(x, label) and conditional ensembles per label.
  std::vector<std::vector<double>> joint(e.size(), std::vector<double>(label_list.size(), 0.0));
  for (std::size_t xi = 0; xi < e.size(); ++xi) {
    const auto& x = e.entries()[xi];
    for (std::size_t li = 0; li < label_list.size(); ++li) {
      const Matrix* m = detail::find_block(x.state, label_list[li]);
      if (m) joint[xi][li] = x.prob * std::max(0.0, m->trace().real());
    }
  }
  const double label_info = mutual_information(joint);

  // Identical conditional ensembles recur across labels; memoize by content.
  std::map<std::string, double> memo;
  double within = 0.0;
  for (std::size_t li = 0; li < label_list.size(); ++li) {
    double pt = 0.0;
    for (std::size_t xi = 0; xi < e.size(); ++xi) pt += joint[xi][li];
    if (pt <= 0.0) continue;
    std::vector<CqEnsemble::Entry> cond;
    std::ostringstream key;
    key.precision(12);
    for (std::size_t xi = 0; xi < e.size(); ++xi) {
      if (joint[xi][li] <= 0.0) continue;
      const Matrix& m = *detail::find_block(e.entries()[xi].state, label_list[li]);
      const Matrix normalized = m / m.trace().real();
      cond.push_back({e.entries()[xi].label, joint[xi][li] / pt, DensityMatrix(normalized)});
      key << joint[xi][li] / pt << ':';
      for (Eigen::Index i = 0; i < normalized.size(); ++i) {
        key << normalized(i).real() << ',' << normalized(i).imag() << ';';
      }
      key << '|';
    }
    if (cond.size() < 2 || cond.front().state.dim() == 1) continue;
    auto it = memo.find(key.str());
    if (it == memo.end()) {
      double total = 0.0;
      for (auto& c : cond) total += c.prob;
      for (auto& c : cond) c.prob /= total;
      const double found = accessible_info_estimate(CqEnsemble(std::move(cond)), cfg).lower;
      it = memo.emplace(key.str(), found).first;
    }
    within += pt * it->second;
  }
  return {label_info + within, upper};
}

}  // namespace qkdlab
