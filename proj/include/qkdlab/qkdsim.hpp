#pragma once

// BB84 prepare-and-measure simulation under per-signal eavesdropping, and
// the real / ideal / hybrid states of the composability game.
//
// Eve's view of a run is a block-diagonal state: the label carries her
// classical data, the block her quantum probes on the key positions. Her
// probes on test and unsifted positions, and the individual test values,
// are factors shared by every state built from a record, so they enter only
// through branch weights (see README, "Exact enumeration").

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "qkdlab/errors.hpp"
#include "qkdlab/parallel.hpp"
#include "qkdlab/qinfo.hpp"
#include "qkdlab/qmatrix.hpp"
#include "qkdlab/random.hpp"

namespace qkdlab {

enum class SimulationMode { kExact, kMonteCarlo };

struct ProtocolConfig {
  int n = 4;
  double test_fraction = 0.5;
  double qber_threshold = 0.0;
  /// Output key length after hashing; 0 keeps the remaining sifted bits raw.
  int m_out = 1;
  SimulationMode mode = SimulationMode::kExact;
  long trials = 100000;
  std::uint64_t seed = 1;

  void validate() const;
};

enum class EveKind { kNone, kInterceptResend, kEntanglingProbe };

struct EveStrategy {
  EveKind kind = EveKind::kNone;
  double p = 0.0;
  double probe_angle = 0.0;

  void validate() const {
    if (kind == EveKind::kInterceptResend && !(p >= 0.0 && p <= 1.0)) {
      throw ConfigError("intercept-resend probability must lie in [0, 1]");
    }
    if (kind == EveKind::kEntanglingProbe && !std::isfinite(probe_angle)) {
      throw ConfigError("probe angle must be finite");
    }
  }

  static EveStrategy none() { return {}; }
  static EveStrategy intercept_resend(double p) { return {EveKind::kInterceptResend, p, 0.0}; }
  static EveStrategy entangling_probe(double theta) { return {EveKind::kEntanglingProbe, 0.0, theta}; }
};

using KeyPair = std::pair<std::string, std::string>;

struct QkdRunRecord {
  std::map<int, double> length_dist;
  std::map<KeyPair, double> key_table;
  /// Normalized conditional states of Eve, one per key pair in key_table.
  std::map<KeyPair, BlockState> eve_states;
  DensityMatrix rho_ab_signal = DensityMatrix::maximally_mixed(4).with_subsystem_dims({2, 2});
  /// Probability that a test bit disagrees (expected errors / expected test bits).
  double expected_qber = 0.0;
  /// Monte Carlo standard error of expected_qber; 0 in exact mode.
  double qber_std_error = 0.0;

  void validate() const;
};

struct GameStates {
  BlockState rho_qkd, rho_ideal, rho_qi1, rho_qi2;
  std::map<int, BlockState> rho_bar, rho_tilde;
};

inline constexpr double kMaxEnumeration = 16777216.0;  // 2^24 branches
inline constexpr double kRecordTol = 1e-9;

// ---------------------------------------------------------------------------
// Per-signal attack

/// Eve's action on one signal as a pure instrument: each branch maps the
/// signal qubit to signal (x) probe, and its code is Eve's classical record.
struct Instrument {
  /// Kraus operator sqrt(weight) * op. Keeping the weight apart lets
  /// projector branches stay in exact dyadic arithmetic.
  struct Branch {
    int code;
    Matrix op;  // (2 * probe_dim) x 2, signal index major
    double weight = 1.0;
  };
  int probe_dim = 1;
  std::vector<Branch> branches;
};

inline Vector basis_ket(int basis, int bit) {
  if (basis == 0) return bit == 0 ? qubit::zero() : qubit::one();
  return bit == 0 ? qubit::plus() : qubit::minus();
}

/// |bit><bit| in the Z (basis 0) or X (basis 1) basis, with exact entries.
inline Matrix basis_projector(int basis, int bit) {
  Matrix p = Matrix::Zero(2, 2);
  if (basis == 0) {
    p(bit, bit) = 1.0;
  } else {
    const double off = bit == 0 ? 0.5 : -0.5;
    p << 0.5, off, off, 0.5;
  }
  return p;
}

/// Codes: 0 = signal untouched (or probed); for intercept-resend 1..4 are
/// (Z,0), (Z,1), (X,+), (X,-).
inline Instrument per_signal_instrument(const EveStrategy& eve) {
  eve.validate();
  Instrument ins;
  const bool intercept = eve.kind == EveKind::kInterceptResend && eve.p > 0.0;
  const bool probe = eve.kind == EveKind::kEntanglingProbe && std::abs(std::sin(eve.probe_angle / 2)) > 1e-15;
  if (intercept) {
    if (eve.p < 1.0) ins.branches.push_back({0, Matrix::Identity(2, 2), 1.0 - eve.p});
    int code = 1;
    for (int basis = 0; basis < 2; ++basis) {
      for (int bit = 0; bit < 2; ++bit) ins.branches.push_back({code++, basis_projector(basis, bit), eve.p / 2.0});
    }
  } else if (probe) {
    // |b> -> |b> (cos(t/2)|0> + (-1)^b sin(t/2)|1>)
    ins.probe_dim = 2;
    const double c = std::cos(eve.probe_angle / 2), s = std::sin(eve.probe_angle / 2);
    Matrix v = Matrix::Zero(4, 2);
    v(0, 0) = c;
    v(1, 0) = s;
    v(2, 1) = c;
    v(3, 1) = -s;
    ins.branches.push_back({0, v});
  } else {
    ins.branches.push_back({0, Matrix::Identity(2, 2)});
  }
  return ins;
}

/// One (Alice bit, Bob bit, Eve code) outcome on a sifted signal in a given
/// basis: `block` is Eve's unnormalized probe state with trace
/// Pr(b, code | a, basis).
struct SignalEntry {
  int a;
  int b;
  int code;
  double prob;
  Matrix block;
};

inline std::vector<SignalEntry> signal_entries(const Instrument& ins, int basis) {
  std::vector<SignalEntry> out;
  const int de = ins.probe_dim;
  for (int a = 0; a < 2; ++a) {
    const Matrix sent = basis_projector(basis, a);
    for (const auto& br : ins.branches) {
      const Matrix out_state = br.weight * (br.op * sent * br.op.adjoint());
      for (int b = 0; b < 2; ++b) {
        // (<b| (x) I) out_state (|b> (x) I)
        const Matrix proj = basis_projector(basis, b);
        Matrix block = Matrix::Zero(de, de);
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) block += proj(j, i) * out_state.block(i * de, j * de, de, de);
        block = 0.5 * (block + block.adjoint());
        const double prob = block.trace().real();
        if (prob < 1e-15) continue;
        out.push_back({a, b, br.code, prob, block});
      }
    }
  }
  return out;
}

inline double signal_error_rate(const std::vector<SignalEntry>& entries) {
  double err = 0.0;
  for (const auto& x : entries) {
    if (x.a != x.b) err += 0.5 * x.prob;
  }
  return err;
}

/// Alice prepares Phi, the second half passes Eve's channel, the probe is
/// traced out.
inline DensityMatrix channel_to_ent_pair(const EveStrategy& eve) {
  const auto ins = per_signal_instrument(eve);
  const int de = ins.probe_dim;
  const Vector phi = qubit::epr();
  Matrix rho = Matrix::Zero(4, 4);
  for (const auto& br : ins.branches) {
    // (I (x) K)|Phi>, ordered A, B, E
    Vector v = Vector::Zero(4 * de);
    for (int a = 0; a < 2; ++a) {
      Vector in(2);
      in << phi(2 * a), phi(2 * a + 1);
      const Vector outb = br.op * in;
      for (Eigen::Index k = 0; k < outb.size(); ++k) v(a * 2 * de + k) = outb(k);
    }
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int e = 0; e < de; ++e) rho(i, j) += br.weight * v(i * de + e) * std::conj(v(j * de + e));
  }
  return DensityMatrix(rho, {2, 2});
}

/// F(rho_AB^(x)m, Phi^(x)m) = F(rho_AB, Phi)^m.
inline double singlet_fidelity(const DensityMatrix& rho_ab, int m) {
  if (rho_ab.dim() != 4) throw DimensionError("singlet fidelity needs a two-qubit state");
  if (m < 0) throw ValidationError("key length must be nonnegative");
  const DensityMatrix phi = DensityMatrix::from_pure(PureState(qubit::epr(), {2, 2}));
  const double f1 = fidelity(rho_ab, phi);
  const double fm = std::pow(f1, m);
  if (m >= 2 && m <= 3) {
    DensityMatrix rho_m = rho_ab, phi_m = phi;
    for (int i = 1; i < m; ++i) {
      rho_m = tensor(rho_m, rho_ab);
      phi_m = tensor(phi_m, phi);
    }
    const double direct = fidelity(rho_m, phi_m);
    if (std::abs(direct - fm) > 1e-9) {
      throw NumericalError("singlet fidelity not multiplicative: " + std::to_string(direct) + " vs " +
                           std::to_string(fm));
    }
  }
  return fm;
}

// ---------------------------------------------------------------------------
// Protocol parameters

inline int test_count(double test_fraction, int s) {
  return static_cast<int>(std::ceil(test_fraction * s - 1e-9));
}

inline int max_key_positions(const ProtocolConfig& cfg) {
  int best = 0;
  for (int s = 0; s <= cfg.n; ++s) best = std::max(best, s - test_count(cfg.test_fraction, s));
  return best;
}

inline void ProtocolConfig::validate() const {
  if (n < 2) throw ConfigError("n must be at least 2");
  if (mode == SimulationMode::kExact && n > 10) throw ConfigError("exact mode supports n <= 10");
  if (n > 62) throw ConfigError("n must be at most 62");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  if (!(qber_threshold >= 0.0 && qber_threshold <= 0.5)) throw ConfigError("qber_threshold must lie in [0, 0.5]");
  if (m_out < 0) throw ConfigError("m_out must be nonnegative");
  if (mode == SimulationMode::kMonteCarlo && trials < 1) throw ConfigError("trials must be positive");
  if (m_out > max_key_positions(*this)) {
    throw ConfigError("m_out = " + std::to_string(m_out) + " exceeds the sifted bits left after testing (" +
                      std::to_string(max_key_positions(*this)) + ")");
  }
}

/// A run aborts when the observed error rate exceeds the threshold, or too
/// few key positions remain.
inline bool length_aborts(const ProtocolConfig& cfg, int r) { return r < cfg.m_out || (cfg.m_out == 0 && r == 0); }

inline bool qber_aborts(const ProtocolConfig& cfg, int errors, int t) {
  return t > 0 && static_cast<double>(errors) / t > cfg.qber_threshold;
}

/// Branches the exact enumerator visits: key-position outcome combinations
/// summed over reachable key-position counts.
inline double enumeration_size(const ProtocolConfig& cfg, const EveStrategy& eve) {
  const auto ins = per_signal_instrument(eve);
  const double per_position =
      static_cast<double>(signal_entries(ins, 0).size() + signal_entries(ins, 1).size());
  double total = 0.0;
  for (int s = 0; s <= cfg.n; ++s) {
    const int r = s - test_count(cfg.test_fraction, s);
    total += (test_count(cfg.test_fraction, s) + 1);
    if (!length_aborts(cfg, r)) total += std::pow(per_position, r);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Privacy amplification

/// Seeded m x r binary Toeplitz matrix of full row rank, rows as bit masks
/// (bit j = column j).
class ToeplitzHash {
 public:
  ToeplitzHash(int r, int m, std::uint64_t seed) : r_(r), m_(m) {
    if (m > r) throw ConfigError("hash output longer than input");
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng = Rng::stream(seed, (static_cast<std::uint64_t>(r) << 40) ^ (static_cast<std::uint64_t>(m) << 20) ^ attempt);
      std::vector<int> diag(static_cast<std::size_t>(std::max(0, m + r - 1)));
      for (auto& bit : diag) bit = rng.coin() ? 1 : 0;
      rows_.assign(m, 0);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < r; ++j)
          if (diag[i - j + r - 1]) rows_[i] |= std::uint64_t{1} << j;
      if (full_rank()) break;
    }
  }

  std::string apply(std::uint64_t bits) const {
    std::string out(m_, '0');
    for (int i = 0; i < m_; ++i) out[i] = (std::popcount(rows_[i] & bits) & 1) ? '1' : '0';
    return out;
  }

  const std::vector<std::uint64_t>& rows() const { return rows_; }

 private:
  bool full_rank() const {
    std::vector<std::uint64_t> rows = rows_;
    int rank = 0;
    for (int col = 0; col < r_ && rank < m_; ++col) {
      const std::uint64_t bit = std::uint64_t{1} << col;
      auto pivot = std::find_if(rows.begin() + rank, rows.end(), [&](std::uint64_t x) { return x & bit; });
      if (pivot == rows.end()) continue;
      std::swap(*pivot, rows[rank]);
      for (int i = 0; i < m_; ++i)
        if (i != rank && (rows[i] & bit)) rows[i] ^= rows[rank];
      ++rank;
    }
    return rank == m_;
  }

  int r_, m_;
  std::vector<std::uint64_t> rows_;
};

inline std::string bits_string(std::uint64_t bits, int len) {
  std::string out(len, '0');
  for (int i = 0; i < len; ++i) out[i] = ((bits >> i) & 1) ? '1' : '0';
  return out;
}

namespace detail {

inline std::string eve_label(const std::vector<int>& bases, const std::string& codes) {
  std::string label;
  for (int b : bases) label += b == 0 ? 'Z' : 'X';
  return label + ':' + codes;
}

inline const std::string kAbortLabel = "abort";

using KeyStates = std::map<KeyPair, BlockState>;

inline void merge_into(KeyStates& into, const KeyStates& from, double weight) {
  for (const auto& [keys, state] : from) into[keys].accumulate(state, weight);
}

class KeyHasher {
 public:
  KeyHasher(const ProtocolConfig& cfg) : cfg_(cfg) {}
  KeyPair keys(int r, std::uint64_t a, std::uint64_t b) {
    if (cfg_.m_out == 0) return {bits_string(a, r), bits_string(b, r)};
    auto it = hashes_.find(r);
    if (it == hashes_.end()) it = hashes_.emplace(r, ToeplitzHash(r, cfg_.m_out, cfg_.seed)).first;
    return {it->second.apply(a), it->second.apply(b)};
  }

 private:
  const ProtocolConfig& cfg_;
  std::map<int, ToeplitzHash> hashes_;
};

/// Sum over key-position outcomes for one ordered basis pattern, with
/// Alice's bits uniform.
inline KeyStates key_part(const std::vector<int>& bases, const std::vector<SignalEntry> (&entries)[2],
                          KeyHasher& hasher) {
  KeyStates out;
  const int r = static_cast<int>(bases.size());
  std::string codes(r, '0');
  std::vector<Matrix> partial(r + 1);
  partial[0] = Matrix::Identity(1, 1);
  auto recurse = [&](auto&& self, int i, std::uint64_t a, std::uint64_t b) -> void {
    if (i == r) {
      out[hasher.keys(r, a, b)].accumulate(eve_label(bases, codes), partial[r]);
      return;
    }
    for (const auto& x : entries[bases[i]]) {
      codes[i] = static_cast<char>('0' + x.code);
      partial[i + 1] = 0.5 * kron(partial[i], x.block);
      self(self, i + 1, a | (std::uint64_t(x.a) << i), b | (std::uint64_t(x.b) << i));
    }
  };
  recurse(recurse, 0, 0, 0);
  return out;
}

inline double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

inline void finish_record(QkdRunRecord& rec, KeyStates& states, double abort_weight) {
  if (abort_weight > 0.0) {
    BlockState s;
    s.accumulate(kAbortLabel, Matrix::Identity(1, 1), abort_weight);
    states[{"", ""}].accumulate(s);
  }
  for (auto& [keys, state] : states) {
    const double p = state.trace();
    if (p <= 0.0) continue;
    rec.key_table[keys] = p;
    rec.eve_states.emplace(keys, state.normalized());
  }
}

inline QkdRunRecord run_exact(const ProtocolConfig& cfg, const EveStrategy& eve, int threads) {
  if (enumeration_size(cfg, eve) > kMaxEnumeration) {
    throw CapacityError("exact enumeration exceeds 2^24 branches; use monte_carlo mode");
  }
  const auto ins = per_signal_instrument(eve);
  const std::vector<SignalEntry> entries[2] = {signal_entries(ins, 0), signal_entries(ins, 1)};
  const double err = 0.5 * (signal_error_rate(entries[0]) + signal_error_rate(entries[1]));

  QkdRunRecord rec;
  rec.rho_ab_signal = channel_to_ent_pair(eve);
  KeyStates states;
  double abort_weight = 0.0, test_bits = 0.0, test_errors = 0.0;
  std::map<int, double> r_weight;  // key-position count -> weight of non-abort branches
  for (int s = 0; s <= cfg.n; ++s) {
    const double ps = binomial(cfg.n, s) * std::ldexp(1.0, -cfg.n);
    const int t = test_count(cfg.test_fraction, s);
    const int r = s - t;
    test_bits += ps * t;
    test_errors += ps * t * err;
    if (length_aborts(cfg, r)) {
      abort_weight += ps;
      continue;
    }
    double pass = 0.0;
    for (int e = 0; e <= t; ++e) {
      if (!qber_aborts(cfg, e, t)) pass += binomial(t, e) * std::pow(err, e) * std::pow(1.0 - err, t - e);
    }
    abort_weight += ps * (1.0 - pass);
    if (ps * pass > 0.0) r_weight[r] += ps * pass;
  }
  for (const auto& [r, w] : r_weight) {
    const std::size_t patterns = std::size_t{1} << r;
    std::vector<KeyStates> parts(patterns);
    parallel_for(patterns, threads, [&](std::size_t mask) {
      std::vector<int> bases(r);
      for (int i = 0; i < r; ++i) bases[i] = (mask >> i) & 1;
      KeyHasher hasher(cfg);
      parts[mask] = key_part(bases, entries, hasher);
    });
    for (const auto& part : parts) merge_into(states, part, w / static_cast<double>(patterns));
    rec.length_dist[cfg.m_out == 0 ? r : cfg.m_out] += w;
  }
  if (abort_weight > 0.0) rec.length_dist[0] += abort_weight;
  finish_record(rec, states, abort_weight);
  rec.expected_qber = test_bits > 0.0 ? test_errors / test_bits : 0.0;
  rec.validate();
  return rec;
}

struct ChunkResult {
  KeyStates states;
  std::map<int, long> lengths;
  long aborts = 0;
  double e = 0, t = 0, ee = 0, et = 0, tt = 0;
};

inline QkdRunRecord run_monte_carlo(const ProtocolConfig& cfg, const EveStrategy& eve, int threads) {
  const auto ins = per_signal_instrument(eve);
  const std::vector<SignalEntry> entries[2] = {signal_entries(ins, 0), signal_entries(ins, 1)};
  constexpr std::size_t kChunks = 64;
  std::vector<ChunkResult> chunks(kChunks);
  const double weight = 1.0 / static_cast<double>(cfg.trials);

  parallel_for(kChunks, threads, [&](std::size_t c) {
    const long begin = static_cast<long>(c * cfg.trials / kChunks);
    const long end = static_cast<long>((c + 1) * cfg.trials / kChunks);
    Rng rng = Rng::stream(cfg.seed, c);
    KeyHasher hasher(cfg);
    auto& out = chunks[c];
    std::vector<int> alice_basis(cfg.n), bob_basis(cfg.n), a(cfg.n), b(cfg.n);
    std::vector<const SignalEntry*> picked(cfg.n);
    for (long trial = begin; trial < end; ++trial) {
      std::vector<int> sifted;
      for (int i = 0; i < cfg.n; ++i) {
        alice_basis[i] = rng.coin();
        bob_basis[i] = rng.coin();
        a[i] = rng.coin();
        if (alice_basis[i] == bob_basis[i]) sifted.push_back(i);
      }
      for (int i : sifted) {
        // Draw (b, code) from the instrument given Alice's bit.
        double u = rng.uniform();
        const SignalEntry* choice = nullptr;
        for (const auto& x : entries[alice_basis[i]]) {
          if (x.a != a[i]) continue;
          choice = &x;
          if ((u -= x.prob) < 0.0) break;
        }
        picked[i] = choice;
        b[i] = choice->b;
      }
      const int s = static_cast<int>(sifted.size());
      const int t = test_count(cfg.test_fraction, s);
      for (int k = 0; k < t; ++k) std::swap(sifted[k], sifted[k + rng.below(s - k)]);
      int errors = 0;
      for (int k = 0; k < t; ++k) errors += a[sifted[k]] != b[sifted[k]];
      std::vector<int> key_pos(sifted.begin() + t, sifted.end());
      std::sort(key_pos.begin(), key_pos.end());
      const int r = static_cast<int>(key_pos.size());
      out.e += errors;
      out.t += t;
      out.ee += double(errors) * errors;
      out.et += double(errors) * t;
      out.tt += double(t) * t;
      if (length_aborts(cfg, r) || qber_aborts(cfg, errors, t)) {
        ++out.aborts;
        continue;
      }
      std::uint64_t abits = 0, bbits = 0;
      std::vector<int> bases(r);
      std::string codes(r, '0');
      Matrix block = Matrix::Identity(1, 1);
      for (int k = 0; k < r; ++k) {
        const int i = key_pos[k];
        abits |= std::uint64_t(a[i]) << k;
        bbits |= std::uint64_t(b[i]) << k;
        bases[k] = alice_basis[i];
        codes[k] = static_cast<char>('0' + picked[i]->code);
        if (block.rows() * ins.probe_dim > static_cast<Eigen::Index>(kMaxDim)) {
          throw CapacityError("Eve's key-position probe exceeds dimension 4096");
        }
        block = kron(block, picked[i]->block / picked[i]->prob);
      }
      out.states[hasher.keys(r, abits, bbits)].accumulate(eve_label(bases, codes), block, weight);
      ++out.lengths[cfg.m_out == 0 ? r : cfg.m_out];
    }
  });

  QkdRunRecord rec;
  rec.rho_ab_signal = channel_to_ent_pair(eve);
  KeyStates states;
  long aborts = 0;
  std::map<int, long> lengths;
  double e = 0, t = 0, ee = 0, et = 0, tt = 0;
  for (const auto& c : chunks) {
    merge_into(states, c.states, 1.0);
    aborts += c.aborts;
    for (const auto& [m, count] : c.lengths) lengths[m] += count;
    e += c.e;
    t += c.t;
    ee += c.ee;
    et += c.et;
    tt += c.tt;
  }
  for (const auto& [m, count] : lengths) rec.length_dist[m] = count * weight;
  if (aborts > 0) rec.length_dist[0] = aborts * weight;
  finish_record(rec, states, aborts * weight);
  if (t > 0.0) {
    const double q = e / t;
    rec.expected_qber = q;
    rec.qber_std_error = std::sqrt(std::max(0.0, ee - 2.0 * q * et + q * q * tt)) / t;
  }
  rec.validate();
  return rec;
}

}  // namespace detail

inline void QkdRunRecord::validate() const {
  double total = 0.0;
  std::map<int, double> marginal;
  for (const auto& [keys, p] : key_table) {
    if (keys.first.size() != keys.second.size()) throw ValidationError("key pair lengths differ");
    if (p < 0.0) throw ValidationError("negative key probability");
    marginal[static_cast<int>(keys.first.size())] += p;
    auto it = eve_states.find(keys);
    if (it == eve_states.end()) throw ValidationError("missing Eve state for key pair");
    if (std::abs(it->second.trace() - 1.0) > kRecordTol) throw ValidationError("Eve state is not normalized");
    it->second.validate();
  }
  for (const auto& [m, p] : length_dist) {
    if (p < 0.0) throw ValidationError("negative length probability");
    total += p;
    if (std::abs(marginal[m] - p) > kRecordTol) {
      throw ValidationError("key table marginal disagrees with Pr(M=" + std::to_string(m) + ")");
    }
  }
  for (const auto& [m, p] : marginal) {
    if (!length_dist.contains(m) && p > kRecordTol) throw ValidationError("key length missing from length_dist");
  }
  if (std::abs(total - 1.0) > kRecordTol) throw ValidationError("length distribution does not sum to 1");
}

inline QkdRunRecord run_protocol(const ProtocolConfig& cfg, const EveStrategy& eve, int threads = 1) {
  cfg.validate();
  eve.validate();
  return cfg.mode == SimulationMode::kExact ? detail::run_exact(cfg, eve, threads)
                                            : detail::run_monte_carlo(cfg, eve, threads);
}

// ---------------------------------------------------------------------------
// Game states

inline std::string key_register(const std::string& ka, const std::string& kb) { return ka + ',' + kb + ';'; }

/// Keys of length m in lexicographic order.
inline std::vector<std::string> all_keys(int m) {
  std::vector<std::string> keys;
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << m); ++v) {
    std::string k(m, '0');
    for (int i = 0; i < m; ++i) k[i] = ((v >> (m - 1 - i)) & 1) ? '1' : '0';
    keys.push_back(k);
  }
  return keys;
}

/// rho_{E,k,k}, or rho~_m when the equal key pair (k,k) never occurs.
inline const BlockState& equal_key_state(const QkdRunRecord& rec, const GameStates& gs, const std::string& k) {
  auto it = rec.eve_states.find({k, k});
  if (it != rec.eve_states.end() && rec.key_table.at({k, k}) > 0.0) return it->second;
  return gs.rho_tilde.at(static_cast<int>(k.size()));
}

inline GameStates build_game_states(const QkdRunRecord& rec) {
  rec.validate();
  GameStates gs;
  for (const auto& [keys, p] : rec.key_table) {
    gs.rho_qkd.accumulate_prefixed(key_register(keys.first, keys.second), rec.eve_states.at(keys), p);
    const int m = static_cast<int>(keys.first.size());
    gs.rho_tilde[m].accumulate(rec.eve_states.at(keys), p / rec.length_dist.at(m));
  }
  for (const auto& [m, pm] : rec.length_dist) {
    if (pm <= 0.0) continue;
    const auto keys = all_keys(m);
    const double w = std::ldexp(1.0, -m);
    BlockState bar;
    for (const auto& k : keys) bar.accumulate(equal_key_state(rec, gs, k), w);
    gs.rho_bar[m] = bar;
    for (const auto& k : keys) {
      const std::string reg = key_register(k, k);
      gs.rho_ideal.accumulate_prefixed(reg, gs.rho_tilde.at(m), pm * w);
      gs.rho_qi1.accumulate_prefixed(reg, equal_key_state(rec, gs, k), pm * w);
      gs.rho_qi2.accumulate_prefixed(reg, bar, pm * w);
    }
  }
  return gs;
}

}  // namespace qkdlab
