#pragma once

#include <bit>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "qkdlab/qkdsim.hpp"

namespace qkdlab::testing_oracle {

// ---------------------------------------------------------------------------
// Brute-force oracle: enumerates every basis choice, bit, Eve outcome and
// test subset, keeping Eve's full transcript (all bases, test positions,
// test values, every code) and her probes on all n positions.

struct OracleKraus {
  int code;
  Matrix op;  // (2 * de) x 2
};

inline std::vector<OracleKraus> oracle_kraus(const EveStrategy& eve, int& de) {
  de = 1;
  std::vector<OracleKraus> ops;
  if (eve.kind == EveKind::kInterceptResend) {
    Matrix id = Matrix::Identity(2, 2);
    ops.push_back({0, std::sqrt(1.0 - eve.p) * id});
    const Vector kets[4] = {qubit::zero(), qubit::one(), qubit::plus(), qubit::minus()};
    for (int i = 0; i < 4; ++i) ops.push_back({i + 1, std::sqrt(eve.p / 2) * kets[i] * kets[i].adjoint()});
  } else if (eve.kind == EveKind::kEntanglingProbe) {
    de = 2;
    const double c = std::cos(eve.probe_angle / 2), s = std::sin(eve.probe_angle / 2);
    Matrix v = Matrix::Zero(4, 2);
    Vector e0(2), e1(2);
    e0 << c, s;
    e1 << c, -s;
    v.block(0, 0, 2, 1) = e0;
    v.block(2, 1, 2, 1) = e1;
    ops.push_back({0, v});
  } else {
    ops.push_back({0, Matrix::Identity(2, 2)});
  }
  return ops;
}

inline Vector oracle_ket(int basis, int bit) {
  const double h = 1.0 / std::sqrt(2.0);
  Vector v(2);
  if (basis == 0) {
    v << (bit == 0 ? 1.0 : 0.0), (bit == 0 ? 0.0 : 1.0);
  } else {
    v << h, (bit == 0 ? h : -h);
  }
  return v;
}

struct OracleOutcome {
  int b;
  int code;
  Matrix block;  // Eve's unnormalized probe state
};

inline std::vector<OracleOutcome> oracle_outcomes(const std::vector<OracleKraus>& ops, int de, int a, int alice_basis,
                                           int bob_basis) {
  std::vector<OracleOutcome> out;
  for (const auto& k : ops) {
    const Vector v = k.op * oracle_ket(alice_basis, a);
    for (int b = 0; b < 2; ++b) {
      const Vector bra = oracle_ket(bob_basis, b);
      Vector w(de);
      for (int e = 0; e < de; ++e) w(e) = std::conj(bra(0)) * v(e) + std::conj(bra(1)) * v(de + e);
      if (w.squaredNorm() < 1e-15) continue;
      out.push_back({b, k.code, w * w.adjoint()});
    }
  }
  return out;
}

inline std::vector<std::vector<int>> subsets(const std::vector<int>& items, int t) {
  std::vector<std::vector<int>> out;
  const int s = static_cast<int>(items.size());
  for (std::uint32_t mask = 0; mask < (1u << s); ++mask) {
    if (std::popcount(mask) != t) continue;
    std::vector<int> pick;
    for (int i = 0; i < s; ++i)
      if (mask >> i & 1) pick.push_back(items[i]);
    out.push_back(pick);
  }
  return out;
}

inline QkdRunRecord oracle_record(const ProtocolConfig& cfg, const EveStrategy& eve) {
  int de = 1;
  const auto ops = oracle_kraus(eve, de);
  const int n = cfg.n;
  std::map<KeyPair, BlockState> states;
  std::map<int, double> lengths;
  for (int am = 0; am < (1 << n); ++am)
    for (int bm = 0; bm < (1 << n); ++bm)
      for (int bits = 0; bits < (1 << n); ++bits) {
        std::vector<std::vector<OracleOutcome>> per(n);
        for (int i = 0; i < n; ++i) per[i] = oracle_outcomes(ops, de, bits >> i & 1, am >> i & 1, bm >> i & 1);
        std::vector<int> sifted;
        for (int i = 0; i < n; ++i)
          if ((am >> i & 1) == (bm >> i & 1)) sifted.push_back(i);
        const int s = static_cast<int>(sifted.size());
        const int t = static_cast<int>(std::ceil(cfg.test_fraction * s - 1e-9));
        const auto tsets = subsets(sifted, t);
        const double base = std::pow(0.125, n) / static_cast<double>(tsets.size());
        // Product over per-position outcome choices.
        std::vector<std::size_t> idx(n, 0);
        while (true) {
          Matrix block = Matrix::Identity(1, 1);
          std::string codes;
          std::vector<int> b(n);
          for (int i = 0; i < n; ++i) {
            const auto& o = per[i][idx[i]];
            block = kron(block, o.block);
            codes += static_cast<char>('0' + o.code);
            b[i] = o.b;
          }
          for (const auto& tset : tsets) {
            std::string label = "a" + std::to_string(am) + "b" + std::to_string(bm) + "T";
            int errors = 0;
            std::vector<bool> is_test(n, false);
            for (int i : tset) {
              is_test[i] = true;
              label += std::to_string(i) + "=" + std::to_string(bits >> i & 1) + std::to_string(b[i]) + ",";
              errors += (bits >> i & 1) != b[i];
            }
            label += "c" + codes;
            std::uint64_t ka = 0, kb = 0;
            int r = 0;
            for (int i : sifted) {
              if (is_test[i]) continue;
              ka |= std::uint64_t(bits >> i & 1) << r;
              kb |= std::uint64_t(b[i]) << r;
              ++r;
            }
            const bool abort = r < cfg.m_out || (cfg.m_out == 0 && r == 0) ||
                               (t > 0 && static_cast<double>(errors) / t > cfg.qber_threshold);
            KeyPair keys{"", ""};
            int m = 0;
            if (!abort) {
              if (cfg.m_out == 0) {
                keys = {bits_string(ka, r), bits_string(kb, r)};
                m = r;
              } else {
                const ToeplitzHash h(r, cfg.m_out, cfg.seed);
                keys = {h.apply(ka), h.apply(kb)};
                m = cfg.m_out;
              }
            }
            states[keys].accumulate(label, block, base);
            lengths[m] += base * block.trace().real();
          }
          int i = 0;
          while (i < n && ++idx[i] == per[i].size()) idx[i++] = 0;
          if (i == n) break;
        }
      }
  QkdRunRecord rec;
  rec.length_dist = lengths;
  for (auto& [keys, st] : states) {
    rec.key_table[keys] = st.trace();
    rec.eve_states.emplace(keys, st.normalized());
  }
  rec.rho_ab_signal = channel_to_ent_pair(eve);
  rec.validate();
  return rec;
}

// Independent channel oracle: Eve measures Bob's half of Phi in Z or X and
// resends; F = sum over her outcomes of <Phi|(I(x)P)|Phi>^2.
inline double intercept_oracle_fidelity(double p) {
  const Vector phi = qubit::epr();
  const Matrix target = phi * phi.adjoint();
  Matrix rho = (1 - p) * target;
  const Vector kets[4] = {qubit::zero(), qubit::one(), qubit::plus(), qubit::minus()};
  for (const auto& k : kets) {
    const Matrix op = kron(Matrix(Matrix::Identity(2, 2)), Matrix(k * k.adjoint()));
    rho += (p / 2) * op * target * op.adjoint();
  }
  return (phi.adjoint() * rho * phi)(0, 0).real();
}

}  // namespace qkdlab::testing_oracle
