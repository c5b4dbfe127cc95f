#pragma once

// Security quantities of a simulated run and certification of the bound
// chain: uniformity/privacy deviations, composable distance, hybrid
// decomposition, and the four privacy-to-composability bounds.

#include <algorithm>
#include <array>
#include <map>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "qkdlab/errors.hpp"
#include "qkdlab/qinfo.hpp"
#include "qkdlab/qkdsim.hpp"

namespace qkdlab {

inline constexpr double kBoundTol = 1e-7;

struct BoundRow {
  std::string name;
  double lhs;
  double rhs;
  bool pass;
  /// Informational rows (family-restricted mu2) never fail certification.
  bool informational = false;
};

struct SecurityReport {
  double mu1 = 0.0;
  double mu2_acc_lower = 0.0;
  double mu2_chi = 0.0;
  double mu2_fid = 0.0;
  double eps_composable = 0.0;
  double eps_privacy = 0.0;
  double eps_privacy_keywise = 0.0;
  std::array<double, 3> triangle_terms{};
  int max_m = 0;
  /// eps_privacy <= keywise <= B2 RHS <= B1 RHS
  bool ordering_holds = true;
  std::vector<BoundRow> bound_rows;

  bool all_pass() const {
    for (const auto& row : bound_rows) {
      if (!row.informational && !row.pass) return false;
    }
    return true;
  }
  const BoundRow& row(const std::string& name) const {
    for (const auto& r : bound_rows) {
      if (r.name == name) return r;
    }
    throw ValidationError("no bound row named " + name);
  }
};

enum class PrivacyMeasure { kChi, kFamilyAccessible };

struct CertifyConfig {
  MeasurementFamilyConfig info;
  /// Add informational rows that use the family-restricted mu2.
  bool family_rows = false;
};

/// sum_m Pr(m) || p_ideal(.|m) - p_qkd(.|m) ||_1 with p_ideal uniform on equal keys.
inline double mu1_uniformity(const QkdRunRecord& rec) {
  std::map<int, std::map<KeyPair, double>> diff;
  for (const auto& [m, pm] : rec.length_dist) {
    if (m == 0 || pm <= 0.0) continue;
    for (const auto& k : all_keys(m)) diff[m][{k, k}] = std::ldexp(1.0, -m);
  }
  for (const auto& [keys, p] : rec.key_table) {
    const int m = static_cast<int>(keys.first.size());
    if (m == 0) continue;
    diff[m][keys] -= p / rec.length_dist.at(m);
  }
  double total = 0.0;
  for (const auto& [m, table] : diff) {
    double l1 = 0.0;
    for (const auto& [keys, d] : table) l1 += std::abs(d);
    total += rec.length_dist.at(m) * l1;
  }
  return total;
}

/// F_m = {2^-m, rho_{E,k,k}} over all keys of length m.
inline BlockEnsemble equal_key_ensemble(const QkdRunRecord& rec, const GameStates& gs, int m) {
  std::vector<BlockEnsemble::Entry> entries;
  const double w = std::ldexp(1.0, -m);
  for (const auto& k : all_keys(m)) entries.push_back({k, w, equal_key_state(rec, gs, k)});
  return BlockEnsemble(std::move(entries));
}

/// sum_{m>0} Pr(m) chi(F_m) with uniform F_m, or the same with the family lower bound on I_acc.
inline double mu2_privacy(const QkdRunRecord& rec, const GameStates& gs, PrivacyMeasure measure,
                          const MeasurementFamilyConfig& info = {}) {
  double total = 0.0;
  for (const auto& [m, pm] : rec.length_dist) {
    if (m == 0 || pm <= 0.0) continue;
    const auto ensemble = equal_key_ensemble(rec, gs, m);
    if (measure == PrivacyMeasure::kChi) {
      total += pm * holevo_chi(ensemble);
    } else {
      const auto b = accessible_info_bounds(ensemble, info);
      if (b.lower > b.upper + 1e-8) throw NumericalError("family accessible information exceeds chi");
      total += pm * b.lower;
    }
  }
  return total;
}

inline double mu2_privacy(const QkdRunRecord& rec, PrivacyMeasure measure, const MeasurementFamilyConfig& info = {}) {
  return mu2_privacy(rec, build_game_states(rec), measure, info);
}

/// sum_{m>0} Pr(m) (1 - F(rho_AB^m, Phi^m)).
inline double mu2_fidelity(const QkdRunRecord& rec) {
  double total = 0.0;
  for (const auto& [m, pm] : rec.length_dist) {
    if (m > 0) total += pm * (1.0 - singlet_fidelity(rec.rho_ab_signal, m));
  }
  return total;
}

inline double eps_composable(const GameStates& gs) { return 0.5 * trace_distance(gs.rho_qkd, gs.rho_ideal); }

struct PrivacyDistance {
  double value;    // 1/2 || rho_qi1 - rho_qi2 ||_1
  double keywise;  // 1/2 sum_k Pr(M=|k|) 2^-|k| || rho_bar - rho_{E,k,k} ||_1
};

inline PrivacyDistance eps_privacy(const QkdRunRecord& rec, const GameStates& gs) {
  const double value = 0.5 * trace_distance(gs.rho_qi1, gs.rho_qi2);
  double keywise = 0.0;
  for (const auto& [m, pm] : rec.length_dist) {
    if (pm <= 0.0) continue;
    const double w = std::ldexp(1.0, -m);
    for (const auto& k : all_keys(m)) {
      keywise += pm * w * trace_distance(gs.rho_bar.at(m), equal_key_state(rec, gs, k));
    }
  }
  keywise *= 0.5;
  if (value > keywise + 1e-9) throw NumericalError("privacy distance exceeds its keywise expansion");
  return {value, keywise};
}

/// The three half trace distances rho_qkd - qi1 - qi2 - ideal.
inline std::array<double, 3> triangle_decomposition(const GameStates& gs) {
  const std::array<double, 3> terms{0.5 * trace_distance(gs.rho_qkd, gs.rho_qi1),
                                    0.5 * trace_distance(gs.rho_qi1, gs.rho_qi2),
                                    0.5 * trace_distance(gs.rho_qi2, gs.rho_ideal)};
  if (eps_composable(gs) > terms[0] + terms[1] + terms[2] + 1e-9) {
    throw NumericalError("triangle inequality violated");
  }
  return terms;
}

/// As above, also checking that the outer terms are covered by mu1.
inline std::array<double, 3> triangle_decomposition(const QkdRunRecord& rec, const GameStates& gs) {
  const auto terms = triangle_decomposition(gs);
  if (terms[0] + terms[2] > mu1_uniformity(rec) + kBoundTol) throw NumericalError("outer hybrid terms exceed mu1");
  return terms;
}

inline int max_key_length(const QkdRunRecord& rec) {
  int best = 0;
  for (const auto& [m, pm] : rec.length_dist) {
    if (pm > 0.0) best = std::max(best, m);
  }
  return best;
}

inline double bound1_rhs(int max_m, double mu2) {
  const double f = std::ldexp(1.0, max_m) + 1.0;
  return f * f * std::sqrt(2.0 * std::numbers::ln2 * mu2);
}
inline double bound2_rhs(int max_m, double mu2) { return std::pow(2.0, max_m / 2.0 + 1.0) * std::sqrt(mu2); }
inline double holevo_rhs(double mu2) { return std::sqrt(2.0 * std::numbers::ln2 * mu2); }

inline BoundRow make_row(std::string name, double lhs, double rhs, bool informational = false) {
  return {std::move(name), lhs, rhs, lhs <= rhs + kBoundTol, informational};
}

inline SecurityReport certify(const QkdRunRecord& rec, const GameStates& gs, const CertifyConfig& cfg = {}) {
  SecurityReport r;
  r.mu1 = mu1_uniformity(rec);
  r.mu2_chi = mu2_privacy(rec, gs, PrivacyMeasure::kChi);
  r.mu2_acc_lower = mu2_privacy(rec, gs, PrivacyMeasure::kFamilyAccessible, cfg.info);
  r.mu2_fid = mu2_fidelity(rec);
  r.eps_composable = eps_composable(gs);
  const auto priv = eps_privacy(rec, gs);
  r.eps_privacy = priv.value;
  r.eps_privacy_keywise = priv.keywise;
  r.triangle_terms = triangle_decomposition(rec, gs);
  r.max_m = max_key_length(rec);

  const double lhs = 2.0 * r.eps_privacy;
  const double b1 = bound1_rhs(r.max_m, r.mu2_chi);
  const double b2 = bound2_rhs(r.max_m, r.mu2_chi);
  r.bound_rows.push_back(make_row("B1", lhs, b1));
  r.bound_rows.push_back(make_row("B2", lhs, b2));
  r.bound_rows.push_back(make_row("HOL", lhs, holevo_rhs(r.mu2_chi)));
  r.bound_rows.push_back(make_row("FID", r.eps_composable, std::sqrt(r.mu2_fid)));
  if (cfg.family_rows) {
    r.bound_rows.push_back(make_row("B1_acc", lhs, bound1_rhs(r.max_m, r.mu2_acc_lower), true));
    r.bound_rows.push_back(make_row("B2_acc", lhs, bound2_rhs(r.max_m, r.mu2_acc_lower), true));
  }
  // Compared in full-norm units, as in the Bound-2 chain.
  r.ordering_holds = lhs <= 2.0 * r.eps_privacy_keywise + 1e-9 && 2.0 * r.eps_privacy_keywise <= b2 + kBoundTol &&
                     b2 <= b1 + kBoundTol;
  return r;
}

inline SecurityReport certify(const QkdRunRecord& rec, const CertifyConfig& cfg = {}) {
  return certify(rec, build_game_states(rec), cfg);
}

}  // namespace qkdlab
