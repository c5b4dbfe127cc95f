#pragma once

// Report assembly for the command-line front end: record summaries,
// security reports, composition budgets and parameter sweeps, serialized
// as JSON (12 significant digits) or CSV. Needs nlohmann/json and yaml-cpp.

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "qkdlab/bounds.hpp"
#include "qkdlab/compose.hpp"
#include "qkdlab/parallel.hpp"
#include "qkdlab/scenario.hpp"

#ifndef QKDLAB_VERSION
#define QKDLAB_VERSION "0.1.0"
#endif
#ifndef QKDLAB_YAML_CPP_VERSION
#define QKDLAB_YAML_CPP_VERSION "unknown"
#endif

namespace qkdlab {

using Json = nlohmann::ordered_json;

/// Rounds to 12 significant digits so reports pin cleanly; -0 becomes 0.
inline double sig12(double x) {
  if (x == 0.0 || !std::isfinite(x)) return x == 0.0 ? 0.0 : x;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::strtod(buf, nullptr);
}

inline std::string fmt12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", sig12(x));
  return buf;
}

inline Json scenario_json(const ScenarioFile& sc) {
  const auto& p = sc.protocol;
  Json j;
  j["name"] = sc.name;
  j["protocol"] = {{"n", p.n},
                   {"test_fraction", sig12(p.test_fraction)},
                   {"qber_threshold", sig12(p.qber_threshold)},
                   {"m_out", p.m_out},
                   {"mode", to_string(p.mode)},
                   {"trials", p.mode == SimulationMode::kMonteCarlo ? Json(p.trials) : Json()},
                   {"seed", p.seed}};
  Json eve = {{"kind", to_string(sc.eve.kind)}};
  if (sc.eve.kind == EveKind::kInterceptResend) eve["p"] = sig12(sc.eve.p);
  if (sc.eve.kind == EveKind::kEntanglingProbe) eve["probe_angle"] = sig12(sc.eve.probe_angle);
  j["eve"] = eve;
  j["info"] = {{"family", to_string(sc.info.kind)},
               {"grid_size", sc.info.grid_size},
               {"refinement_rounds", sc.info.refinement_rounds},
               {"outcomes", sc.info.outcomes},
               {"seed", sc.info.seed},
               {"family_rows", sc.family_rows}};
  return j;
}

inline Json record_summary_json(const QkdRunRecord& rec) {
  Json lengths = Json::object();
  for (const auto& [m, p] : rec.length_dist) lengths[std::to_string(m)] = sig12(p);
  // Per-position marginals Pr(bit i = 1 | M=m) for each party.
  Json marginals = Json::object();
  double agree = 0.0, kept = 0.0;
  for (const auto& [m, pm] : rec.length_dist) {
    if (m == 0 || pm <= 0.0) continue;
    std::vector<double> a(m, 0.0), b(m, 0.0);
    for (const auto& [keys, p] : rec.key_table) {
      if (static_cast<int>(keys.first.size()) != m) continue;
      for (int i = 0; i < m; ++i) {
        if (keys.first[i] == '1') a[i] += p / pm;
        if (keys.second[i] == '1') b[i] += p / pm;
      }
      kept += p;
      if (keys.first == keys.second) agree += p;
    }
    Json ja = Json::array(), jb = Json::array();
    for (int i = 0; i < m; ++i) {
      ja.push_back(sig12(a[i]));
      jb.push_back(sig12(b[i]));
    }
    marginals[std::to_string(m)] = {{"alice_one", ja}, {"bob_one", jb}};
  }
  return {{"length_distribution", lengths},
          {"qber", {{"expected", sig12(rec.expected_qber)}, {"std_error", sig12(rec.qber_std_error)}}},
          {"key_agreement", kept > 0.0 ? Json(sig12(agree / kept)) : Json()},
          {"key_marginals", marginals},
          {"singlet_fidelity", sig12(singlet_fidelity(rec.rho_ab_signal, 1))}};
}

inline Json security_report_json(const SecurityReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.bound_rows) {
    rows.push_back({{"name", row.name},
                    {"lhs", sig12(row.lhs)},
                    {"rhs", sig12(row.rhs)},
                    {"margin", sig12(row.rhs - row.lhs)},
                    {"pass", row.pass},
                    {"informational", row.informational}});
  }
  return {{"mu1", sig12(r.mu1)},
          {"mu2_acc_lower", sig12(r.mu2_acc_lower)},
          {"mu2_chi", sig12(r.mu2_chi)},
          {"mu2_fid", sig12(r.mu2_fid)},
          {"eps_composable", sig12(r.eps_composable)},
          {"eps_privacy", sig12(r.eps_privacy)},
          {"eps_privacy_keywise", sig12(r.eps_privacy_keywise)},
          {"triangle_terms", {sig12(r.triangle_terms[0]), sig12(r.triangle_terms[1]), sig12(r.triangle_terms[2])}},
          {"max_m", r.max_m},
          {"ordering_holds", r.ordering_holds},
          {"all_pass", r.all_pass()},
          {"bound_rows", rows}};
}

/// `measured` fills nodes/rounds that ask for the scenario's eps_composable.
inline Json compose_budget_json(const ComposeSpec& cs, std::optional<double> measured) {
  auto eps_or_measured = [&](const std::optional<double>& e) {
    if (e) return *e;
    if (!measured) throw ScenarioError("compose block needs a measured eps_composable");
    return *measured;
  };
  Json j = Json::object();
  if (!cs.nodes.empty()) {
    std::vector<TreeNodeSpec> specs;
    for (const auto& n : cs.nodes) specs.push_back({n.id, n.name, eps_or_measured(n.eps), n.parent});
    const auto tree = CompositionTree::from_parents(specs);
    Json nodes = Json::array();
    for (const auto& s : specs) {
      nodes.push_back({{"id", s.id}, {"name", tree.node(s.id).name}, {"eps", sig12(s.eps)},
                       {"parent", s.parent ? Json(*s.parent) : Json()}});
    }
    j["tree"] = {{"root", tree.root()}, {"nodes", nodes}, {"total", sig12(tree_total(tree))}};
  }
  if (cs.repeated) {
    const double ek = eps_or_measured(cs.repeated->eps_kappa);
    const auto r = repeated_qkd(cs.repeated->t, ek, cs.repeated->eps_alpha);
    Json per_round = Json::array();
    for (int t = 1; t <= cs.repeated->t; ++t) per_round.push_back(sig12(repeated_qkd(t, ek, cs.repeated->eps_alpha).total));
    j["repeated"] = {{"t", cs.repeated->t},
                     {"eps_kappa", sig12(ek)},
                     {"eps_alpha", sig12(cs.repeated->eps_alpha)},
                     {"total", sig12(r.total)},
                     {"budget_by_round", per_round}};
  }
  return j;
}

inline Json versions_json() {
  return {{"qkdlab", QKDLAB_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"yaml_cpp", QKDLAB_YAML_CPP_VERSION}};
}

struct RunResult {
  Json report;
  /// False when a pass/fail bound row failed.
  bool pass = true;
  QkdRunRecord record;
  std::optional<SecurityReport> security;
};

inline CertifyConfig certify_config(const ScenarioFile& sc, int threads) {
  CertifyConfig cfg;
  cfg.info = sc.info;
  cfg.info.threads = threads;
  cfg.family_rows = sc.family_rows;
  return cfg;
}

inline Json empty_report(const ScenarioFile& sc) {
  return {{"scenario", scenario_json(sc)},
          {"record_summary", nullptr},
          {"security_report", nullptr},
          {"compose_budget", nullptr},
          {"versions", versions_json()}};
}

inline RunResult cmd_simulate(const ScenarioFile& sc, int threads = 1) {
  RunResult r;
  r.record = run_protocol(sc.protocol, sc.eve, threads);
  r.report = empty_report(sc);
  r.report["record_summary"] = record_summary_json(r.record);
  return r;
}

inline RunResult cmd_certify(const ScenarioFile& sc, int threads = 1) {
  RunResult r = cmd_simulate(sc, threads);
  r.security = certify(r.record, certify_config(sc, threads));
  r.pass = r.security->all_pass();
  r.report["security_report"] = security_report_json(*r.security);
  if (sc.compose) r.report["compose_budget"] = compose_budget_json(*sc.compose, r.security->eps_composable);
  return r;
}

/// Budget only; simulates and certifies first when some epsilon is "measured".
inline RunResult cmd_compose(const ScenarioFile& sc, int threads = 1) {
  if (!sc.compose) throw ScenarioError("scenario has no compose block");
  if (sc.compose->needs_measurement()) return cmd_certify(sc, threads);
  RunResult r;
  r.report = empty_report(sc);
  r.report["compose_budget"] = compose_budget_json(*sc.compose, std::nullopt);
  return r;
}

enum class SweepParam { kEveP, kProbeAngle, kQberThreshold };

inline SweepParam parse_sweep_param(const std::string& s) {
  if (s == "eve.p") return SweepParam::kEveP;
  if (s == "eve.probe_angle") return SweepParam::kProbeAngle;
  if (s == "protocol.qber_threshold") return SweepParam::kQberThreshold;
  throw ScenarioError("unknown sweep parameter '" + s + "' (expected eve.p, eve.probe_angle or protocol.qber_threshold)");
}

inline ScenarioFile with_parameter(ScenarioFile sc, SweepParam param, double value) {
  switch (param) {
    case SweepParam::kEveP:
      if (sc.eve.kind == EveKind::kEntanglingProbe) throw ScenarioError("eve.p sweep needs eve.kind intercept_resend");
      sc.eve = EveStrategy::intercept_resend(value);
      break;
    case SweepParam::kProbeAngle:
      if (sc.eve.kind == EveKind::kInterceptResend) throw ScenarioError("eve.probe_angle sweep needs eve.kind entangling_probe");
      sc.eve = EveStrategy::entangling_probe(value);
      break;
    case SweepParam::kQberThreshold:
      sc.protocol.qber_threshold = value;
      break;
  }
  sc.eve.validate();
  sc.protocol.validate();
  return sc;
}

struct SweepRow {
  double value;
  SecurityReport report;
};

inline const char* kSweepCsvHeader = "value,eps_composable,eps_privacy,B1_rhs,B2_rhs,HOL_rhs,FID_rhs";

/// One certified row per value, in input order; rows run concurrently.
inline std::vector<SweepRow> cmd_sweep(const ScenarioFile& sc, const std::string& param_name,
                                       const std::vector<double>& values, int threads = 1) {
  const auto param = parse_sweep_param(param_name);
  if (values.empty()) throw ScenarioError("sweep needs at least one value");
  std::vector<ScenarioFile> points;
  for (double v : values) points.push_back(with_parameter(sc, param, v));
  std::vector<std::optional<SecurityReport>> reports(values.size());
  parallel_for(values.size(), threads, [&](std::size_t i) {
    reports[i] = certify(run_protocol(points[i].protocol, points[i].eve, 1), certify_config(points[i], 1));
  });
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) rows.push_back({values[i], *reports[i]});
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    os << fmt12(r.value) << ',' << fmt12(r.report.eps_composable) << ',' << fmt12(r.report.eps_privacy) << ','
       << fmt12(r.report.row("B1").rhs) << ',' << fmt12(r.report.row("B2").rhs) << ','
       << fmt12(r.report.row("HOL").rhs) << ',' << fmt12(r.report.row("FID").rhs) << '\n';
  }
  return os.str();
}

inline Json sweep_json(const ScenarioFile& sc, const std::string& param, const std::vector<SweepRow>& rows) {
  Json j = empty_report(sc);
  Json pts = Json::array();
  for (const auto& r : rows) pts.push_back({{"value", sig12(r.value)}, {"security_report", security_report_json(r.report)}});
  j["sweep"] = {{"parameter", param}, {"points", pts}};
  return j;
}

inline bool sweep_pass(const std::vector<SweepRow>& rows) {
  for (const auto& r : rows)
    if (!r.report.all_pass()) return false;
  return true;
}

/// CSV view of a single run: one line per bound row, or the length
/// distribution when nothing was certified.
inline std::string run_csv(const RunResult& r) {
  std::ostringstream os;
  if (r.security) {
    os << "name,lhs,rhs,margin,pass\n";
    for (const auto& row : r.security->bound_rows) {
      os << row.name << ',' << fmt12(row.lhs) << ',' << fmt12(row.rhs) << ',' << fmt12(row.rhs - row.lhs) << ','
         << (row.pass ? "true" : "false") << '\n';
    }
  } else if (!r.report["record_summary"].is_null()) {
    os << "m,probability\n";
    for (const auto& [m, p] : r.record.length_dist) os << m << ',' << fmt12(p) << '\n';
  } else {
    os << "quantity,value\n";
    const auto& cb = r.report["compose_budget"];
    if (cb.contains("tree")) os << "tree_total," << fmt12(cb["tree"]["total"].get<double>()) << '\n';
    if (cb.contains("repeated")) os << "repeated_total," << fmt12(cb["repeated"]["total"].get<double>()) << '\n';
  }
  return os.str();
}

inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace qkdlab
