#pragma once

// Scenario files: one YAML (or JSON) document with blocks protocol, eve,
// info, compose and output. Unknown keys are rejected and errors carry the
// line they refer to. Needs yaml-cpp.

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "qkdlab/compose.hpp"
#include "qkdlab/errors.hpp"
#include "qkdlab/qinfo.hpp"
#include "qkdlab/qkdsim.hpp"

namespace qkdlab {

/// Bad scenario input; what() is "<source>:<line>: <message>" when a line is known.
class ScenarioError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

enum class ReportFormat { kJson, kCsv };

struct ComposeNodeSpec {
  std::string id;
  std::string name;
  /// Unset means "use the measured eps_composable of this scenario".
  std::optional<double> eps;
  std::optional<std::string> parent;
};

struct RepeatedSpec {
  int t = 1;
  double eps_alpha = 0.0;
  std::optional<double> eps_kappa;
};

struct ComposeSpec {
  std::vector<ComposeNodeSpec> nodes;
  std::optional<RepeatedSpec> repeated;

  bool needs_measurement() const {
    if (repeated && !repeated->eps_kappa) return true;
    for (const auto& n : nodes)
      if (!n.eps) return true;
    return false;
  }
};

struct ScenarioFile {
  std::string name;
  ProtocolConfig protocol;
  EveStrategy eve;
  MeasurementFamilyConfig info;
  bool family_rows = false;
  std::optional<ComposeSpec> compose;
  std::optional<std::string> output_path;
  std::optional<ReportFormat> output_format;
};

inline const char* to_string(SimulationMode m) { return m == SimulationMode::kExact ? "exact" : "monte_carlo"; }
inline const char* to_string(EveKind k) {
  switch (k) {
    case EveKind::kInterceptResend: return "intercept_resend";
    case EveKind::kEntanglingProbe: return "entangling_probe";
    default: return "none";
  }
}
inline const char* to_string(MeasurementFamily f) {
  return f == MeasurementFamily::kQubitProjectiveGrid ? "qubit_grid" : "random_povm";
}
inline const char* to_string(ReportFormat f) { return f == ReportFormat::kJson ? "json" : "csv"; }

inline ReportFormat parse_format(const std::string& s) {
  if (s == "json") return ReportFormat::kJson;
  if (s == "csv") return ReportFormat::kCsv;
  throw ScenarioError("unknown output format '" + s + "' (expected json or csv)");
}

namespace detail {

class ScenarioReader {
 public:
  explicit ScenarioReader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
    const auto mark = at.Mark();
    if (mark.line >= 0) throw ScenarioError(source_ + ":" + std::to_string(mark.line + 1) + ": " + msg);
    throw ScenarioError(source_ + ": " + msg);
  }

  void expect_map(const YAML::Node& node, const std::string& what, const std::set<std::string>& allowed) const {
    if (!node.IsMap()) fail(node, what + " must be a mapping");
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + what);
    }
  }

  template <class T>
  T get(const YAML::Node& map, const std::string& key, const std::string& what) const {
    const auto node = map[key];
    if (!node) fail(map, what + "." + key + " is required");
    return convert<T>(node, what + "." + key);
  }

  template <class T>
  T get_or(const YAML::Node& map, const std::string& key, const std::string& what, T fallback) const {
    const auto node = map[key];
    return node ? convert<T>(node, what + "." + key) : fallback;
  }

  template <class T>
  T convert(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, path + " must be a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, path + " has invalid value '" + node.Scalar() + "'");
    }
  }

  std::string source_;
};

}  // namespace detail

inline ScenarioFile parse_scenario(const std::string& text, const std::string& source = "<scenario>") {
  detail::ScenarioReader rd(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root || root.IsNull()) throw ScenarioError(source + ": empty scenario");
  rd.expect_map(root, "scenario", {"name", "protocol", "eve", "info", "compose", "output"});

  ScenarioFile sc;
  sc.name = rd.get_or<std::string>(root, "name", "scenario", "");

  const auto proto = root["protocol"];
  if (!proto) rd.fail(root, "protocol block is required");
  rd.expect_map(proto, "protocol", {"n", "test_fraction", "qber_threshold", "m_out", "mode", "trials", "seed"});
  auto& pc = sc.protocol;
  pc.n = rd.get_or<int>(proto, "n", "protocol", pc.n);
  pc.test_fraction = rd.get_or<double>(proto, "test_fraction", "protocol", pc.test_fraction);
  pc.qber_threshold = rd.get_or<double>(proto, "qber_threshold", "protocol", pc.qber_threshold);
  pc.m_out = rd.get_or<int>(proto, "m_out", "protocol", pc.m_out);
  const auto mode = rd.get_or<std::string>(proto, "mode", "protocol", "exact");
  if (mode == "exact") {
    pc.mode = SimulationMode::kExact;
  } else if (mode == "monte_carlo") {
    pc.mode = SimulationMode::kMonteCarlo;
  } else {
    rd.fail(proto["mode"], "protocol.mode must be exact or monte_carlo");
  }
  pc.trials = rd.get_or<long>(proto, "trials", "protocol", pc.trials);
  pc.seed = rd.get<std::uint64_t>(proto, "seed", "protocol");
  try {
    pc.validate();
  } catch (const ConfigError& e) {
    rd.fail(proto, e.what());
  }

  const auto eve = root["eve"];
  if (!eve) rd.fail(root, "eve block is required");
  rd.expect_map(eve, "eve", {"kind", "p", "probe_angle"});
  const auto kind = rd.get<std::string>(eve, "kind", "eve");
  if (kind == "none") {
    sc.eve = EveStrategy::none();
  } else if (kind == "intercept_resend") {
    sc.eve = EveStrategy::intercept_resend(rd.get<double>(eve, "p", "eve"));
  } else if (kind == "entangling_probe") {
    sc.eve = EveStrategy::entangling_probe(rd.get<double>(eve, "probe_angle", "eve"));
  } else {
    rd.fail(eve["kind"], "eve.kind must be none, intercept_resend or entangling_probe");
  }
  try {
    sc.eve.validate();
  } catch (const ConfigError& e) {
    rd.fail(eve, e.what());
  }

  if (const auto info = root["info"]) {
    rd.expect_map(info, "info",
                  {"family", "grid_size", "refinement_rounds", "outcomes", "seed", "fallback_candidates", "family_rows"});
    auto& ic = sc.info;
    const auto family = rd.get_or<std::string>(info, "family", "info", "qubit_grid");
    if (family == "qubit_grid") {
      ic.kind = MeasurementFamily::kQubitProjectiveGrid;
    } else if (family == "random_povm") {
      ic.kind = MeasurementFamily::kRandomRank1Povm;
    } else {
      rd.fail(info["family"], "info.family must be qubit_grid or random_povm");
    }
    ic.grid_size = rd.get_or<int>(info, "grid_size", "info", ic.grid_size);
    ic.refinement_rounds = rd.get_or<int>(info, "refinement_rounds", "info", ic.refinement_rounds);
    ic.outcomes = rd.get_or<int>(info, "outcomes", "info", ic.outcomes);
    ic.fallback_candidates = rd.get_or<int>(info, "fallback_candidates", "info", ic.fallback_candidates);
    ic.seed = rd.get<std::uint64_t>(info, "seed", "info");
    sc.family_rows = rd.get_or<bool>(info, "family_rows", "info", false);
    try {
      ic.validate();
    } catch (const ConfigError& e) {
      rd.fail(info, e.what());
    }
  } else {
    sc.info.seed = pc.seed;
  }

  if (const auto comp = root["compose"]) {
    rd.expect_map(comp, "compose", {"nodes", "repeated"});
    ComposeSpec cs;
    if (const auto nodes = comp["nodes"]) {
      if (!nodes.IsSequence()) rd.fail(nodes, "compose.nodes must be a list");
      for (const auto& n : nodes) {
        rd.expect_map(n, "compose node", {"id", "name", "eps", "parent"});
        ComposeNodeSpec spec;
        spec.id = rd.get<std::string>(n, "id", "compose node");
        spec.name = rd.get_or<std::string>(n, "name", "compose node", "");
        const auto eps = n["eps"];
        if (!eps) rd.fail(n, "compose node '" + spec.id + "' needs eps (a number or 'measured')");
        if (eps.IsScalar() && eps.Scalar() == "measured") {
          spec.eps = std::nullopt;
        } else {
          spec.eps = rd.convert<double>(eps, "compose node eps");
          if (!(*spec.eps >= 0.0) || !std::isfinite(*spec.eps)) rd.fail(eps, "compose node eps must be >= 0");
        }
        if (n["parent"]) spec.parent = rd.get<std::string>(n, "parent", "compose node");
        cs.nodes.push_back(std::move(spec));
      }
    }
    if (const auto rep = comp["repeated"]) {
      rd.expect_map(rep, "compose.repeated", {"t", "eps_alpha", "eps_kappa"});
      RepeatedSpec r;
      r.t = rd.get<int>(rep, "t", "compose.repeated");
      if (r.t < 1) rd.fail(rep["t"], "compose.repeated.t must be >= 1");
      r.eps_alpha = rd.get<double>(rep, "eps_alpha", "compose.repeated");
      if (!(r.eps_alpha >= 0.0)) rd.fail(rep["eps_alpha"], "compose.repeated.eps_alpha must be >= 0");
      if (rep["eps_kappa"]) {
        r.eps_kappa = rd.get<double>(rep, "eps_kappa", "compose.repeated");
        if (!(*r.eps_kappa >= 0.0)) rd.fail(rep["eps_kappa"], "compose.repeated.eps_kappa must be >= 0");
      }
      cs.repeated = r;
    }
    if (cs.nodes.empty() && !cs.repeated) rd.fail(comp, "compose block needs nodes or repeated");
    if (!cs.nodes.empty()) {
      // Structural check now, with placeholder epsilons.
      std::vector<TreeNodeSpec> specs;
      for (const auto& n : cs.nodes) specs.push_back({n.id, n.name, n.eps.value_or(0.0), n.parent});
      try {
        CompositionTree::from_parents(specs);
      } catch (const TreeError& e) {
        rd.fail(comp["nodes"], e.what());
      }
    }
    sc.compose = std::move(cs);
  }

  if (const auto out = root["output"]) {
    rd.expect_map(out, "output", {"path", "format"});
    if (out["path"]) sc.output_path = rd.get<std::string>(out, "path", "output");
    if (out["format"]) {
      try {
        sc.output_format = parse_format(rd.get<std::string>(out, "format", "output"));
      } catch (const ScenarioError& e) {
        rd.fail(out["format"], e.what());
      }
    }
  }
  return sc;
}

inline ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path + ": cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

}  // namespace qkdlab
