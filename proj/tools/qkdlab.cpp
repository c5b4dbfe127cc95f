// qkdlab command-line front end.
//
//   qkdlab simulate --scenario s.yaml [--out f] [--format json|csv] [--threads k]
//   qkdlab certify  --scenario s.yaml ...
//   qkdlab sweep    --scenario s.yaml --param eve.p --values 0,0.5,1 ...
//   qkdlab compose  --scenario s.yaml ...
//
// Exit codes: 0 all certified rows pass, 1 a bound row (or an internal
// numerical cross-check) failed, 2 input error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "qkdlab/report.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitBoundFailure = 1;
constexpr int kExitInputError = 2;

struct Options {
  std::string scenario;
  std::string out;
  std::string format;
  int threads = 1;
  std::string param;
  std::vector<std::string> values;
};

std::vector<double> parse_values(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& s : items) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) throw qkdlab::ScenarioError("sweep value '" + s + "' is not a number");
    out.push_back(v);
  }
  return out;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw qkdlab::ScenarioError(path + ": cannot write report");
  f << text;
}

int run(const std::string& command, const Options& opt) {
  using namespace qkdlab;
  if (opt.threads < 1) throw ScenarioError("--threads must be >= 1");
  const auto sc = load_scenario(opt.scenario);
  const std::string path = !opt.out.empty() ? opt.out : sc.output_path.value_or("");
  const bool sweep = command == "sweep";
  const ReportFormat format = !opt.format.empty() ? parse_format(opt.format)
                              : sc.output_format  ? *sc.output_format
                              : sweep             ? ReportFormat::kCsv
                                                  : ReportFormat::kJson;
  if (sweep) {
    const auto rows = cmd_sweep(sc, opt.param, parse_values(opt.values), opt.threads);
    emit(format == ReportFormat::kCsv ? sweep_csv(rows) : dump_json(sweep_json(sc, opt.param, rows)), path);
    return sweep_pass(rows) ? kExitPass : kExitBoundFailure;
  }
  RunResult r;
  if (command == "simulate") {
    r = cmd_simulate(sc, opt.threads);
  } else if (command == "certify") {
    r = cmd_certify(sc, opt.threads);
  } else {
    r = cmd_compose(sc, opt.threads);
  }
  emit(format == ReportFormat::kCsv ? run_csv(r) : dump_json(r.report), path);
  return r.pass ? kExitPass : kExitBoundFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-size BB84 simulation and composable-security certification"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", opt.scenario, "Scenario file (YAML or JSON)")->required();
    sub->add_option("--out", opt.out, "Report path (default: output.path, else stdout)");
    sub->add_option("--format", opt.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--threads", opt.threads, "Worker threads; results do not depend on it");
  };
  add_common(app.add_subcommand("simulate", "Run the protocol and summarize the record"));
  add_common(app.add_subcommand("certify", "Simulate, then evaluate every security bound"));
  add_common(app.add_subcommand("compose", "Evaluate the composition budget"));
  auto* sweep = app.add_subcommand("sweep", "Certify one scenario over a list of parameter values");
  add_common(sweep);
  sweep->add_option("--param", opt.param, "eve.p | eve.probe_angle | protocol.qber_threshold")->required();
  sweep->add_option("--values", opt.values, "Comma-separated values")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitInputError;
  }

  try {
    return run(app.get_subcommands().front()->get_name(), opt);
  } catch (const qkdlab::NumericalError& e) {
    std::cerr << "qkdlab: numerical check failed: " << e.what() << '\n';
    return kExitBoundFailure;
  } catch (const qkdlab::Error& e) {
    std::cerr << "qkdlab: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "qkdlab: " << e.what() << '\n';
    return kExitInputError;
  }
}
