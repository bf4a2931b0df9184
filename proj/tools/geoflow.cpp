#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "geoflow/catalog.hpp"
#include "geoflow/parallel.hpp"
#include "geoflow/report.hpp"

using namespace geoflow;

namespace {

struct StructureArgs {
  std::string name;
  std::string file;
  std::vector<std::string> drift;
  std::string potential;
  std::string base;
};

void add_structure(CLI::App* cmd, StructureArgs& s) {
  cmd->add_option("structure", s.name, "builtin name, e.g. heisenberg3 or euclidean:3:psi=x1");
  cmd->add_option("--file", s.file, "structure JSON file");
  cmd->add_option("--drift", s.drift, "drift components over x1..xn")->delimiter(',');
  cmd->add_option("--potential", s.potential, "potential Q over x1..xn");
  cmd->add_option("--base", s.base, "base point, comma separated (default origin)");
}

void add_tolerances(CLI::App* cmd, AnalysisOptions& o) {
  cmd->add_option("--rank-tol", o.rho.flag.rank_tol, "relative SVD rank threshold")->capture_default_str();
  cmd->add_option("--flag-order", o.rho.flag.order, "extension order (-1: context maximum)")->capture_default_str();
  cmd->add_option("--flow-tol", o.rho.flow_tol, "integrator tolerance")->capture_default_str();
  cmd->add_option("--rho-h", o.rho.h, "finite-difference step for rho")->capture_default_str();
  cmd->add_option("--rho-tol", o.rho_tol, "two-path rho agreement")->capture_default_str();
  cmd->add_option("--c-tol", o.c_tol, "relative tolerance of fitted C")->capture_default_str();
  cmd->add_option("--ricci-tol", o.ricci_tol, "tolerance against the Ricci oracle")->capture_default_str();
  cmd->add_option("--probe-tol", o.probe_tol, "tolerance of the exponent probe")->capture_default_str();
  cmd->add_option("--oracle-tol", o.oracle_tol, "contact oracle tolerance")->capture_default_str();
  cmd->add_option("--t-min", o.expansion.t_min, "expansion window start")->capture_default_str();
  cmd->add_option("--t-max", o.expansion.t_max, "expansion window end")->capture_default_str();
  cmd->add_option("--samples", o.expansion.samples, "expansion samples")->capture_default_str();
  cmd->add_option("--refinements", o.expansion.refinements, "window halvings allowed")->capture_default_str();
}

ControlSystem load(const StructureArgs& s, std::string& label) {
  if (s.name.empty() == s.file.empty()) throw CLI::ValidationError("give exactly one of a structure name or --file");
  ControlSystem sys = s.file.empty() ? builtin(s.name) : load_structure(s.file);
  label = s.file.empty() ? s.name : sys.name;
  if (!s.drift.empty()) override_drift(sys, s.drift);
  if (!s.potential.empty()) override_potential(sys, s.potential);
  return sys;
}

Eigen::VectorXd vector_arg(const std::string& text, int n, const char* what) {
  if (text.empty()) return Eigen::VectorXd::Zero(n);
  std::vector<double> v = parse_numbers(text);
  if (static_cast<int>(v.size()) != n) {
    throw CLI::ValidationError(std::string(what) + " needs " + std::to_string(n) + " components");
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), n);
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write " + out);
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geodesic flags and volume expansions of affine control structures"};
  app.require_subcommand(1);
  std::string out;

  StructureArgs sa;
  AnalysisOptions ao;
  std::string covector;
  auto* analyze_cmd = app.add_subcommand("analyze", "full pipeline for one covector, JSON report");
  add_structure(analyze_cmd, sa);
  analyze_cmd->add_option("--covector", covector, "covector p, comma separated")->required();
  add_tolerances(analyze_cmd, ao);

  std::string covector_file;
  auto* sweep_cmd = app.add_subcommand("sweep", "pipeline over a covector file, CSV");
  add_structure(sweep_cmd, sa);
  sweep_cmd->add_option("--covectors", covector_file, "one comma-separated covector per line")->required();
  add_tolerances(sweep_cmd, ao);

  auto* expansion_cmd = app.add_subcommand("expansion", "t, r, h, model table of the expansion fit");
  add_structure(expansion_cmd, sa);
  expansion_cmd->add_option("--covector", covector, "covector p, comma separated")->required();
  add_tolerances(expansion_cmd, ao);

  int nmax = 12;
  auto* identities_cmd = app.add_subcommand("verify-identities", "exact rational identity table");
  identities_cmd->add_option("--nmax", nmax, "largest n")->capture_default_str()->check(CLI::Range(1, 40));

  auto* list_cmd = app.add_subcommand("list-builtins", "builtin structures");

  for (CLI::App* cmd : app.get_subcommands({})) cmd->add_option("--out", out, "write to this path instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*list_cmd) {
      std::string text;
      for (const BuiltinInfo& b : builtin_catalog()) text += b.syntax + "\t" + b.description + "\n";
      emit(text, out);
      return kExitOk;
    }
    if (*identities_cmd) {
      std::vector<IdentityCheck> checks = verify_identities(nmax);
      emit(identity_table(checks), out);
      for (const IdentityCheck& c : checks) {
        if (!c.pass) return kExitNumerical;
      }
      return kExitOk;
    }

    std::string label;
    ControlSystem sys = load(sa, label);
    Eigen::VectorXd base = vector_arg(sa.base, sys.n, "--base");
    if (*analyze_cmd) {
      AnalysisReport r = analyze(sys, label, base, vector_arg(covector, sys.n, "--covector"), ao);
      emit(dump(to_json(r)), out);
      return r.exit_code;
    }
    if (*expansion_cmd) {
      FlagContext ctx(sys);
      ExpansionFit fit = fit_expansion(ctx, PhasePoint{base, vector_arg(covector, sys.n, "--covector")}, ao.expansion);
      emit(expansion_csv(fit), out);
      for (const std::string& d : fit.diagnostics) std::cerr << d << "\n";
      return kExitOk;
    }
    if (*sweep_cmd) {
      std::ifstream f(covector_file);
      if (!f) throw CLI::ValidationError("cannot read " + covector_file);
      std::vector<std::string> lines;
      for (std::string line; std::getline(f, line);) lines.push_back(line);
      emit(sweep_csv(sweep(sys, base, lines, ao, default_threads())), out);
      return kExitOk;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ZeroTangent& e) {
    std::cerr << "non-ample: " << e.what() << "\n";
    return kExitNotAmple;
  } catch (const NotAmple& e) {
    std::cerr << "non-ample: " << e.what() << "\n";
    return kExitNotAmple;
  } catch (const RankDeficiency& e) {
    std::cerr << "non-equiregular: " << e.what() << "\n";
    return kExitNotAmple;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
