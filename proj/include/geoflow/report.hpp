#pragma once

// The analysis pipeline behind the command-line tool and its JSON/CSV output.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "geoflow/asymptotics.hpp"
#include "geoflow/exact.hpp"

namespace geoflow {

enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitNotAmple = 2, kExitNumerical = 3 };

struct AnalysisOptions {
  RhoOptions rho;
  FlowRhoOptions flow;
  ExpansionOptions expansion;
  int equiregular_samples = 5;
  double rho_tol = 1e-5;     // |rho - rho_flow|
  double c_tol = 1e-3;       // relative, fitted C against the Young constant
  double ricci_tol = 1e-2;
  double probe_tol = 0.1;
  double oracle_tol = 1e-6;  // contact and divergence oracles
};

struct CheckResult {
  std::string name;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct AnalysisReport {
  std::string structure;
  std::vector<double> base;
  std::vector<double> covector;
  std::string status;  // "ok", "checks-failed", "non-ample", "non-equiregular", "numerical-failure"
  int exit_code = kExitOk;
  std::vector<int> growth;
  bool ample = false;
  bool equiregular = false;
  bool ill_conditioned = false;
  std::vector<int> young_rows;
  int geodesic_dimension = 0;
  int homogeneous_weight = 0;
  std::optional<Rational> c_exact;
  std::optional<double> rho;
  std::optional<double> rho_flow;
  std::optional<double> rho_flow_residual;
  std::optional<double> exponent;
  std::optional<double> c_fit;
  std::optional<double> tr_r;
  std::optional<double> fit_residual;
  std::optional<double> fit_t_min;
  std::optional<double> fit_t_max;
  std::optional<double> ricci_oracle;
  std::vector<CheckResult> checks;
  std::vector<std::string> diagnostics;
};

// name is a builtin name or a label; builtin oracles are looked up by it.
AnalysisReport analyze(const ControlSystem& sys, const std::string& name, const Eigen::VectorXd& base,
                       const Eigen::VectorXd& covector, const AnalysisOptions& opts = {});

nlohmann::json to_json(const AnalysisReport& r);
AnalysisReport report_from_json(const nlohmann::json& j);
// Sorted keys, floats at full round-trip precision.
std::string dump(const nlohmann::json& j);

// {"exact": "num/den", "value": float}
nlohmann::json rational_json(const Rational& q);

struct SweepRow {
  std::string text;  // the input line
  std::vector<double> covector;
  std::vector<int> growth;
  int geodesic_dimension = 0;
  std::optional<double> rho;
  std::optional<double> c_fit;
  std::optional<double> tr_r;
  std::optional<double> residual;
  std::string status;
};

// Lines of comma-separated covectors; blank lines are skipped. A line that
// does not parse becomes a row with a parse-error status.
std::vector<SweepRow> sweep(const ControlSystem& sys, const Eigen::VectorXd& base, const std::vector<std::string>& lines,
                            const AnalysisOptions& opts = {}, int threads = 0);
std::string sweep_csv(const std::vector<SweepRow>& rows);

// t, r, h, model
std::string expansion_csv(const ExpansionFit& fit);

std::string identity_table(const std::vector<IdentityCheck>& checks);

std::vector<double> parse_numbers(const std::string& text);  // "1, 0.5,-2"

}  // namespace geoflow
