#include "geoflow/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "geoflow/parallel.hpp"

namespace geoflow {

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string number(const std::optional<double>& v) { return v ? number(*v) : std::string(); }

template <class T>
nlohmann::json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_double(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

Rational parse_rational(const std::string& s) {
  Rational q(s);
  q.canonicalize();
  return q;
}

void fail(AnalysisReport& r, const std::string& status, int code, const std::string& why) {
  r.status = status;
  r.exit_code = code;
  r.diagnostics.push_back(why);
}

void check(AnalysisReport& r, std::string name, double value, double reference, double tolerance, bool pass) {
  r.checks.push_back({std::move(name), value, reference, tolerance, pass});
}

bool is_contact_builtin(const std::string& name) { return name.rfind("heisenberg", 0) == 0; }

void run_pipeline(AnalysisReport& r, const ControlSystem& sys, const std::string& name, const PhasePoint& z,
                  const AnalysisOptions& opts) {
  FlagContext ctx(sys);
  GeodesicFlag f = flag_at_state(ctx, z, opts.rho.flag);
  r.growth = f.growth;
  r.ample = f.ample;
  r.ill_conditioned = f.ill_conditioned;
  r.geodesic_dimension = f.geodesic_dimension;
  r.homogeneous_weight = f.homogeneous_weight;
  for (const std::string& d : f.diagnostics) r.diagnostics.push_back(d);
  if (!f.ample) return fail(r, "non-ample", kExitNotAmple, "flag does not reach full rank");

  Equiregularity eq = equiregular_on(ctx, z, opts.expansion.t_max, opts.equiregular_samples, opts.rho.flag);
  r.equiregular = eq.equiregular;
  if (!eq.equiregular) {
    std::string why = "growth vector changes along the fit window:";
    for (std::size_t i = 0; i < eq.times.size(); ++i) {
      why += " t=" + number(eq.times[i]) + " (";
      for (std::size_t k = 0; k < eq.growth[i].size(); ++k) why += (k ? "," : "") + std::to_string(eq.growth[i][k]);
      why += ")";
    }
    return fail(r, "non-equiregular", kExitNotAmple, why);
  }

  YoungDiagram y = young_diagram(f);
  r.young_rows = y.rows;
  r.c_exact = leading_constant(y);

  r.rho = rho(ctx, z, opts.rho);
  FlowRho fr = rho_flow(ctx, z, opts.rho, opts.flow);
  r.rho_flow = fr.rho;
  r.rho_flow_residual = fr.residual;
  if (!fr.residual_ok) r.diagnostics.push_back("flow fit of rho has residual " + number(fr.residual));
  check(r, "rho two-path", std::fabs(*r.rho - fr.rho), 0.0, opts.rho_tol, std::fabs(*r.rho - fr.rho) <= opts.rho_tol);

  r.exponent = exponent_probe(ctx, z, 1e-3, 1e-2, 12, opts.rho);
  check(r, "exponent probe", *r.exponent, r.geodesic_dimension, opts.probe_tol,
        std::fabs(*r.exponent - r.geodesic_dimension) <= opts.probe_tol);

  ExpansionFit fit = fit_expansion(ctx, z, opts.expansion);
  r.c_fit = fit.c;
  r.tr_r = fit.tr_r;
  r.fit_residual = fit.residual;
  r.fit_t_min = fit.t_min;
  r.fit_t_max = fit.t_max;
  for (const std::string& d : fit.diagnostics) r.diagnostics.push_back(d);
  const double exact = r.c_exact->get_d();
  check(r, "leading constant", fit.c, exact, opts.c_tol, std::fabs(fit.c / exact - 1) <= opts.c_tol);

  r.ricci_oracle = ricci_oracle(name, ctx, z);
  if (r.ricci_oracle) {
    check(r, "ricci oracle", fit.tr_r, *r.ricci_oracle, opts.ricci_tol,
          std::fabs(fit.tr_r - *r.ricci_oracle) <= opts.ricci_tol);
  }
  const bool plain = !sys.has_drift() && sys.potential.is_constant(0.0);
  if (sys.k == sys.n) {
    DivergenceReport d = riemannian_divergence_check(ctx, z, opts.rho, opts.rho_tol);
    check(r, "divergence oracle", d.difference, d.rho, opts.rho_tol, d.pass);
  }
  if (plain && is_contact_builtin(name)) {
    std::vector<double> ts{0.1, 0.2, 0.3};
    double worst = 0.0;
    for (const ContactSample& s : contact_oracle(ctx, z, ts, opts.rho)) worst = std::max(worst, std::fabs(s.g - s.oracle));
    check(r, "contact oracle", worst, 0.0, opts.oracle_tol, worst <= opts.oracle_tol);
  }

  bool all = true;
  for (const CheckResult& c : r.checks) all = all && c.pass;
  r.status = all ? "ok" : "checks-failed";
  r.exit_code = all ? kExitOk : kExitNumerical;
}

}  // namespace

AnalysisReport analyze(const ControlSystem& sys, const std::string& name, const Eigen::VectorXd& base,
                       const Eigen::VectorXd& covector, const AnalysisOptions& opts) {
  if (base.size() != sys.n || covector.size() != sys.n) {
    throw std::invalid_argument("base point and covector need " + std::to_string(sys.n) + " components");
  }
  AnalysisReport r;
  r.structure = name;
  r.base = to_vector(base);
  r.covector = to_vector(covector);
  try {
    run_pipeline(r, sys, name, PhasePoint{base, covector}, opts);
  } catch (const ZeroTangent& e) {
    fail(r, "non-ample", kExitNotAmple, e.what());
  } catch (const NotAmple& e) {
    fail(r, "non-ample", kExitNotAmple, e.what());
  } catch (const RankDeficiency& e) {
    fail(r, "non-equiregular", kExitNotAmple, e.what());
  } catch (const std::runtime_error& e) {
    fail(r, "numerical-failure", kExitNumerical, e.what());
  }
  return r;
}

nlohmann::json rational_json(const Rational& q) { return {{"exact", to_string(q)}, {"value", q.get_d()}}; }

nlohmann::json to_json(const AnalysisReport& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const CheckResult& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"value", c.value},
                      {"reference", c.reference},
                      {"tolerance", c.tolerance},
                      {"pass", c.pass}});
  }
  nlohmann::json fit = nullptr;
  if (r.c_fit) {
    fit = {{"C", *r.c_fit},
           {"trR", optional_json(r.tr_r)},
           {"residual", optional_json(r.fit_residual)},
           {"window", {optional_json(r.fit_t_min), optional_json(r.fit_t_max)}}};
  }
  return {{"structure", r.structure},
          {"base", r.base},
          {"covector", r.covector},
          {"status", r.status},
          {"exit_code", r.exit_code},
          {"growth", r.growth},
          {"ample", r.ample},
          {"equiregular", r.equiregular},
          {"ill_conditioned", r.ill_conditioned},
          {"young_rows", r.young_rows},
          {"N", r.geodesic_dimension},
          {"Q", r.homogeneous_weight},
          {"C_exact", r.c_exact ? rational_json(*r.c_exact) : nlohmann::json(nullptr)},
          {"rho", optional_json(r.rho)},
          {"rho_flow", optional_json(r.rho_flow)},
          {"rho_flow_residual", optional_json(r.rho_flow_residual)},
          {"exponent_probe", optional_json(r.exponent)},
          {"expansion", fit},
          {"ricci_oracle", optional_json(r.ricci_oracle)},
          {"checks", checks},
          {"diagnostics", r.diagnostics}};
}

AnalysisReport report_from_json(const nlohmann::json& j) {
  AnalysisReport r;
  r.structure = j.at("structure").get<std::string>();
  r.base = j.at("base").get<std::vector<double>>();
  r.covector = j.at("covector").get<std::vector<double>>();
  r.status = j.at("status").get<std::string>();
  r.exit_code = j.at("exit_code").get<int>();
  r.growth = j.at("growth").get<std::vector<int>>();
  r.ample = j.at("ample").get<bool>();
  r.equiregular = j.at("equiregular").get<bool>();
  r.ill_conditioned = j.at("ill_conditioned").get<bool>();
  r.young_rows = j.at("young_rows").get<std::vector<int>>();
  r.geodesic_dimension = j.at("N").get<int>();
  r.homogeneous_weight = j.at("Q").get<int>();
  if (!j.at("C_exact").is_null()) r.c_exact = parse_rational(j.at("C_exact").at("exact").get<std::string>());
  r.rho = optional_double(j.at("rho"));
  r.rho_flow = optional_double(j.at("rho_flow"));
  r.rho_flow_residual = optional_double(j.at("rho_flow_residual"));
  r.exponent = optional_double(j.at("exponent_probe"));
  if (const nlohmann::json& fit = j.at("expansion"); !fit.is_null()) {
    r.c_fit = fit.at("C").get<double>();
    r.tr_r = optional_double(fit.at("trR"));
    r.fit_residual = optional_double(fit.at("residual"));
    r.fit_t_min = optional_double(fit.at("window").at(0));
    r.fit_t_max = optional_double(fit.at("window").at(1));
  }
  r.ricci_oracle = optional_double(j.at("ricci_oracle"));
  for (const nlohmann::json& c : j.at("checks")) {
    r.checks.push_back({c.at("name").get<std::string>(), c.at("value").get<double>(), c.at("reference").get<double>(),
                        c.at("tolerance").get<double>(), c.at("pass").get<bool>()});
  }
  r.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  return r;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t\r");
    const auto b = item.find_last_not_of(" \t\r");
    if (a == std::string::npos) throw std::invalid_argument("empty component in '" + text + "'");
    const std::string token = item.substr(a, b - a + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw std::invalid_argument("not a number: '" + token + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<SweepRow> sweep(const ControlSystem& sys, const Eigen::VectorXd& base, const std::vector<std::string>& lines,
                            const AnalysisOptions& opts, int threads) {
  std::vector<std::string> rows_text;
  for (const std::string& line : lines) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) rows_text.push_back(line);
  }
  std::vector<SweepRow> rows(rows_text.size());
  FlagContext ctx(sys);
  ExpansionOptions eo = opts.expansion;
  eo.threads = 1;
  parallel_for(static_cast<int>(rows.size()), threads, [&](int i) {
    SweepRow& row = rows[static_cast<std::size_t>(i)];
    row.text = rows_text[static_cast<std::size_t>(i)];
    try {
      row.covector = parse_numbers(rows_text[static_cast<std::size_t>(i)]);
    } catch (const std::invalid_argument&) {
      row.status = "parse-error";
      return;
    }
    if (static_cast<int>(row.covector.size()) != sys.n) {
      row.status = "parse-error";
      return;
    }
    PhasePoint z{base, from_vector(row.covector)};
    try {
      GeodesicFlag f = flag_at_state(ctx, z, opts.rho.flag);
      row.growth = f.growth;
      row.geodesic_dimension = f.geodesic_dimension;
      if (!f.ample) {
        row.status = "non-ample";
        return;
      }
      if (!equiregular_on(ctx, z, eo.t_max, opts.equiregular_samples, opts.rho.flag).equiregular) {
        row.status = "non-equiregular";
        return;
      }
      row.rho = rho(ctx, z, opts.rho);
      ExpansionFit fit = fit_expansion(ctx, z, eo);
      row.c_fit = fit.c;
      row.tr_r = fit.tr_r;
      row.residual = fit.residual;
      row.status = "ok";
    } catch (const ZeroTangent&) {
      row.status = "non-ample";
    } catch (const NotAmple&) {
      row.status = "non-ample";
    } catch (const RankDeficiency&) {
      row.status = "non-equiregular";
    } catch (const std::exception& e) {
      row.status = std::string("numerical-failure: ") + e.what();
    }
  });
  return rows;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

template <class T>
std::string joined(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += number(v[i]);
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

}  // namespace

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "covector,growth,N,rho,C_fit,trR_fit,residual,status\n";
  for (const SweepRow& r : rows) {
    out += csv_field(r.covector.empty() ? r.text : joined(r.covector)) + "," + csv_field(joined(r.growth)) + "," +
           (r.growth.empty() ? std::string() : std::to_string(r.geodesic_dimension)) + "," + number(r.rho) + "," +
           number(r.c_fit) + "," + number(r.tr_r) + "," + number(r.residual) + "," + csv_field(r.status) + "\n";
  }
  return out;
}

std::string expansion_csv(const ExpansionFit& fit) {
  std::string out = "t,r,h,model\n";
  for (std::size_t i = 0; i < fit.times.size(); ++i) {
    out += number(fit.times[i]) + "," + number(fit.r[i]) + "," + number(fit.h[i]) + "," + number(fit.model[i]) + "\n";
  }
  return out;
}

std::string identity_table(const std::vector<IdentityCheck>& checks) {
  std::size_t width = 8;
  std::size_t range_width = 5;
  for (const IdentityCheck& c : checks) {
    width = std::max(width, c.identity.size());
    range_width = std::max(range_width, c.range.size());
  }
  auto pad = [](std::string s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
  std::string out = pad("identity", width + 2) + pad("range", range_width + 2) + "status\n";
  for (const IdentityCheck& c : checks) {
    out += pad(c.identity, width + 2) + pad(c.range, range_width + 2) + (c.pass ? "PASS" : "FAIL") + "\n";
  }
  return out;
}

}  // namespace geoflow
