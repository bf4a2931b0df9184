#include "geoflow/catalog.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace geoflow {

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

double to_number(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("malformed number '" + s + "'");
  }
  return v;
}

VectorField field(int n, const std::vector<std::string>& text) {
  auto names = chart_names(n);
  VectorField v;
  for (const auto& t : text) v.push_back(simplify(parse(t, names)));
  return v;
}

ControlSystem euclidean(int n) {
  std::vector<VectorField> frame;
  for (int i = 0; i < n; ++i) frame.push_back(coordinate_field(n, i));
  return make_system("euclidean:" + std::to_string(n), frame, Expr(1.0));
}

ControlSystem sphere2() {
  auto names = chart_names(2);
  Expr c = simplify(parse("(1 + x1^2 + x2^2)/2", names));
  std::vector<VectorField> frame{{c, Expr(0.0)}, {Expr(0.0), c}};
  return make_system("sphere2", frame, simplify(parse("4/(1 + x1^2 + x2^2)^2", names)));
}

ControlSystem heisenberg3() {
  return make_system("heisenberg3", {field(3, {"1", "0", "-x2/2"}), field(3, {"0", "1", "x1/2"})}, Expr(1.0));
}

ControlSystem heisenberg5(double a1, double a2) {
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::string s1 = num(a1);
  std::string s2 = num(a2);
  std::vector<VectorField> frame{
      field(5, {"1", "0", "0", "0", "-" + s1 + "*x2/2"}),
      field(5, {"0", "1", "0", "0", s1 + "*x1/2"}),
      field(5, {"0", "0", "1", "0", "-" + s2 + "*x4/2"}),
      field(5, {"0", "0", "0", "1", s2 + "*x3/2"}),
  };
  return make_system("heisenberg5:" + num(a1) + "," + num(a2), frame, Expr(1.0));
}

ControlSystem engel() {
  return make_system("engel", {field(4, {"1", "0", "0", "0"}), field(4, {"0", "1", "x1", "x1^2/2"})}, Expr(1.0));
}

Expr expr_field(const nlohmann::json& j, int n, const std::string& what) {
  if (j.is_number()) return Expr(j.get<double>());
  if (!j.is_string()) throw std::invalid_argument(what + " must be an expression string");
  auto names = chart_names(n);
  try {
    return simplify(parse(j.get<std::string>(), names));
  } catch (const ParseError& e) {
    throw std::invalid_argument(what + ": " + e.what());
  }
}

}  // namespace

std::vector<BuiltinInfo> builtin_catalog() {
  return {
      {"euclidean:n", "R^n with the coordinate frame and Lebesgue density"},
      {"sphere2", "round unit sphere in stereographic coordinates, Riemannian volume"},
      {"heisenberg3", "Heisenberg group, X1 = d1 - x2/2 d3, X2 = d2 + x1/2 d3, Lebesgue density"},
      {"heisenberg5:a1,a2", "5-dimensional contact structure with rotation rates a1, a2"},
      {"engel", "Engel structure X1 = d1, X2 = d2 + x1 d3 + x1^2/2 d4"},
      {"<name>:psi=<expr>", "any builtin with density multiplied by exp(psi)"},
  };
}

ControlSystem builtin(std::string_view text) {
  std::string base(text);
  std::string psi;
  if (auto pos = base.find(":psi="); pos != std::string::npos) {
    psi = base.substr(pos + 5);
    base = base.substr(0, pos);
  }
  std::vector<std::string> parts = split(base, ':');
  const std::string& name = parts[0];
  ControlSystem sys;
  if (name == "euclidean") {
    if (parts.size() != 2) throw std::invalid_argument("euclidean needs a dimension, e.g. euclidean:3");
    double n = to_number(parts[1]);
    if (n < 1 || n > 12 || n != static_cast<int>(n)) throw std::invalid_argument("euclidean dimension must be 1..12");
    sys = euclidean(static_cast<int>(n));
  } else if (name == "sphere2" && parts.size() == 1) {
    sys = sphere2();
  } else if (name == "heisenberg3" && parts.size() == 1) {
    sys = heisenberg3();
  } else if (name == "heisenberg5") {
    double a1 = 1.0;
    double a2 = 1.0;
    if (parts.size() == 2) {
      auto rates = split(parts[1], ',');
      if (rates.size() != 2) throw std::invalid_argument("heisenberg5 takes two rates, e.g. heisenberg5:1,2");
      a1 = to_number(rates[0]);
      a2 = to_number(rates[1]);
    } else if (parts.size() > 2) {
      throw std::invalid_argument("malformed heisenberg5 parameters");
    }
    if (a1 == 0.0 || a2 == 0.0) throw std::invalid_argument("heisenberg5 rates must be nonzero");
    sys = heisenberg5(a1, a2);
  } else if (name == "engel" && parts.size() == 1) {
    sys = engel();
  } else {
    throw std::invalid_argument("unknown builtin '" + std::string(text) + "'");
  }
  if (!psi.empty()) {
    auto names = chart_names(sys.n);
    Expr e;
    try {
      e = simplify(parse(psi, names));
    } catch (const ParseError& err) {
      throw std::invalid_argument(std::string("psi: ") + err.what());
    }
    sys.density = simplify(sys.density * exp(e));
    sys.name += ":psi=" + psi;
  }
  return sys;
}

ControlSystem structure_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("structure must be a JSON object");
  if (!j.contains("dim") || !j.contains("frame")) throw std::invalid_argument("structure needs \"dim\" and \"frame\"");
  ControlSystem sys;
  sys.n = j.at("dim").get<int>();
  if (sys.n < 1) throw std::invalid_argument("dim must be positive");
  const auto& frame = j.at("frame");
  if (!frame.is_array()) throw std::invalid_argument("frame must be an array of fields");
  sys.k = j.contains("rank") ? j.at("rank").get<int>() : static_cast<int>(frame.size());
  for (std::size_t a = 0; a < frame.size(); ++a) {
    if (!frame[a].is_array()) throw std::invalid_argument("frame field must be an array");
    VectorField v;
    for (const auto& c : frame[a]) v.push_back(expr_field(c, sys.n, "frame[" + std::to_string(a) + "]"));
    sys.frame.push_back(v);
  }
  if (j.contains("X0")) {
    for (const auto& c : j.at("X0")) sys.drift.push_back(expr_field(c, sys.n, "X0"));
  } else {
    sys.drift = zero_field(sys.n);
  }
  sys.potential = j.contains("Q") ? expr_field(j.at("Q"), sys.n, "Q") : Expr(0.0);
  sys.density = j.contains("density") ? expr_field(j.at("density"), sys.n, "density") : Expr(1.0);
  sys.name = j.value("name", std::string("custom"));
  sys.validate();
  return sys;
}

nlohmann::json structure_to_json(const ControlSystem& sys) {
  auto names = chart_names(sys.n);
  auto text = [&](const VectorField& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const Expr& c : v) a.push_back(to_string(c, names));
    return a;
  };
  nlohmann::json frame = nlohmann::json::array();
  for (const auto& f : sys.frame) frame.push_back(text(f));
  return {{"dim", sys.n},
          {"rank", sys.k},
          {"X0", text(sys.drift)},
          {"frame", frame},
          {"Q", to_string(sys.potential, names)},
          {"density", to_string(sys.density, names)},
          {"name", sys.name}};
}

ControlSystem load_structure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open structure file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("structure file " + path + ": " + e.what());
  }
  return structure_from_json(j);
}

void override_drift(ControlSystem& sys, const std::vector<std::string>& components) {
  if (static_cast<int>(components.size()) != sys.n) throw std::invalid_argument("drift needs n components");
  sys.drift = field(sys.n, components);
  sys.validate();
}

void override_potential(ControlSystem& sys, const std::string& text) {
  sys.potential = simplify(parse(text, chart_names(sys.n)));
  sys.validate();
}

}  // namespace geoflow
