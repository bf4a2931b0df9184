#pragma once

// Builtin structures and the JSON structure-file format.

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "geoflow/geometry.hpp"

namespace geoflow {

struct BuiltinInfo {
  std::string syntax;
  std::string description;
};

std::vector<BuiltinInfo> builtin_catalog();

// Resolves "euclidean:3", "sphere2", "heisenberg3", "heisenberg5:1,2", "engel",
// each optionally followed by ":psi=<expr>" which multiplies the density by
// exp(psi). Throws std::invalid_argument for unknown names or bad parameters.
ControlSystem builtin(std::string_view text);

// {"dim", "rank", "X0", "frame", "Q", "density", "name"}; X0, Q and density
// are optional (zero drift, zero potential, unit density).
ControlSystem structure_from_json(const nlohmann::json& j);
nlohmann::json structure_to_json(const ControlSystem& sys);
ControlSystem load_structure(const std::string& path);

// Replace drift or potential from expression text over x1..xn.
void override_drift(ControlSystem& sys, const std::vector<std::string>& components);
void override_potential(ControlSystem& sys, const std::string& text);

}  // namespace geoflow
