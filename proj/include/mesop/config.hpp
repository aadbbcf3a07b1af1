#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "mesop/scenarios.hpp"

namespace mesop {

// Malformed scenario document. what() names the offending field as a JSON
// pointer (e.g. "/materials/0/law/K") or the line and column of a syntax
// error.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scenario <-> JSON. Keys mirror the Scenario fields; laws are objects
// {K, Z, De, Dv, D0}; vectors are [x, y, z] arrays; materials are referred to
// by name. Unknown keys are rejected. Doubles round-trip exactly.
nlohmann::json scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& document);

std::string dump_scenario(const Scenario& scenario);
Scenario parse_scenario(const std::string& text);

// "preset:<name>" or a path to a JSON document. Throws ConfigError for a
// malformed document, std::out_of_range for an unknown preset and
// std::ios_base::failure when the file cannot be read.
Scenario load_scenario(const std::string& spec, const PresetOptions& options = {});

}  // namespace mesop
