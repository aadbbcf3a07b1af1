#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mesop/scenarios.hpp"

namespace mesop {

class ParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// One tweakable scalar with its accepted closed range.
struct ParamSpec {
  std::string path;
  double min = 0.0;
  double max = 0.0;

  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

// Parameter paths understood by sweeps and live steering:
//   materials.<name>.K | Z | De | Dv | D0   law fields of a material
//   materials.<name>.R_s                  Dv / De; setting it rescales Dv at fixed De
//   gravity                               magnitude of the downward (-y) gravity
//   ambient_viscosity
std::vector<ParamSpec> tweakable_params(const std::vector<Material>& materials);

// Throws ParamError for an unknown path.
double get_param(const Scenario& scenario, const std::string& path);
double get_param(const SimState& state, const std::string& path);

// Sets one value. Throws ParamError (leaving the target untouched) for an
// unknown path, a non-finite value, or a value that makes the law invalid.
// Range limits are not enforced here; see check_param_range.
void set_param(Scenario& scenario, const std::string& path, double value);
void set_param(SimState& state, const std::string& path, double value);

// Throws ParamError when the path is not tweakable or the value lies outside
// its declared range.
void check_param_range(const std::vector<Material>& materials, const std::string& path, double value);

}  // namespace mesop
