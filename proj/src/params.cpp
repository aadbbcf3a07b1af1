#include "mesop/params.hpp"

#include <cmath>

namespace mesop {

namespace {

struct LawField {
  const char* name;
  double min;
  double max;
};

constexpr LawField kLawFields[] = {
    {"K", 0.0, 20000.0}, {"Z", 0.0, 200.0}, {"De", 0.1, 5.0},
    {"Dv", 0.1, 5.0},    {"D0", 0.0, 5.0},  {"R_s", 0.25, 8.0},
};
constexpr double kGravityMax = 50.0;
constexpr double kAmbientMax = 10.0;

struct Path {
  enum class Kind { law, gravity, ambient } kind;
  std::string material;
  std::string field;
};

Path parse_path(const std::string& path) {
  if (path == "gravity") return {Path::Kind::gravity, {}, {}};
  if (path == "ambient_viscosity") return {Path::Kind::ambient, {}, {}};
  const std::string prefix = "materials.";
  if (path.rfind(prefix, 0) == 0) {
    const auto dot = path.rfind('.');
    if (dot > prefix.size()) {
      Path p{Path::Kind::law, path.substr(prefix.size(), dot - prefix.size()), path.substr(dot + 1)};
      for (const LawField& f : kLawFields) {
        if (p.field == f.name) return p;
      }
    }
  }
  throw ParamError("unknown parameter path '" + path + "'");
}

template <class Materials>
auto* find_law(Materials& materials, const Path& p, const std::string& path) {
  for (auto& m : materials) {
    if (m.name == p.material) return &m.law;
  }
  throw ParamError("unknown parameter path '" + path + "' (no material '" + p.material + "')");
}

double law_get(const MaterialLaw& law, const std::string& field) {
  if (field == "K") return law.K;
  if (field == "Z") return law.Z;
  if (field == "De") return law.De;
  if (field == "Dv") return law.Dv;
  if (field == "D0") return law.D0;
  return law.threshold_ratio();
}

void law_set(MaterialLaw& law, const std::string& field, double value) {
  if (field == "K") law.K = value;
  else if (field == "Z") law.Z = value;
  else if (field == "De") law.De = value;
  else if (field == "Dv") law.Dv = value;
  else if (field == "D0") law.D0 = value;
  else law.Dv = value * law.De;
}

template <class Target>
double get_impl(const Target& t, const std::string& path) {
  const Path p = parse_path(path);
  switch (p.kind) {
    case Path::Kind::gravity: return -t.gravity.y;
    case Path::Kind::ambient: return t.ambient_viscosity;
    case Path::Kind::law: break;
  }
  return law_get(*find_law(t.materials, p, path), p.field);
}

template <class Target>
void set_impl(Target& t, const std::string& path, double value) {
  const Path p = parse_path(path);
  if (!std::isfinite(value)) throw ParamError("value for '" + path + "' must be finite");
  switch (p.kind) {
    case Path::Kind::gravity:
      t.gravity = Vec3{0.0, -value, 0.0};
      return;
    case Path::Kind::ambient:
      if (value < 0.0) throw ParamError("ambient_viscosity must be >= 0");
      t.ambient_viscosity = value;
      return;
    case Path::Kind::law: break;
  }
  MaterialLaw* law = find_law(t.materials, p, path);
  MaterialLaw edited = *law;
  law_set(edited, p.field, value);
  try {
    edited.validate();
  } catch (const std::invalid_argument& e) {
    throw ParamError("'" + path + "' = " + std::to_string(value) + " rejected: " + e.what());
  }
  *law = edited;
}

}  // namespace

std::vector<ParamSpec> tweakable_params(const std::vector<Material>& materials) {
  std::vector<ParamSpec> out;
  for (const Material& m : materials) {
    for (const LawField& f : kLawFields) {
      out.push_back({"materials." + m.name + "." + f.name, f.min, f.max});
    }
  }
  out.push_back({"gravity", 0.0, kGravityMax});
  out.push_back({"ambient_viscosity", 0.0, kAmbientMax});
  return out;
}

double get_param(const Scenario& scenario, const std::string& path) { return get_impl(scenario, path); }
double get_param(const SimState& state, const std::string& path) { return get_impl(state, path); }
void set_param(Scenario& scenario, const std::string& path, double value) { set_impl(scenario, path, value); }
void set_param(SimState& state, const std::string& path, double value) { set_impl(state, path, value); }

void check_param_range(const std::vector<Material>& materials, const std::string& path, double value) {
  for (const ParamSpec& spec : tweakable_params(materials)) {
    if (spec.path != path) continue;
    if (!(value >= spec.min && value <= spec.max)) {
      throw ParamError("'" + path + "' = " + std::to_string(value) + " outside [" +
                       std::to_string(spec.min) + ", " + std::to_string(spec.max) + "]");
    }
    return;
  }
  throw ParamError("'" + path + "' is not a tweakable parameter");
}

}  // namespace mesop
