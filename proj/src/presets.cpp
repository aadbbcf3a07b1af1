#include <algorithm>
#include <map>
#include <stdexcept>

#include "mesop/calibration.hpp"
#include "mesop/scenarios.hpp"

namespace mesop {

namespace {

namespace pc = calibration::presets;

Material make_material(const std::string& name, double K, double Z, double De, double Dv, double D0) {
  return Material{name, MaterialLaw{K, Z, De, Dv, D0}};
}

// Ground row plus a released column of grains: the shared setup of the
// pile, spread and paste experiments.
Scenario pour_setup(const std::string& name, const MaterialLaw& grain, const MaterialLaw& ground_contact,
                    double ambient, int dim) {
  Scenario s;
  s.name = name;
  s.dim = dim;
  s.gravity = Vec3{0.0, -pc::kGravity, 0.0};
  s.ambient_viscosity = ambient;
  s.materials.push_back(Material{"grain", grain});
  s.materials.push_back(make_material("ground", ground_contact.K, 0.0, ground_contact.De,
                                      ground_contact.De, ground_contact.D0));
  s.pair_rules.set(0, 1, ground_contact);

  Boundary ground;
  ground.shape = Boundary::Shape::segment;
  ground.a = Vec3{-pc::kGroundHalfWidth, 0.0, 0.0};
  ground.b = Vec3{pc::kGroundHalfWidth, 0.0, 0.0};
  ground.spacing = pc::kGroundSpacing;
  ground.depth = dim == 3 ? pc::kGroundDepth3d : 0.0;
  ground.material_id = 1;
  s.boundaries.push_back(ground);
  for (double side : {-1.0, 1.0}) {
    Boundary wall = ground;
    wall.a = Vec3{side * pc::kGroundHalfWidth, pc::kGroundSpacing, 0.0};
    wall.b = Vec3{side * pc::kGroundHalfWidth, pc::kWallHeight, 0.0};
    s.boundaries.push_back(wall);
  }

  Block column;
  column.material_id = 0;
  column.spacing = pc::kColumnSpacing;
  column.jitter = pc::kColumnJitter;
  column.seed = 17;
  if (dim == 3) {
    column.nx = pc::kColumnWidth3d;
    column.nz = pc::kColumnWidth3d;
    column.ny = pc::kColumnHeight3d;
  } else {
    column.nx = pc::kColumnWidth;
    column.ny = pc::kColumnHeight;
  }
  const double half = 0.5 * (column.nx - 1) * column.spacing;
  column.corner = Vec3{-half, pc::kColumnBase, dim == 3 ? -half : 0.0};
  s.blocks.push_back(column);

  s.duration = pc::kDuration;
  s.analysis.ground_height = 0.0;
  s.analysis.bin_width = grain.De;
  s.analysis.contact_radius = pc::kContactRadiusFactor * grain.De;
  s.analysis.flow_axis = Vec3{1.0, 0.0, 0.0};
  return s;
}

Emitter jet(const Vec3& origin, const Vec3& direction, double speed, double rate, double width,
            std::uint32_t lanes, std::uint64_t count, std::uint64_t seed, int dim) {
  Emitter e;
  e.origin = origin;
  e.direction = direction;
  e.speed = speed;
  e.rate = dim == 3 ? rate * lanes : rate;
  e.width = width;
  e.lanes = lanes;
  e.jitter = pc::kJetJitter;
  e.velocity_jitter = pc::kJetVelocityJitter;
  e.max_count = dim == 3 ? count * lanes : count;
  e.jitter_seed = seed;
  return e;
}

Scenario gas_jets(const PresetOptions& o) {
  Scenario s;
  s.name = "gas_jets";
  s.dim = o.dim;
  s.materials.push_back(make_material("gas", pc::kGasK, 0.0, 1.0, 1.0, 1.0));
  s.tags.emplace_back("gas", InteractionPreset::IP1);
  s.emitters.push_back(jet({-pc::kJetOffset, 0.0, 0.0}, {1.0, 0.0, 0.0}, pc::kGasJetSpeed,
                           pc::kGasJetRate, pc::kJetWidth, pc::kJetLanes, pc::kGasJetCount, 101, o.dim));
  s.emitters.push_back(jet({pc::kJetOffset, 0.0, 0.0}, {-1.0, 0.0, 0.0}, pc::kGasJetSpeed,
                           pc::kGasJetRate, pc::kJetWidth, pc::kJetLanes, pc::kGasJetCount, 202, o.dim));
  s.duration = pc::kDuration;
  s.analysis.contact_radius = pc::kContactRadiusFactor;
  return s;
}

Scenario granular_pile(const PresetOptions& o) {
  Scenario s = pour_setup("granular_pile", pc::kPileGrain, pc::kPileGround, pc::kPileAmbient, o.dim);
  s.tags.emplace_back("grain", InteractionPreset::IP1);
  s.tags.emplace_back("ground", InteractionPreset::IP1);
  return s;
}

Scenario dry_to_moist(const PresetOptions& o) {
  MaterialLaw grain = pc::kMoistGrain;
  grain.K *= o.k_scale;
  grain.Z *= o.z_scale;
  Scenario s = pour_setup("dry_to_moist", grain, pc::kPileGround, pc::kPileAmbient, o.dim);
  s.tags.emplace_back("grain", InteractionPreset::IP3);
  return s;
}

Scenario fluid_spread(const PresetOptions& o) {
  Scenario s = pour_setup("fluid_spread", pc::kFluidGrain, pc::kIp3Ground, pc::kFluidAmbient, o.dim);
  s.materials[0].name = "fluid";
  s.tags.emplace_back("fluid", InteractionPreset::IP3);
  return s;
}

Scenario granular_from_ip3(const PresetOptions& o) {
  Scenario s = pour_setup("granular_from_IP3", pc::kIp3GranularGrain, pc::kIp3Ground, pc::kIp3Ambient, o.dim);
  s.tags.emplace_back("grain", InteractionPreset::IP3);
  return s;
}

Scenario paste_ooze(const PresetOptions& o) {
  Scenario s = pour_setup("paste_ooze", pc::kPasteGrain, pc::kIp3Ground, pc::kIp3Ambient, o.dim);
  s.materials[0].name = "paste";
  s.tags.emplace_back("paste", InteractionPreset::IP5);
  return s;
}

Scenario kelvin_helmholtz(const PresetOptions& o) {
  Scenario s;
  s.name = "kelvin_helmholtz";
  s.dim = o.dim;
  s.materials.push_back(Material{"fluid", pc::kKhFluid});
  s.tags.emplace_back("fluid", InteractionPreset::IP2);
  const double gap = 0.5 * pc::kKhLayerGap;
  s.emitters.push_back(jet({-pc::kJetOffset, gap, 0.0}, {1.0, 0.0, 0.0}, pc::kKhJetSpeed,
                           pc::kKhJetRate, pc::kJetWidth, pc::kJetLanes, 0, 303, o.dim));
  s.emitters.push_back(jet({pc::kJetOffset, -gap, 0.0}, {-1.0, 0.0, 0.0}, pc::kKhJetSpeed,
                           pc::kKhJetRate, pc::kJetWidth, pc::kJetLanes, 0, 404, o.dim));
  s.duration = pc::kDuration;
  s.analysis.flow_axis = Vec3{1.0, 0.0, 0.0};
  s.analysis.contact_radius = pc::kContactRadiusFactor * pc::kKhFluid.Dv;
  return s;
}

Scenario von_karman(const PresetOptions& o) {
  Scenario s;
  s.name = "von_karman";
  s.dim = o.dim;
  s.materials.push_back(Material{"fluid", pc::kVkFluid});
  s.materials.push_back(Material{"obstacle", pc::kVkObstacle});
  s.pair_rules.set(0, 1, pc::kVkObstacle);
  s.tags.emplace_back("fluid", InteractionPreset::IP4);
  s.emitters.push_back(jet({-pc::kJetOffset, 0.0, 0.0}, {1.0, 0.0, 0.0}, pc::kVkJetSpeed,
                           pc::kVkJetRate, pc::kVkJetWidth, pc::kVkJetLanes, 0, 505, o.dim));
  Boundary disc;
  disc.shape = Boundary::Shape::disc;
  disc.center = Vec3{0.0, 0.0, 0.0};
  disc.radius = pc::kVkObstacleRadius;
  disc.fill_radius = pc::kVkObstacleRadius - 1.0;
  disc.spacing = pc::kVkObstacleSpacing;
  disc.depth = o.dim == 3 ? pc::kVkJetWidth : 0.0;
  disc.material_id = 1;
  s.boundaries.push_back(disc);
  s.duration = pc::kDuration;
  s.analysis.flow_axis = Vec3{1.0, 0.0, 0.0};
  s.analysis.contact_radius = pc::kContactRadiusFactor * pc::kVkFluid.De;
  return s;
}

using Factory = Scenario (*)(const PresetOptions&);

const std::map<std::string, Factory>& factories() {
  static const std::map<std::string, Factory> table = {
      {"dry_to_moist", dry_to_moist},   {"fluid_spread", fluid_spread},
      {"gas_jets", gas_jets},           {"granular_from_IP3", granular_from_ip3},
      {"granular_pile", granular_pile}, {"kelvin_helmholtz", kelvin_helmholtz},
      {"paste_ooze", paste_ooze},       {"von_karman", von_karman},
  };
  return table;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, factory] : factories()) names.push_back(name);
  return names;
}

Scenario preset(const std::string& name, const PresetOptions& options) {
  const auto it = factories().find(name);
  if (it == factories().end()) throw std::out_of_range("unknown preset '" + name + "'");
  if (options.dim != 2 && options.dim != 3) throw std::invalid_argument("preset: dim must be 2 or 3");
  if (!(options.k_scale > 0.0) || !(options.z_scale > 0.0)) {
    throw std::invalid_argument("preset: scale factors must be > 0");
  }
  Scenario s = it->second(options);
  s.validate();
  return s;
}

}  // namespace mesop
