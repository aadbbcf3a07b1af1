#include "mesop/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mesop/calibration.hpp"
#include "mesop/rng.hpp"

namespace mesop {

namespace {

Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  return n > 0.0 ? v * (1.0 / n) : Vec3{};
}

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// Two unit vectors orthogonal to `dir` (the second is zero in 2D).
std::pair<Vec3, Vec3> transverse_basis(const Vec3& dir, int dim) {
  if (dim == 2) return {Vec3{-dir.y, dir.x, 0.0}, Vec3{}};
  const Vec3 helper = std::abs(dir.y) < 0.9 ? Vec3{0.0, 1.0, 0.0} : Vec3{1.0, 0.0, 0.0};
  const Vec3 e1 = normalized(cross(dir, helper));
  return {e1, cross(dir, e1)};
}

constexpr double kSpawnEpsilon = 1e-9;

}  // namespace

std::string to_string(InteractionPreset tag) {
  switch (tag) {
    case InteractionPreset::IP1: return "IP1";
    case InteractionPreset::IP2: return "IP2";
    case InteractionPreset::IP3: return "IP3";
    case InteractionPreset::IP4: return "IP4";
    case InteractionPreset::IP5: return "IP5";
  }
  return "IP?";
}

InteractionPreset interaction_preset_from_string(const std::string& text) {
  static const std::pair<const char*, InteractionPreset> table[] = {
      {"IP1", InteractionPreset::IP1}, {"IP2", InteractionPreset::IP2},
      {"IP3", InteractionPreset::IP3}, {"IP4", InteractionPreset::IP4},
      {"IP5", InteractionPreset::IP5}};
  for (const auto& [name, tag] : table) {
    if (text == name) return tag;
  }
  throw std::invalid_argument("unknown interaction preset tag '" + text + "'");
}

void check_preset_tag(InteractionPreset tag, const MaterialLaw& law) {
  law.validate();
  const bool both = law.K > 0.0 && law.Z > 0.0;
  bool ok = false;
  switch (tag) {
    case InteractionPreset::IP1: ok = law.K > 0.0 && law.Z == 0.0; break;
    case InteractionPreset::IP2: ok = law.K == 0.0 && law.Z > 0.0; break;
    case InteractionPreset::IP3: ok = both && law.De == law.Dv; break;
    case InteractionPreset::IP4: ok = both && law.De > law.Dv; break;
    case InteractionPreset::IP5: ok = both && law.Dv > law.De; break;
  }
  if (!ok) throw std::invalid_argument("law does not satisfy the " + to_string(tag) + " constraint");
}

void Emitter::validate(int dim) const {
  if (!is_finite(origin)) throw std::invalid_argument("Emitter: non-finite origin");
  if (std::abs(norm(direction) - 1.0) > 1e-9) {
    throw std::invalid_argument("Emitter: direction must be a unit vector");
  }
  if (dim == 2 && (origin.z != 0.0 || direction.z != 0.0)) {
    throw std::invalid_argument("Emitter: 2D emitter with z component");
  }
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw std::invalid_argument("Emitter: rate must be >= 0");
  if (!std::isfinite(speed)) throw std::invalid_argument("Emitter: non-finite speed");
  if (!(mass > 0.0)) throw std::invalid_argument("Emitter: mass must be > 0");
  if (lanes == 0) throw std::invalid_argument("Emitter: lanes must be >= 1");
  if (!(width >= 0.0) || !(jitter >= 0.0) || !(velocity_jitter >= 0.0)) {
    throw std::invalid_argument("Emitter: width, jitter and velocity_jitter must be >= 0");
  }
}

std::size_t spawn(const Emitter& emitter, EmitterProgress& progress, SimState& state) {
  ++progress.steps;
  if (emitter.rate <= 0.0) return 0;
  const double due = emitter.rate * state.dt * static_cast<double>(progress.steps);
  auto target = static_cast<std::uint64_t>(std::floor(due + kSpawnEpsilon));
  if (emitter.max_count > 0) target = std::min(target, emitter.max_count);
  if (target <= progress.spawned) return 0;

  const auto [e1, e2] = transverse_basis(emitter.direction, state.dim);
  const std::uint64_t lanes_total =
      state.dim == 3 ? std::uint64_t{emitter.lanes} * emitter.lanes : emitter.lanes;
  auto lane_offset = [&](std::uint64_t lane) {
    if (emitter.lanes <= 1) return 0.0;
    return emitter.width * ((static_cast<double>(lane) + 0.5) / emitter.lanes - 0.5);
  };

  const std::size_t count = target - progress.spawned;
  for (; progress.spawned < target; ++progress.spawned) {
    const std::uint64_t k = progress.spawned;
    DeterministicRng rng(mix_seed(state.rng_seed, emitter.jitter_seed), k);
    const std::uint64_t lane = k % lanes_total;
    Particle p;
    p.mass = emitter.mass;
    p.material_id = emitter.material_id;
    p.position = emitter.origin + e1 * (lane_offset(lane % emitter.lanes) +
                                        emitter.jitter * (rng.uniform() - 0.5));
    p.velocity = emitter.direction * emitter.speed +
                 e1 * (emitter.velocity_jitter * emitter.speed * (rng.uniform() - 0.5));
    if (state.dim == 3) {
      p.position += e2 * (lane_offset(lane / emitter.lanes) + emitter.jitter * (rng.uniform() - 0.5));
      p.velocity += e2 * (emitter.velocity_jitter * emitter.speed * (rng.uniform() - 0.5));
    }
    state.particles.push_back(p);
  }
  return count;
}

std::vector<Particle> Boundary::particles(int dim) const {
  std::vector<Particle> out;
  if (!(spacing > 0.0)) throw std::invalid_argument("Boundary: spacing must be > 0");
  auto emit = [&](const Vec3& pos) {
    Particle p;
    p.kind = ParticleKind::boundary;
    p.material_id = material_id;
    p.position = pos;
    out.push_back(p);
  };
  // z offsets of the extrusion in 3D
  std::vector<double> layers{0.0};
  if (dim == 3 && depth > 0.0) {
    layers.clear();
    const auto nz = static_cast<int>(std::floor(depth / spacing)) + 1;
    for (int k = 0; k < nz; ++k) layers.push_back(-0.5 * depth + k * spacing);
  }
  if (shape == Shape::segment) {
    const Vec3 d = b - a;
    const double length = norm(d);
    const auto count = static_cast<int>(std::floor(length / spacing + 1e-9)) + 1;
    for (double z : layers) {
      for (int k = 0; k < count; ++k) {
        const double t = count > 1 ? static_cast<double>(k) / (count - 1) : 0.0;
        Vec3 pos = a + d * t;
        pos.z += z;
        emit(pos);
      }
    }
    return out;
  }
  if (!(radius > 0.0)) throw std::invalid_argument("Boundary: disc radius must be > 0");
  for (double z : layers) {
    for (double r = radius; r >= std::max(fill_radius, 0.0) - 1e-12 && r > 0.0; r -= spacing) {
      const auto count = std::max(3, static_cast<int>(std::ceil(2.0 * std::numbers::pi * r / spacing)));
      for (int k = 0; k < count; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / count;
        emit(center + Vec3{r * std::cos(phi), r * std::sin(phi), z});
      }
    }
  }
  return out;
}

std::vector<Particle> Block::particles(int dim, std::uint64_t scenario_seed) const {
  std::vector<Particle> out;
  const std::uint32_t layers = dim == 3 ? nz : 1;
  DeterministicRng rng(mix_seed(scenario_seed, seed));
  for (std::uint32_t iz = 0; iz < layers; ++iz) {
    for (std::uint32_t iy = 0; iy < ny; ++iy) {
      for (std::uint32_t ix = 0; ix < nx; ++ix) {
        Particle p;
        p.mass = mass;
        p.material_id = material_id;
        p.velocity = velocity;
        p.position = corner + Vec3{ix * spacing, iy * spacing, dim == 3 ? iz * spacing : 0.0};
        p.position.x += jitter * (rng.uniform() - 0.5);
        p.position.y += jitter * (rng.uniform() - 0.5);
        if (dim == 3) p.position.z += jitter * (rng.uniform() - 0.5);
        out.push_back(p);
      }
    }
  }
  return out;
}

std::uint32_t Scenario::material_index(const std::string& name) const {
  for (std::size_t k = 0; k < materials.size(); ++k) {
    if (materials[k].name == name) return static_cast<std::uint32_t>(k);
  }
  throw std::out_of_range("scenario '" + this->name + "' has no material '" + name + "'");
}

void Scenario::validate() const {
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("scenario '" + name + "': " + what);
  };
  if (dim != 2 && dim != 3) fail("dim must be 2 or 3");
  if (materials.empty()) fail("no materials");
  for (const Emitter& e : emitters) {
    if (e.material_id >= materials.size()) fail("emitter references unknown material");
    e.validate(dim);
  }
  for (const Boundary& b : boundaries) {
    if (b.material_id >= materials.size()) fail("boundary references unknown material");
  }
  for (const Block& b : blocks) {
    if (b.material_id >= materials.size()) fail("block references unknown material");
  }
  for (const auto& [material, tag] : tags) {
    check_preset_tag(tag, materials.at(material_index(material)).law);
  }
  instantiate().validate();
}

SimState Scenario::instantiate() const {
  SimState state;
  state.dim = dim;
  state.gravity = gravity;
  state.ambient_viscosity = ambient_viscosity;
  state.materials = materials;
  state.pair_rules = pair_rules;
  state.dt = dt;
  state.rng_seed = rng_seed;
  for (const Boundary& b : boundaries) {
    const auto ps = b.particles(dim);
    state.particles.insert(state.particles.end(), ps.begin(), ps.end());
  }
  state.particles.insert(state.particles.end(), particles.begin(), particles.end());
  for (const Block& b : blocks) {
    const auto ps = b.particles(dim, rng_seed);
    state.particles.insert(state.particles.end(), ps.begin(), ps.end());
  }
  return state;
}

Simulation::Simulation(Scenario scenario, unsigned threads)
    : scenario_(std::move(scenario)), engine_(threads) {
  reset();
}

void Simulation::reset() {
  state_ = scenario_.instantiate();
  progress_.assign(scenario_.emitters.size(), EmitterProgress{});
}

void Simulation::advance(std::uint64_t steps) {
  for (std::uint64_t s = 0; s < steps; ++s) {
    for (std::size_t e = 0; e < scenario_.emitters.size(); ++e) {
      spawn(scenario_.emitters[e], progress_[e], state_);
    }
    engine_.step(state_);
  }
}

Frame Simulation::frame() {
  Frame f;
  f.step = state_.step_count;
  f.time = state_.time;
  f.dim = state_.dim;
  f.particles = state_.particles;
  f.contacts = engine_.evaluate(state_).contacts;
  return f;
}

}  // namespace mesop
