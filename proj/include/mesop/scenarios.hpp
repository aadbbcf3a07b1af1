#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mesop/model.hpp"

namespace mesop {

enum class InteractionPreset { IP1, IP2, IP3, IP4, IP5 };

std::string to_string(InteractionPreset tag);
InteractionPreset interaction_preset_from_string(const std::string& text);

// Checks the threshold relation of an IP tag on a law:
// IP1 Z = 0, IP2 K = 0, IP3 De = Dv, IP4 De > Dv, IP5 Dv > De (both active
// for IP3..IP5). Throws std::invalid_argument on mismatch.
void check_preset_tag(InteractionPreset tag, const MaterialLaw& law);

struct Emitter {
  Vec3 origin;
  Vec3 direction{1.0, 0.0, 0.0};
  double speed = 0.0;
  double rate = 0.0;  // particles per second
  std::uint32_t material_id = 0;
  std::uint64_t jitter_seed = 0;
  double width = 0.0;            // lanes are spread evenly over this span
  std::uint32_t lanes = 1;       // per transverse axis; lanes^(dim-1) in total
  double jitter = 0.0;           // random positional perturbation amplitude
  double velocity_jitter = 0.0;  // transverse velocity spread, fraction of speed
  double mass = 1.0;
  std::uint64_t max_count = 0;   // 0 = unlimited

  void validate(int dim) const;
  friend bool operator==(const Emitter&, const Emitter&) = default;
};

// Cumulative spawn bookkeeping for one emitter. The debt after n steps is
// rate * dt * n - spawned.
struct EmitterProgress {
  std::uint64_t steps = 0;
  std::uint64_t spawned = 0;

  friend bool operator==(const EmitterProgress&, const EmitterProgress&) = default;
};

// Appends this step's particles for one emitter to state.particles and
// returns how many were spawned.
std::size_t spawn(const Emitter& emitter, EmitterProgress& progress, SimState& state);

// Fixed rows of boundary particles. A segment becomes a line of particles in
// 2D and a strip extruded along z over `depth` in 3D; a disc becomes a ring
// (a cylinder in 3D) filled with concentric rings down to `fill_radius`.
struct Boundary {
  enum class Shape { segment, disc };
  Shape shape = Shape::segment;
  Vec3 a;
  Vec3 b;
  Vec3 center;
  double radius = 0.0;
  double fill_radius = 0.0;
  double spacing = 0.5;
  double depth = 0.0;
  std::uint32_t material_id = 0;

  std::vector<Particle> particles(int dim) const;
  friend bool operator==(const Boundary&, const Boundary&) = default;
};

// Initial lattice of free particles: counts per axis from a corner, with a
// deterministic positional jitter.
struct Block {
  Vec3 corner;
  std::uint32_t nx = 1;
  std::uint32_t ny = 1;
  std::uint32_t nz = 1;  // ignored in 2D
  double spacing = 1.0;
  double jitter = 0.0;
  std::uint64_t seed = 0;
  std::uint32_t material_id = 0;
  double mass = 1.0;
  Vec3 velocity;

  // Jitter is drawn from a stream keyed by the scenario seed and `seed`.
  std::vector<Particle> particles(int dim, std::uint64_t scenario_seed = 0) const;
  friend bool operator==(const Block&, const Block&) = default;
};

// Hints consumed by the metrics stage.
struct AnalysisHints {
  double ground_height = std::numeric_limits<double>::quiet_NaN();
  Vec3 flow_axis{1.0, 0.0, 0.0};
  double bin_width = 1.0;       // silhouette bin width for the repose angle
  double contact_radius = 1.0;  // cluster contact radius

  friend bool operator==(const AnalysisHints& x, const AnalysisHints& y) {
    const bool ground_eq = (std::isnan(x.ground_height) && std::isnan(y.ground_height)) ||
                           x.ground_height == y.ground_height;
    return ground_eq && x.flow_axis == y.flow_axis && x.bin_width == y.bin_width &&
           x.contact_radius == y.contact_radius;
  }
};

struct Scenario {
  std::string name;
  int dim = 2;
  std::vector<Particle> particles;
  std::vector<Emitter> emitters;
  std::vector<Boundary> boundaries;
  std::vector<Block> blocks;
  Vec3 gravity;
  double ambient_viscosity = 0.0;
  std::vector<Material> materials;
  PairRules pair_rules;
  double dt = 1.0 / 1050.0;
  std::uint64_t duration = 10000;
  std::uint64_t rng_seed = 0;
  AnalysisHints analysis;
  // material name -> IP tag the material's law must satisfy
  std::vector<std::pair<std::string, InteractionPreset>> tags;

  void validate() const;
  SimState instantiate() const;
  std::uint32_t material_index(const std::string& name) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct PresetOptions {
  int dim = 2;
  double k_scale = 1.0;  // dry_to_moist family
  double z_scale = 1.0;
};

// Named experiment presets. Throws std::out_of_range for an unknown name.
Scenario preset(const std::string& name, const PresetOptions& options = {});
std::vector<std::string> preset_names();

struct Frame {
  std::uint64_t step = 0;
  double time = 0.0;
  int dim = 2;
  std::vector<Particle> particles;
  std::vector<ContactStats> contacts;  // empty when not evaluated
};

// A scenario being run: state plus emitter bookkeeping.
class Simulation {
 public:
  explicit Simulation(Scenario scenario, unsigned threads = 1);

  // Spawn then step, `steps` times.
  void advance(std::uint64_t steps = 1);
  void reset();

  const Scenario& scenario() const { return scenario_; }
  const SimState& state() const { return state_; }
  SimState& state() { return state_; }
  const std::vector<EmitterProgress>& emitter_progress() const { return progress_; }
  Engine& engine() { return engine_; }

  // Snapshot including contact statistics for the current positions.
  Frame frame();

 private:
  Scenario scenario_;
  SimState state_;
  std::vector<EmitterProgress> progress_;
  Engine engine_;
};

}  // namespace mesop
