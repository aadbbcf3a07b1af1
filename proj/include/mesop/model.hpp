#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mesop/interactions.hpp"
#include "mesop/neighbor_index.hpp"
#include "mesop/particle.hpp"

namespace mesop {

struct Material {
  std::string name;
  MaterialLaw law;

  friend bool operator==(const Material&, const Material&) = default;
};

// Interaction rules between material pairs. A pair without an explicit rule
// uses the law of the lower-indexed material; (a, a) defaults to the
// material's own law. Rules are stored once per unordered pair, so
// rule(a, b) == rule(b, a) always holds.
class PairRules {
 public:
  void set(std::uint32_t a, std::uint32_t b, const MaterialLaw& law);
  void erase(std::uint32_t a, std::uint32_t b);
  const MaterialLaw* find(std::uint32_t a, std::uint32_t b) const;
  MaterialLaw resolve(const std::vector<Material>& materials, std::uint32_t a,
                      std::uint32_t b) const;

  const std::map<std::pair<std::uint32_t, std::uint32_t>, MaterialLaw>& entries() const {
    return rules_;
  }

  friend bool operator==(const PairRules&, const PairRules&) = default;

 private:
  std::map<std::pair<std::uint32_t, std::uint32_t>, MaterialLaw> rules_;
};

struct SimState {
  std::vector<Particle> particles;
  int dim = 2;
  double time = 0.0;
  std::uint64_t step_count = 0;
  Vec3 gravity;
  double ambient_viscosity = 0.0;
  std::vector<Material> materials;
  PairRules pair_rules;
  double dt = 1.0 / 1050.0;
  std::uint64_t rng_seed = 0;
  std::uint64_t degenerate_pairs = 0;

  // Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  std::uint32_t material_index(const std::string& name) const;
  MaterialLaw rule(std::uint32_t a, std::uint32_t b) const {
    return pair_rules.resolve(materials, a, b);
  }
  // max over all material pairs of max(De, Dv)
  double interaction_radius() const;
  std::size_t free_count() const;

  friend bool operator==(const SimState&, const SimState&) = default;
};

struct ContactStats {
  std::uint32_t elastic_contacts = 0;  // pairs with an active elastic term
  double elastic_load = 0.0;           // sum of |elastic scalar| over those pairs

  friend bool operator==(const ContactStats&, const ContactStats&) = default;
};

struct ForceAccumulator {
  std::vector<Vec3> force;
  std::vector<ContactStats> contacts;
  std::uint64_t degenerate_pairs = 0;
  std::size_t pairs_evaluated = 0;

  void reset(std::size_t n);
  std::size_t size() const { return force.size(); }

  // Per-pass scratch kept between passes to avoid reallocation.
  std::vector<PairHit> scratch_pairs;
  std::vector<PairForce> scratch_results;
  std::vector<MaterialLaw> scratch_rules;
};

// A free particle whose coordinate magnitude exceeds this has escaped any
// meaningful scene; the step is treated as diverged.
inline constexpr double kMaxCoordinate = 1e12;

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t particle, const std::string& what)
      : std::runtime_error(what), particle_(particle) {}
  std::size_t particle() const { return particle_; }

 private:
  std::size_t particle_;
};

// Force pass over all pairs reported by an index built for the current
// positions with radius >= state.interaction_radius().
void accumulate_forces(const SimState& state, const NeighborIndex& index, ForceAccumulator& out,
                       unsigned threads = 1);
ForceAccumulator accumulate_forces(const SimState& state, const NeighborIndex& index,
                                   unsigned threads = 1);

Vec3 total_momentum(const SimState& state);
double kinetic_energy(const SimState& state);
// Kinetic energy plus elastic pair potential. Viscous terms store nothing.
double potential_energy(const SimState& state);
double total_energy(const SimState& state);

// Owns the scratch buffers for stepping a SimState. Stepping is semi-implicit
// Euler: v += dt * F / m, then x += dt * v, on free particles only.
class Engine {
 public:
  explicit Engine(unsigned threads = 1) : threads_(threads == 0 ? 1 : threads) {}

  // Advances one step. On a non-finite result, or a coordinate beyond
  // kMaxCoordinate, throws DivergenceError naming
  // the first offending particle and leaves the state untouched.
  void step(SimState& state);

  // Refreshes index and forces for the current state without stepping.
  const ForceAccumulator& evaluate(const SimState& state);

  const ForceAccumulator& last_forces() const { return forces_; }
  const NeighborIndex& index() const { return index_; }
  unsigned threads() const { return threads_; }
  void set_threads(unsigned threads) { threads_ = threads == 0 ? 1 : threads; }

 private:
  unsigned threads_;
  NeighborIndex index_;
  ForceAccumulator forces_;
  std::vector<Vec3> positions_;
  std::vector<Vec3> next_velocity_;
  std::vector<Vec3> next_position_;
};

// Convenience wrapper used by tests: one step with a fresh engine.
void step(SimState& state, unsigned threads = 1);

}  // namespace mesop
