#include "mesop/model.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace mesop {

namespace {

std::pair<std::uint32_t, std::uint32_t> ordered(std::uint32_t a, std::uint32_t b) {
  return a <= b ? std::pair{a, b} : std::pair{b, a};
}

void rule_table(const SimState& state, std::vector<MaterialLaw>& table) {
  const auto m = static_cast<std::uint32_t>(state.materials.size());
  table.resize(static_cast<std::size_t>(m) * m);
  for (std::uint32_t a = 0; a < m; ++a) {
    for (std::uint32_t b = 0; b < m; ++b) table[a * m + b] = state.rule(a, b);
  }
}

std::vector<MaterialLaw> rule_table(const SimState& state) {
  std::vector<MaterialLaw> table;
  rule_table(state, table);
  return table;
}

void compute_pair_forces(const SimState& state, const std::vector<MaterialLaw>& table,
                         std::span<const PairHit> pairs, std::span<PairForce> out) {
  const auto m = state.materials.size();
  const auto& ps = state.particles;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const PairHit& h = pairs[k];
    const Particle& pi = ps[h.i];
    const Particle& pj = ps[h.j];
    const MaterialLaw& law = table[pi.material_id * m + pj.material_id];
    out[k] = pair_force(h.distance, h.unit_ji, pi.velocity - pj.velocity, law);
  }
}

}  // namespace

void PairRules::set(std::uint32_t a, std::uint32_t b, const MaterialLaw& law) {
  rules_[ordered(a, b)] = law;
}

void PairRules::erase(std::uint32_t a, std::uint32_t b) { rules_.erase(ordered(a, b)); }

const MaterialLaw* PairRules::find(std::uint32_t a, std::uint32_t b) const {
  const auto it = rules_.find(ordered(a, b));
  return it == rules_.end() ? nullptr : &it->second;
}

MaterialLaw PairRules::resolve(const std::vector<Material>& materials, std::uint32_t a,
                               std::uint32_t b) const {
  if (const MaterialLaw* law = find(a, b)) return *law;
  return materials.at(std::min(a, b)).law;
}

void SimState::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("SimState: " + what); };
  if (dim != 2 && dim != 3) fail("dim must be 2 or 3");
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt must be finite and > 0");
  if (!(ambient_viscosity >= 0.0) || !std::isfinite(ambient_viscosity)) {
    fail("ambient_viscosity must be finite and >= 0");
  }
  if (!is_finite(gravity)) fail("gravity must be finite");
  if (dim == 2 && gravity.z != 0.0) fail("2D state with non-zero gravity z");
  for (const Material& mat : materials) mat.law.validate();
  for (const auto& [key, law] : pair_rules.entries()) {
    if (key.second >= materials.size()) fail("pair rule references unknown material");
    law.validate();
  }
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const Particle& p = particles[i];
    const std::string at = " (particle " + std::to_string(i) + ")";
    if (p.material_id >= materials.size()) fail("unknown material id" + at);
    if (!is_finite(p.position) || !is_finite(p.velocity)) fail("non-finite particle" + at);
    if (p.is_free() && !(p.mass > 0.0 && std::isfinite(p.mass))) fail("mass must be > 0" + at);
    if (!p.is_free() && p.velocity != Vec3{}) fail("boundary particle with velocity" + at);
    if (dim == 2 && (p.position.z != 0.0 || p.velocity.z != 0.0)) fail("2D particle with z" + at);
  }
}

std::uint32_t SimState::material_index(const std::string& name) const {
  for (std::size_t k = 0; k < materials.size(); ++k) {
    if (materials[k].name == name) return static_cast<std::uint32_t>(k);
  }
  throw std::out_of_range("unknown material '" + name + "'");
}

double SimState::interaction_radius() const {
  double radius = 0.0;
  const auto m = static_cast<std::uint32_t>(materials.size());
  for (std::uint32_t a = 0; a < m; ++a) {
    for (std::uint32_t b = a; b < m; ++b) radius = std::max(radius, rule(a, b).cutoff());
  }
  return radius;
}

std::size_t SimState::free_count() const {
  return static_cast<std::size_t>(
      std::count_if(particles.begin(), particles.end(), [](const Particle& p) { return p.is_free(); }));
}

void ForceAccumulator::reset(std::size_t n) {
  force.assign(n, Vec3{});
  contacts.assign(n, ContactStats{});
  degenerate_pairs = 0;
  pairs_evaluated = 0;
}

void accumulate_forces(const SimState& state, const NeighborIndex& index, ForceAccumulator& out,
                       unsigned threads) {
  const std::size_t n = state.particles.size();
  out.reset(n);
  if (n == 0) return;
  if (index.size() != n) throw ContractViolation("accumulate_forces: index does not match state");
  const double radius = state.interaction_radius();
  if (index.cell_size() < radius) {
    throw ContractViolation("accumulate_forces: index cell smaller than interaction radius");
  }

  std::vector<PairHit>& hits = out.scratch_pairs;
  index.pairs_within(radius, hits);
  const auto& ps = state.particles;
  std::erase_if(hits, [&](const PairHit& h) { return !ps[h.i].is_free() && !ps[h.j].is_free(); });

  std::vector<MaterialLaw>& table = out.scratch_rules;
  rule_table(state, table);
  std::vector<PairForce>& results = out.scratch_results;
  results.resize(hits.size());
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, hits.size() / 256));
  if (workers <= 1) {
    compute_pair_forces(state, table, hits, results);
  } else {
    // Pair results land in fixed slots; the scatter below is serial and in
    // pair order, so the outcome does not depend on the worker count.
    std::vector<std::jthread> pool;
    const std::size_t chunk = (hits.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(hits.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back([&, begin, end] {
        compute_pair_forces(state, table, std::span(hits).subspan(begin, end - begin),
                            std::span(results).subspan(begin, end - begin));
      });
    }
  }

  for (std::size_t k = 0; k < hits.size(); ++k) {
    const PairHit& h = hits[k];
    const PairForce& f = results[k];
    if (f.degenerate) {
      ++out.degenerate_pairs;
      continue;
    }
    out.force[h.i] += f.on_i;
    out.force[h.j] -= f.on_i;
    const MaterialLaw& law = table[ps[h.i].material_id * state.materials.size() + ps[h.j].material_id];
    if (law.K != 0.0 && h.distance <= law.De) {
      const double load = std::abs(f.elastic);
      for (std::uint32_t p : {h.i, h.j}) {
        ++out.contacts[p].elastic_contacts;
        out.contacts[p].elastic_load += load;
      }
    }
  }
  out.pairs_evaluated = hits.size();

  for (std::size_t i = 0; i < n; ++i) {
    const Particle& p = ps[i];
    if (!p.is_free()) continue;
    out.force[i] += state.gravity * p.mass;
    if (state.ambient_viscosity != 0.0) out.force[i] -= p.velocity * state.ambient_viscosity;
  }
}

ForceAccumulator accumulate_forces(const SimState& state, const NeighborIndex& index,
                                   unsigned threads) {
  ForceAccumulator out;
  accumulate_forces(state, index, out, threads);
  return out;
}

Vec3 total_momentum(const SimState& state) {
  Vec3 sum;
  for (const Particle& p : state.particles) {
    if (p.is_free()) sum += p.velocity * p.mass;
  }
  return sum;
}

double kinetic_energy(const SimState& state) {
  double sum = 0.0;
  for (const Particle& p : state.particles) {
    if (p.is_free()) sum += 0.5 * p.mass * norm2(p.velocity);
  }
  return sum;
}

double potential_energy(const SimState& state) {
  const std::size_t n = state.particles.size();
  if (n < 2) return 0.0;
  double radius = 0.0;
  const auto m = static_cast<std::uint32_t>(state.materials.size());
  for (std::uint32_t a = 0; a < m; ++a) {
    for (std::uint32_t b = a; b < m; ++b) radius = std::max(radius, state.rule(a, b).De);
  }
  if (radius <= 0.0) return 0.0;
  std::vector<Vec3> positions(n);
  for (std::size_t i = 0; i < n; ++i) positions[i] = state.particles[i].position;
  const NeighborIndex index = NeighborIndex::build(positions, radius, state.dim);
  const std::vector<MaterialLaw> table = rule_table(state);
  double sum = 0.0;
  for (const PairHit& h : index.pairs_within(radius)) {
    const MaterialLaw& law =
        table[state.particles[h.i].material_id * m + state.particles[h.j].material_id];
    if (law.K != 0.0) sum += elastic_potential(law, h.distance);
  }
  return sum;
}

double total_energy(const SimState& state) { return kinetic_energy(state) + potential_energy(state); }

const ForceAccumulator& Engine::evaluate(const SimState& state) {
  const std::size_t n = state.particles.size();
  positions_.resize(n);
  for (std::size_t i = 0; i < n; ++i) positions_[i] = state.particles[i].position;
  double cell = state.interaction_radius();
  if (!(cell > 0.0)) cell = 1.0;
  index_.rebuild(positions_, cell, state.dim);
  accumulate_forces(state, index_, forces_, threads_);
  return forces_;
}

void Engine::step(SimState& state) {
  evaluate(state);
  const std::size_t n = state.particles.size();
  const double dt = state.dt;
  next_velocity_.resize(n);
  next_position_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Particle& p = state.particles[i];
    if (!p.is_free()) continue;
    const Vec3 v = p.velocity + forces_.force[i] * (dt / p.mass);
    const Vec3 x = p.position + v * dt;
    const bool escaped = std::abs(x.x) > kMaxCoordinate || std::abs(x.y) > kMaxCoordinate ||
                         std::abs(x.z) > kMaxCoordinate;
    if (!is_finite(v) || !is_finite(x) || escaped) {
      throw DivergenceError(i, "simulation diverged at particle " + std::to_string(i) +
                                   " (step " + std::to_string(state.step_count) +
                                   "); dt is likely too large for the stiffness");
    }
    next_velocity_[i] = v;
    next_position_[i] = x;
  }
  for (std::size_t i = 0; i < n; ++i) {
    Particle& p = state.particles[i];
    if (!p.is_free()) continue;
    p.velocity = next_velocity_[i];
    p.position = next_position_[i];
  }
  state.degenerate_pairs += forces_.degenerate_pairs;
  state.time += dt;
  ++state.step_count;
}

void step(SimState& state, unsigned threads) {
  Engine engine(threads);
  engine.step(state);
}

}  // namespace mesop
