#pragma once

// Shared helpers for the unit tests: random configurations and independent
// brute-force oracles.
#include <algorithm>
#include <cmath>
#include <tuple>
#include <vector>

#include "mesop/model.hpp"
#include "mesop/rng.hpp"

namespace test_support {

using namespace mesop;

inline std::vector<Vec3> random_positions(std::size_t n, double extent, int dim, std::uint64_t seed) {
  DeterministicRng rng(seed);
  std::vector<Vec3> out(n);
  for (Vec3& p : out) {
    p.x = rng.uniform(0.0, extent);
    p.y = rng.uniform(0.0, extent);
    if (dim == 3) p.z = rng.uniform(0.0, extent);
  }
  return out;
}

// (i, j, distance) for every pair with distance <= radius, i < j.
inline std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> brute_pairs(const std::vector<Vec3>& xs,
                                                                                 double radius) {
  std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      const double d = std::sqrt(norm2(xs[i] - xs[j]));
      if (d <= radius) out.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), d);
    }
  }
  return out;
}

// A closed cloud of free particles with one material.
inline SimState cloud(std::size_t n, double extent, int dim, const MaterialLaw& law, std::uint64_t seed,
                      double speed = 1.0) {
  SimState s;
  s.dim = dim;
  s.materials.push_back({"m", law});
  DeterministicRng rng(seed, 99);
  for (const Vec3& x : random_positions(n, extent, dim, seed)) {
    Particle p;
    p.position = x;
    p.velocity = Vec3{rng.uniform(-speed, speed), rng.uniform(-speed, speed),
                      dim == 3 ? rng.uniform(-speed, speed) : 0.0};
    s.particles.push_back(p);
  }
  return s;
}

// Scalar-then-project oracle for one pair, written from the law's definition
// rather than through pair_force.
inline Vec3 oracle_pair_force(const Particle& pi, const Particle& pj, const MaterialLaw& law) {
  const Vec3 sep = pi.position - pj.position;
  const double d = std::sqrt(norm2(sep));
  if (d == 0.0) return {};
  const Vec3 k = sep * (1.0 / d);
  double tension = 0.0;
  if (d <= law.De) tension += law.K * (d - law.D0);
  if (d <= law.Dv) tension += law.Z * dot(pi.velocity - pj.velocity, k);
  return k * (-tension);
}

}  // namespace test_support
