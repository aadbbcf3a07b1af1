#pragma once

#include <cstdint>

#include "mesop/vec.hpp"

namespace mesop {

enum class ParticleKind : std::uint8_t { free = 0, boundary = 1 };

// A meso-particle: a parcel of matter, not a molecule.
// Boundary particles are fixed in place and never integrated.
struct Particle {
  Vec3 position;
  Vec3 velocity;
  double mass = 1.0;
  std::uint32_t material_id = 0;
  ParticleKind kind = ParticleKind::free;

  bool is_free() const { return kind == ParticleKind::free; }

  friend bool operator==(const Particle&, const Particle&) = default;
};

}  // namespace mesop
