#pragma once

#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mesop/particle.hpp"
#include "mesop/vec.hpp"

namespace mesop {

// Scalar sign convention for the thresholded laws: the returned value is a
// tension. Positive pulls the pair together, negative pushes it apart, so
// K * (D - D0) is repulsive below the rest length and attractive above it.
// The vector force on particle i is -scalar * k, with k the unit vector
// pointing from j to i.

// Single-threshold visco-elastic law. The elastic term is active on (0, De],
// the viscous term on (0, Dv].
struct MaterialLaw {
  double K = 0.0;   // elastic stiffness
  double Z = 0.0;   // pair viscosity
  double De = 1.0;  // elastic threshold
  double Dv = 1.0;  // viscous threshold
  double D0 = 1.0;  // elastic rest length

  // Throws std::invalid_argument when a field is out of range.
  void validate() const;

  double threshold_ratio() const { return Dv / De; }
  double cutoff() const { return De > Dv ? De : Dv; }
  bool elastic_active() const { return K != 0.0; }
  bool viscous_active() const { return Z != 0.0; }

  friend bool operator==(const MaterialLaw&, const MaterialLaw&) = default;
};

double elastic_force(const MaterialLaw& law, double distance);

// distance_rate is dD/dt, the relative velocity projected on the centre line.
double viscous_force(const MaterialLaw& law, double distance, double distance_rate);

// Potential energy of the elastic term, continuous and zero beyond De, so
// that -dU/dD matches the repulsive component of elastic_force.
double elastic_potential(const MaterialLaw& law, double distance);

struct PairForce {
  Vec3 on_i;               // force on i; j receives -on_i
  double elastic = 0.0;    // tension scalar of the elastic term
  double viscous = 0.0;    // tension scalar of the viscous term
  bool degenerate = false; // coincident centres, force zeroed
};

PairForce pair_force(const Particle& pi, const Particle& pj, const MaterialLaw& law);

// Same as above with precomputed separation. unit_ji points from j to i.
PairForce pair_force(double distance, const Vec3& unit_ji, const Vec3& relative_velocity,
                     const MaterialLaw& law);

// General piecewise-linear family. Each segment contributes
// slope * (D - rest) + offset on [lower, upper]. When segments share an
// endpoint the later segment wins.
struct Segment {
  double lower = 0.0;
  double upper = 0.0;
  double slope = 0.0;
  double rest = 0.0;
  double offset = 0.0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

class PiecewiseLaw {
 public:
  PiecewiseLaw() = default;
  explicit PiecewiseLaw(std::vector<Segment> segments);

  // The elastic part of a MaterialLaw as a one-segment law.
  static PiecewiseLaw from_elastic(const MaterialLaw& law);

  double evaluate(double distance) const;
  // U(D) = -integral of the scalar from D to infinity. When the scalar is a
  // tension, -dU/dD is the radial force.
  double potential(double distance) const;

  std::span<const Segment> segments() const { return segments_; }
  double support() const { return segments_.empty() ? 0.0 : segments_.back().upper; }

 private:
  std::vector<Segment> segments_;
};

// F(D) = -a / D^m + b / D^n, printed convention: positive is repulsive.
struct LennardJonesLaw {
  double a = 1.0;
  double b = 1.0;
  int m = 6;
  int n = 12;

  void validate() const;
};

class PoleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

double lj_force(const LennardJonesLaw& law, double distance);

// Closed form balance point D* = (b / a)^(1 / (n - m)).
double lj_root(const LennardJonesLaw& law);

// Piecewise-linear interpolant through lj_force at each knot, zero past the
// last knot. Values are in the Lennard-Jones convention of lj_force.
PiecewiseLaw linearize_lj(const LennardJonesLaw& law, std::span<const double> knots);

// Equal-mass restitution collision.
struct CollisionRule {
  double r = 1.0;
  double disk_radius = 0.5;

  void validate() const;
};

std::pair<Vec3, Vec3> restitution_collide(const Vec3& u1, const Vec3& u2, const Vec3& k,
                                          const CollisionRule& rule);

}  // namespace mesop
