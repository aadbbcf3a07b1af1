#include "mesop/interactions.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mesop {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

double segment_integral(const Segment& s, double from, double to) {
  // integral of slope * (x - rest) + offset over [from, to]
  auto antiderivative = [&](double x) {
    const double u = x - s.rest;
    return 0.5 * s.slope * u * u + s.offset * x;
  };
  return antiderivative(to) - antiderivative(from);
}

}  // namespace

void MaterialLaw::validate() const {
  require(std::isfinite(K) && K >= 0.0, "MaterialLaw: K must be finite and >= 0");
  require(std::isfinite(Z) && Z >= 0.0, "MaterialLaw: Z must be finite and >= 0");
  require(std::isfinite(De) && De > 0.0, "MaterialLaw: De must be finite and > 0");
  require(std::isfinite(Dv) && Dv > 0.0, "MaterialLaw: Dv must be finite and > 0");
  require(std::isfinite(D0) && D0 >= 0.0, "MaterialLaw: D0 must be finite and >= 0");
}

double elastic_force(const MaterialLaw& law, double distance) {
  if (distance <= 0.0 || distance > law.De) return 0.0;
  return law.K * (distance - law.D0);
}

double viscous_force(const MaterialLaw& law, double distance, double distance_rate) {
  if (distance <= 0.0 || distance > law.Dv) return 0.0;
  return law.Z * distance_rate;
}

double elastic_potential(const MaterialLaw& law, double distance) {
  if (distance > law.De) return 0.0;
  const double d = std::max(distance, 0.0);
  const double u = d - law.D0;
  const double edge = law.De - law.D0;
  return 0.5 * law.K * (u * u - edge * edge);
}

PairForce pair_force(double distance, const Vec3& unit_ji, const Vec3& relative_velocity,
                     const MaterialLaw& law) {
  PairForce out;
  if (distance <= 0.0) {
    out.degenerate = true;
    return out;
  }
  out.elastic = elastic_force(law, distance);
  if (law.Z != 0.0 && distance <= law.Dv) {
    out.viscous = viscous_force(law, distance, dot(relative_velocity, unit_ji));
  }
  out.on_i = unit_ji * (-(out.elastic + out.viscous));
  return out;
}

PairForce pair_force(const Particle& pi, const Particle& pj, const MaterialLaw& law) {
  const Vec3 sep = pi.position - pj.position;
  const double distance = norm(sep);
  if (distance <= 0.0) return pair_force(0.0, Vec3{}, Vec3{}, law);
  return pair_force(distance, sep * (1.0 / distance), pi.velocity - pj.velocity, law);
}

PiecewiseLaw::PiecewiseLaw(std::vector<Segment> segments) : segments_(std::move(segments)) {
  for (std::size_t k = 0; k < segments_.size(); ++k) {
    const Segment& s = segments_[k];
    require(std::isfinite(s.lower) && std::isfinite(s.upper) && std::isfinite(s.slope) &&
                std::isfinite(s.rest) && std::isfinite(s.offset),
            "PiecewiseLaw: non-finite segment field");
    require(s.lower >= 0.0 && s.lower <= s.upper, "PiecewiseLaw: need 0 <= DT1 <= DT2");
    if (k > 0) {
      require(segments_[k - 1].upper <= s.lower, "PiecewiseLaw: segments overlap or are unsorted");
    }
  }
}

PiecewiseLaw PiecewiseLaw::from_elastic(const MaterialLaw& law) {
  return PiecewiseLaw({Segment{0.0, law.De, law.K, law.D0, 0.0}});
}

double PiecewiseLaw::evaluate(double distance) const {
  for (auto it = segments_.rbegin(); it != segments_.rend(); ++it) {
    if (distance >= it->lower && distance <= it->upper) {
      return it->slope * (distance - it->rest) + it->offset;
    }
  }
  return 0.0;
}

double PiecewiseLaw::potential(double distance) const {
  double total = 0.0;
  for (const Segment& s : segments_) {
    const double from = std::max(distance, s.lower);
    if (from < s.upper) total -= segment_integral(s, from, s.upper);
  }
  return total;
}

void LennardJonesLaw::validate() const {
  require(std::isfinite(a) && a > 0.0, "LennardJonesLaw: a must be > 0");
  require(std::isfinite(b) && b > 0.0, "LennardJonesLaw: b must be > 0");
  require(m > 0 && n > m, "LennardJonesLaw: need 0 < m < n");
}

double lj_force(const LennardJonesLaw& law, double distance) {
  if (distance == 0.0) throw PoleError("lj_force: pole at D = 0");
  if (distance < 0.0) throw std::invalid_argument("lj_force: negative distance");
  return -law.a / std::pow(distance, law.m) + law.b / std::pow(distance, law.n);
}

double lj_root(const LennardJonesLaw& law) {
  law.validate();
  return std::pow(law.b / law.a, 1.0 / static_cast<double>(law.n - law.m));
}

PiecewiseLaw linearize_lj(const LennardJonesLaw& law, std::span<const double> knots) {
  law.validate();
  if (knots.size() < 2) throw std::invalid_argument("linearize_lj: need at least 2 knots");
  for (std::size_t k = 0; k < knots.size(); ++k) {
    require(knots[k] > 0.0, "linearize_lj: knots must be > 0");
    if (k > 0) require(knots[k] > knots[k - 1], "linearize_lj: knots must be strictly increasing");
  }
  std::vector<Segment> segments;
  segments.reserve(knots.size() - 1);
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double left = knots[k];
    const double right = knots[k + 1];
    const double f_left = lj_force(law, left);
    const double f_right = lj_force(law, right);
    segments.push_back(Segment{left, right, (f_right - f_left) / (right - left), left, f_left});
  }
  return PiecewiseLaw(std::move(segments));
}

void CollisionRule::validate() const {
  require(std::isfinite(r) && r >= 0.0 && r <= 1.0, "CollisionRule: r must lie in [0, 1]");
  require(std::isfinite(disk_radius) && disk_radius >= 0.0, "CollisionRule: bad disk radius");
}

std::pair<Vec3, Vec3> restitution_collide(const Vec3& u1, const Vec3& u2, const Vec3& k,
                                          const CollisionRule& rule) {
  rule.validate();
  if (std::abs(norm(k) - 1.0) > 1e-9) {
    throw std::invalid_argument("restitution_collide: k must be a unit vector");
  }
  const Vec3 impulse = k * (0.5 * (1.0 + rule.r) * dot(k, u1 - u2));
  return {u1 - impulse, u2 + impulse};
}

}  // namespace mesop
