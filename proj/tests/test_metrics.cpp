#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include "doctest.h"
#include "mesop/calibration.hpp"
#include "mesop/metrics.hpp"
#include "mesop/rng.hpp"

using namespace mesop;

namespace {

Particle free_at(double x, double y) {
  Particle p;
  p.position = {x, y, 0};
  return p;
}

// Filled triangle of half-width `half` and slope tan(angle) on y = 0.
Frame wedge(double angle_deg, double half, double spacing, double noise = 0.0, std::uint64_t seed = 0) {
  Frame f;
  const double slope = std::tan(angle_deg * std::numbers::pi / 180.0);
  DeterministicRng rng(seed);
  for (double x = -half; x <= half + 1e-9; x += spacing) {
    const double top = slope * (half - std::abs(x));
    for (double y = 0.5 * spacing; y <= top + 1e-9; y += spacing) {
      f.particles.push_back(free_at(x + noise * (rng.uniform() - 0.5), y + noise * (rng.uniform() - 0.5)));
    }
  }
  return f;
}

// Independent repose oracle: upper convex hull of the pile, then the angle of
// the chords from the apex to the outermost hull vertices on each side.
double hull_angle(const Frame& f) {
  std::vector<std::pair<double, double>> pts;
  for (const Particle& p : f.particles) pts.emplace_back(p.position.x, p.position.y);
  std::sort(pts.begin(), pts.end());
  std::vector<std::pair<double, double>> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      const double cross = (b.first - a.first) * (p.second - a.second) - (b.second - a.second) * (p.first - a.first);
      if (cross >= 0) hull.pop_back();
      else break;
    }
    hull.push_back(p);
  }
  const auto apex = std::max_element(hull.begin(), hull.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
  const auto& l = hull.front();
  const auto& r = hull.back();
  const double al = std::atan2(apex->second - l.second, apex->first - l.first);
  const double ar = std::atan2(apex->second - r.second, r.first - apex->first);
  return 90.0 * (al + ar) / std::numbers::pi;
}

MetricVector base_metrics() {
  MetricVector m;
  m.free_particles = 100;
  return m;
}

}  // namespace

TEST_CASE("repose angle of a 45-degree wedge") {
  const Frame f = wedge(45.0, 10.0, 0.25);
  CHECK(angle_of_repose(f, 0.0, 0.5) == doctest::Approx(45.0).epsilon(0.05));
}

TEST_CASE("repose angle of a flat sheet is near zero") {
  Frame f;
  for (double x = -10; x <= 10; x += 0.5) {
    for (double y = 0.25; y < 1.0; y += 0.5) f.particles.push_back(free_at(x, y));
  }
  CHECK(angle_of_repose(f, 0.0, 1.0) < 2.0);
  CHECK(spread_ratio(f, 0.0) < 0.1);
}

TEST_CASE("repose angle is invariant under translation and reflection") {
  const Frame f = wedge(30.0, 8.0, 0.3, 0.1, 4);
  const double a = angle_of_repose(f, 0.0, 0.6);
  Frame moved = f;
  for (Particle& p : moved.particles) p.position += Vec3{13.7, 2.0, 0.0};
  CHECK(angle_of_repose(moved, 2.0, 0.6) == doctest::Approx(a).epsilon(0.03));
  Frame mirrored = f;
  for (Particle& p : mirrored.particles) p.position.x = -p.position.x;
  CHECK(angle_of_repose(mirrored, 0.0, 0.6) == doctest::Approx(a).epsilon(0.03));
}

TEST_CASE("repose angle agrees with a convex-hull oracle on rough piles") {
  for (double angle : {20.0, 30.0, 40.0}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const Frame f = wedge(angle, 10.0, 0.5, 0.2, seed);
      CHECK(std::abs(angle_of_repose(f, 0.0, 1.0) - hull_angle(f)) <= 3.0);
    }
  }
}

TEST_CASE("repose angle needs enough particles") {
  Frame f;
  for (int k = 0; k < 5; ++k) f.particles.push_back(free_at(k, 1));
  CHECK_THROWS_AS(angle_of_repose(f, 0.0, 1.0), MetricError);
}

TEST_CASE("cluster count matches a BFS oracle and ignores indexing") {
  DeterministicRng rng(9);
  Frame f;
  for (int k = 0; k < 300; ++k) f.particles.push_back(free_at(rng.uniform(0, 30), rng.uniform(0, 30)));
  Particle wall = free_at(15, 15);
  wall.kind = ParticleKind::boundary;
  f.particles.push_back(wall);

  // BFS oracle over free particles
  std::vector<std::size_t> ids;
  for (std::size_t k = 0; k < f.particles.size(); ++k) {
    if (f.particles[k].is_free()) ids.push_back(k);
  }
  std::vector<int> seen(ids.size(), 0);
  std::size_t components = 0, largest = 0;
  for (std::size_t s = 0; s < ids.size(); ++s) {
    if (seen[s]) continue;
    ++components;
    std::size_t size = 0;
    std::queue<std::size_t> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      const std::size_t a = q.front();
      q.pop();
      ++size;
      for (std::size_t b = 0; b < ids.size(); ++b) {
        if (!seen[b] && norm(f.particles[ids[a]].position - f.particles[ids[b]].position) <= 1.5) {
          seen[b] = 1;
          q.push(b);
        }
      }
    }
    largest = std::max(largest, size);
  }
  const auto [count, fraction] = cluster_count(f, 1.5);
  CHECK(count == components);
  CHECK(fraction == doctest::Approx(static_cast<double>(largest) / ids.size()));

  Frame shuffled = f;
  std::reverse(shuffled.particles.begin(), shuffled.particles.end());
  std::rotate(shuffled.particles.begin(), shuffled.particles.begin() + 37, shuffled.particles.end());
  CHECK(cluster_count(shuffled, 1.5) == std::make_pair(count, fraction));
}

TEST_CASE("stress heterogeneity") {
  Frame f;
  for (int k = 0; k < 16; ++k) {
    f.particles.push_back(free_at(k % 4, k / 4));
    f.contacts.push_back({4, 2.0});
  }
  CHECK(stress_heterogeneity(f) == doctest::Approx(0.0));
  for (ContactStats& c : f.contacts) c.elastic_load = 0.01;
  f.contacts[5].elastic_load = 50.0;
  CHECK(stress_heterogeneity(f) > 1.0);
  for (ContactStats& c : f.contacts) c.elastic_contacts = 0;
  CHECK_THROWS_AS(stress_heterogeneity(f), MetricError);
}

TEST_CASE("shear rms and kinetic energy") {
  Frame f;
  f.particles = {free_at(0, 0), free_at(1, 0)};
  f.particles[0].velocity = {1, 1, 0};
  f.particles[1].velocity = {1, -1, 0};
  CHECK(shear_rms(f, {1, 0, 0}) == doctest::Approx(1.0));
  CHECK(shear_rms(f, {0, 1, 0}) == doctest::Approx(1.0));
  f.particles[1].velocity = {1, 1, 0};
  CHECK(shear_rms(f, {1, 0, 0}) == doctest::Approx(1.0));
  f.particles[0].velocity = {2, 0, 0};
  f.particles[1].velocity = {-2, 0, 0};
  CHECK(shear_rms(f, {1, 0, 0}) == doctest::Approx(0.0));
  CHECK(kinetic_energy_per_particle(f) == doctest::Approx(2.0));
}

TEST_CASE("classifier decision table") {
  namespace c = calibration;
  MetricVector gas = base_metrics();
  gas.kinetic_energy_per_particle = 5.0;
  gas.largest_cluster_fraction = 0.05;
  CHECK(classify(gas) == RegimeLabel::gas);

  MetricVector turbulent = base_metrics();
  turbulent.kinetic_energy_per_particle = 10.0;
  turbulent.largest_cluster_fraction = 0.8;
  turbulent.shear_growth = 2.0 * c::kTurbulentShearGrowth;
  CHECK(classify(turbulent) == RegimeLabel::fluid_turbulent);
  turbulent.shear_growth = 1.0;
  CHECK(classify(turbulent) == RegimeLabel::unclassified);

  MetricVector pile = base_metrics();
  pile.pile_defined = true;
  pile.repose_angle_deg = 25.0;
  pile.spread_ratio = 0.2;  // a triangle-like heap
  pile.largest_cluster_fraction = 0.95;
  pile.stress_defined = true;
  pile.stress_cv = 0.5;
  pile.kinetic_energy_per_particle = 0.01;
  CHECK(classify(pile) == RegimeLabel::granular);

  MetricVector moving = pile;
  moving.kinetic_energy_per_particle = 2.0;
  CHECK(classify(moving) == RegimeLabel::unclassified);

  MetricVector fluid = pile;
  fluid.repose_angle_deg = 3.0;
  fluid.spread_ratio = 0.05;
  CHECK(classify(fluid) == RegimeLabel::fluid_laminar);

  MetricVector paste = pile;
  paste.repose_angle_deg = 30.0;
  paste.spread_ratio = 1.0;  // mound index = 1 / (0.5 tan 30) ~ 3.5
  CHECK(mound_index(paste) == doctest::Approx(1.0 / (0.5 * std::tan(std::numbers::pi / 6))));
  CHECK(classify(paste) == RegimeLabel::paste);

  MetricVector empty;
  CHECK(classify(empty) == RegimeLabel::unclassified);
}

TEST_CASE("classify is a pure function of its input") {
  MetricVector m = base_metrics();
  m.pile_defined = true;
  m.repose_angle_deg = 20;
  m.stress_defined = true;
  m.stress_cv = 0.4;
  m.spread_ratio = 0.3;
  const RegimeLabel first = classify(m);
  for (int k = 0; k < 10; ++k) CHECK(classify(m) == first);
}

TEST_CASE("label names round-trip") {
  for (RegimeLabel l : {RegimeLabel::gas, RegimeLabel::granular, RegimeLabel::fluid_laminar,
                        RegimeLabel::fluid_turbulent, RegimeLabel::paste, RegimeLabel::unclassified}) {
    CHECK(regime_label_from_string(to_string(l)) == l);
  }
  CHECK_THROWS(regime_label_from_string("plasma"));
}

TEST_CASE("report csv row has one field per header column") {
  RegimeReport r;
  r.metrics.shear_growth = 1.5;
  const std::string header = report_csv_header();
  const std::string row = report_csv_row(12, 0.5, r);
  CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));
  CHECK(row.rfind("12,0.5,", 0) == 0);
}
