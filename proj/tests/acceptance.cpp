// Acceptance harness: one PASS/FAIL line per criterion, with the measured
// numbers that decided it. Exit status is non-zero when any line fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "mesop/config.hpp"
#include "mesop/frame_io.hpp"
#include "mesop/interactions.hpp"
#include "mesop/metrics.hpp"
#include "mesop/neighbor_index.hpp"
#include "mesop/rng.hpp"
#include "mesop/steering.hpp"
#include "mesop/sweep.hpp"
#include "mesop/version.hpp"

using namespace mesop;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s  %-28s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// Closed lattice of free particles with random velocities around a drift.
SimState closed_lattice(int side, const MaterialLaw& law, double speed, std::uint64_t seed) {
  SimState s;
  s.dim = 2;
  s.materials.push_back({"m", law});
  DeterministicRng rng(seed);
  for (int ix = 0; ix < side; ++ix) {
    for (int iy = 0; iy < side; ++iy) {
      Particle p;
      p.position = {ix * 0.95 + 0.05 * rng.uniform(), iy * 0.95 + 0.05 * rng.uniform(), 0.0};
      p.velocity = {0.3 + speed * (rng.uniform() - 0.5), -0.2 + speed * (rng.uniform() - 0.5), 0.0};
      s.particles.push_back(p);
    }
  }
  return s;
}

Outcome conservation() {
  SimState s = closed_lattice(15, MaterialLaw{2000, 0, 1.0, 1.0, 1.0}, 2.0, 1);
  const Vec3 p0 = total_momentum(s);
  double scale = 0.0;
  for (const Particle& p : s.particles) scale += p.mass * norm(p.velocity);
  const double e0 = total_energy(s);
  Engine engine;
  double worst_e = 0.0;
  for (int k = 0; k < 10000; ++k) {
    engine.step(s);
    if (k % 100 == 99) worst_e = std::max(worst_e, std::abs(total_energy(s) - e0) / e0);
  }
  const double dp = norm(total_momentum(s) - p0) / scale;
  return {dp < 1e-6 && worst_e < 0.01,
          fmt("momentum drift %.2e (rel), worst energy drift %.3f%%, %zu particles", dp, 100 * worst_e,
              s.particles.size())};
}

Outcome dissipation() {
  struct Case {
    const char* name;
    MaterialLaw law;
    double ambient;
  };
  const Case cases[] = {{"viscous", {0, 20, 1.0, 1.2, 1.0}, 0.0},
                        {"visco-elastic", {2000, 20, 1.0, 1.0, 0.9}, 0.0},
                        {"elastic+ambient", {2000, 0, 1.0, 1.0, 0.9}, 1.0},
                        {"paste-like", {2000, 5, 1.0, 4.0, 0.9}, 0.0}};
  std::string detail;
  bool ok = true;
  for (const Case& c : cases) {
    SimState s = closed_lattice(12, c.law, 3.0, 2);
    s.ambient_viscosity = c.ambient;
    Engine engine;
    double prev = total_energy(s);
    double worst_rise = -std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 5000; ++k) {
      engine.step(s);
      if (k % 100 == 0) {
        const double e = total_energy(s);
        worst_rise = std::max(worst_rise, e - prev);
        prev = e;
      }
    }
    const bool case_ok = worst_rise <= 1e-9;
    ok = ok && case_ok;
    detail += fmt("%s: largest change per sample %.1e; ", c.name, worst_rise);
  }
  return {ok, detail};
}

Outcome restitution() {
  DeterministicRng rng(3);
  double worst_p = 0.0, worst_e = 0.0, worst_n = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vec3 u1{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const Vec3 u2{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    Vec3 n{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    n = n * (1.0 / norm(n));
    const double r = rng.uniform();
    auto [v1, v2] = restitution_collide(u1, u2, n, CollisionRule{r, 0.5});
    worst_p = std::max(worst_p, norm((v1 + v2) - (u1 + u2)));
    std::tie(v1, v2) = restitution_collide(u1, u2, n, CollisionRule{1.0, 0.5});
    const double ke0 = norm2(u1) + norm2(u2);
    worst_e = std::max(worst_e, std::abs(norm2(v1) + norm2(v2) - ke0) / ke0);
    worst_p = std::max(worst_p, norm((v1 + v2) - (u1 + u2)));
    std::tie(v1, v2) = restitution_collide(u1, u2, n, CollisionRule{0.0, 0.5});
    worst_n = std::max(worst_n, std::abs(dot(v1 - v2, n)));
  }
  // "exact" momentum is checked at double rounding level
  return {worst_p <= 1e-13 && worst_e <= 1e-12 && worst_n <= 1e-13,
          fmt("momentum err %.1e, r=1 energy err %.1e, r=0 normal rel. velocity %.1e", worst_p, worst_e, worst_n)};
}

Outcome neighbor_exactness() {
  std::size_t mismatches = 0, total = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    DeterministicRng rng(500 + trial);
    const int dim = trial % 2 == 0 ? 2 : 3;
    const double extent = dim == 2 ? 14.0 : 7.0;
    std::vector<Vec3> xs(500);
    for (Vec3& p : xs) p = {rng.uniform(0, extent), rng.uniform(0, extent), dim == 3 ? rng.uniform(0, extent) : 0.0};
    const double radius = 1.0;
    const auto hits = NeighborIndex::build(xs, radius, dim).pairs_within(radius);
    std::size_t k = 0;
    bool same = true;
    for (std::uint32_t i = 0; i < xs.size(); ++i) {
      for (std::uint32_t j = i + 1; j < xs.size(); ++j) {
        if (std::sqrt(norm2(xs[i] - xs[j])) > radius) continue;
        if (k >= hits.size() || hits[k].i != i || hits[k].j != j) same = false;
        ++k;
      }
    }
    if (k != hits.size()) same = false;
    total += k;
    if (!same) ++mismatches;
  }
  return {mismatches == 0, fmt("%zu/100 configurations differ, %zu pairs checked", mismatches, total)};
}

Outcome regimes() {
  struct Want {
    const char* name;
    RegimeLabel label;
  };
  const Want wants[] = {{"granular_pile", RegimeLabel::granular},
                        {"fluid_spread", RegimeLabel::fluid_laminar},
                        {"paste_ooze", RegimeLabel::paste},
                        {"gas_jets", RegimeLabel::gas}};
  bool ok = true;
  std::string detail;
  for (const Want& w : wants) {
    const auto t0 = Clock::now();
    const RegimeReport r = run_and_classify(preset(w.name), 10000);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    bool good = r.label == w.label && secs < 60.0;
    if (w.label == RegimeLabel::granular) good = good && r.metrics.repose_angle_deg >= 15.0;
    if (w.label == RegimeLabel::fluid_laminar) good = good && r.metrics.repose_angle_deg <= 5.0;
    ok = ok && good;
    detail += fmt("%s=%s(%.1f deg,%.0fs) ", w.name, to_string(r.label).c_str(), r.metrics.repose_angle_deg, secs);
  }
  return {ok, detail};
}

std::string labels_of(const BehaviorMap& map, std::size_t j) {
  std::string s;
  for (std::size_t i = 0; i < map.spec.rows(); ++i) s += (i ? "," : "") + to_string(map.label(i, j));
  return s;
}

bool is_fluid(RegimeLabel l) { return l == RegimeLabel::fluid_laminar || l == RegimeLabel::fluid_turbulent; }

const std::vector<double> kSweepK = {50, 150, 400, 1000, 2000, 3000};

Outcome elasticity_transition() {
  SweepSpec spec;
  spec.base = "preset:granular_from_IP3";
  spec.axis1 = {"materials.grain.K", kSweepK};
  spec.steps = 10000;
  spec.seed = 1;
  const BehaviorMap map = run_sweep(spec);
  // exactly one change point from a fluid prefix to a granular suffix
  std::size_t changes = 0;
  bool labels_ok = true;
  for (std::size_t i = 0; i < map.spec.rows(); ++i) {
    const RegimeLabel l = map.label(i);
    if (!is_fluid(l) && l != RegimeLabel::granular) labels_ok = false;
    if (i > 0 && is_fluid(map.label(i - 1)) != is_fluid(l)) ++changes;
  }
  const bool direction = is_fluid(map.label(0)) && map.label(map.spec.rows() - 1) == RegimeLabel::granular;
  const double rise = map.cell(map.spec.rows() - 1).report.metrics.repose_angle_deg -
                      map.cell(0).report.metrics.repose_angle_deg;
  std::string angles;
  for (const SweepCell& c : map.cells) angles += fmt("%.1f ", c.report.metrics.repose_angle_deg);
  return {labels_ok && direction && changes == 1 && rise >= 10.0,
          fmt("labels %s; angles %s; rise %.1f deg", labels_of(map, 0).c_str(), angles.c_str(), rise)};
}

// Granular-range base used by the threshold-ratio and viscosity sweeps.
constexpr double kGranularRangeK = 2000.0;

Outcome threshold_ratio_transition() {
  SweepSpec spec;
  spec.base = "preset:granular_from_IP3";
  spec.axis1 = {"materials.grain.R_s", {1, 2, 3, 4}};
  spec.axis2 = SweepAxis{"materials.grain.K", {kGranularRangeK}};
  spec.steps = 10000;
  spec.seed = 1;
  const BehaviorMap map = run_sweep(spec);
  return {map.label(0) == RegimeLabel::granular && map.label(3) == RegimeLabel::paste,
          fmt("K=%.0f, R_s 1..4: %s", kGranularRangeK, labels_of(map, 0).c_str())};
}

Outcome dominance() {
  // paste reachable by raising R_s (previous criterion), never by scaling Z
  // over the same x1..x4 range at R_s = 1
  const Scenario base = preset("granular_from_IP3");
  const double z = base.materials[0].law.Z;
  SweepSpec spec;
  spec.base = "preset:granular_from_IP3";
  spec.axis1 = {"materials.grain.Z", {z, 2 * z, 3 * z, 4 * z}};
  spec.axis2 = SweepAxis{"materials.grain.K", {kGranularRangeK}};
  spec.steps = 10000;
  spec.seed = 1;
  const BehaviorMap zmap = run_sweep(spec);
  spec.axis1 = {"materials.grain.R_s", {1, 2, 3, 4}};
  const BehaviorMap rmap = run_sweep(spec);
  bool z_paste = false, r_paste = false;
  for (std::size_t i = 0; i < 4; ++i) {
    z_paste = z_paste || zmap.label(i) == RegimeLabel::paste;
    r_paste = r_paste || rmap.label(i) == RegimeLabel::paste;
  }
  return {r_paste && !z_paste,
          fmt("Z x1..x4 at R_s=1: %s; R_s 1..4: %s", labels_of(zmap, 0).c_str(), labels_of(rmap, 0).c_str())};
}

Outcome zone_topology() {
  SweepSpec spec;
  spec.base = "preset:granular_from_IP3";
  spec.axis1 = {"materials.grain.K", kSweepK};
  spec.axis2 = SweepAxis{"materials.grain.R_s", {1.0, 1.6, 2.2, 2.8, 3.4, 4.0}};
  spec.steps = 10000;
  spec.seed = 1;
  const BehaviorMap map = run_sweep(spec);
  const std::size_t last_i = spec.rows() - 1, last_j = spec.cols() - 1;
  const bool high_k_granular = map.label(last_i, 0) == RegimeLabel::granular;
  const bool low_k_fluid = is_fluid(map.label(0, 0));
  bool paste_top = false;
  for (std::size_t i = 0; i < spec.rows(); ++i) paste_top = paste_top || map.label(i, last_j) == RegimeLabel::paste;
  std::string rows;
  for (std::size_t j = spec.cols(); j-- > 0;) {
    rows += fmt("R_s=%.1f:", spec.axis2->values[j]);
    for (std::size_t i = 0; i < spec.rows(); ++i) {
      const std::string l = to_string(map.label(i, j));
      rows += " " + l.substr(0, 4);
    }
    rows += "; ";
  }
  return {high_k_granular && low_k_fluid && paste_top, rows};
}

Outcome kelvin_helmholtz() {
  auto growth = [](Scenario s) {
    s.tags.clear();
    Simulation sim(s);
    sim.advance(100);
    const double early = shear_rms(sim.frame(), s.analysis.flow_axis);
    sim.advance(4900);
    const double late = shear_rms(sim.frame(), s.analysis.flow_axis);
    return late / early;
  };
  const Scenario kh = preset("kelvin_helmholtz");
  Scenario control = kh;
  control.materials[0].law.Z = 0.0;
  const double g = growth(kh);
  const double g0 = growth(control);
  return {g >= 5.0 && g0 < g, fmt("IP2 growth %.2f (need >= 5), Z=0 control growth %.2f", g, g0)};
}

Outcome throughput() {
  SimState s;
  s.dim = 3;
  s.materials.push_back({"m", MaterialLaw{2000, 5, 1.0, 1.0, 0.9}});
  s.ambient_viscosity = 0.5;
  DeterministicRng rng(4);
  for (int x = 0; x < 10; ++x) {
    for (int y = 0; y < 10; ++y) {
      for (int z = 0; z < 10; ++z) {
        Particle p;
        p.position = Vec3{x * 0.95, y * 0.95, z * 0.95} +
                     Vec3{0.05 * rng.uniform(), 0.05 * rng.uniform(), 0.05 * rng.uniform()};
        s.particles.push_back(p);
      }
    }
  }
  Engine engine(1);
  for (int k = 0; k < 200; ++k) engine.step(s);  // warm-up
  std::uint64_t steps = 0;
  const auto t0 = Clock::now();
  double secs = 0.0;
  while (secs < 5.0) {
    for (int k = 0; k < 100; ++k) engine.step(s);
    steps += 100;
    secs = std::chrono::duration<double>(Clock::now() - t0).count();
  }
  const double rate = steps / secs;
  return {rate >= 1050.0, fmt("%.0f steps/s at 1000 particles, 3D, 1 thread (margin %.2fx over 1050)", rate,
                              rate / 1050.0)};
}

std::string frame_stream(const Scenario& scenario, unsigned threads, std::uint64_t steps, std::uint64_t every) {
  Simulation sim(scenario, threads);
  std::ostringstream out;
  for (std::uint64_t s = 0; s <= steps; s += every) {
    if (s > 0) sim.advance(every);
    write_frame_binary(out, make_record(sim.frame()));
  }
  return out.str();
}

Outcome determinism() {
  PresetOptions three;
  three.dim = 3;
  Scenario sc = preset("granular_pile", three);
  sc.rng_seed = 7;
  const std::string a = frame_stream(sc, 1, 2000, 250);
  const std::string b = frame_stream(sc, 1, 2000, 250);
  const std::string c = frame_stream(sc, 4, 2000, 250);
  return {a == b && a == c, fmt("%zu bytes of frames; run1 %016llx run2 %016llx threads=4 %016llx", a.size(),
                                static_cast<unsigned long long>(fnv1a(a)), static_cast<unsigned long long>(fnv1a(b)),
                                static_cast<unsigned long long>(fnv1a(c)))};
}

Outcome replay_determinism() {
  const Scenario initial = preset("granular_pile");
  SessionState live(initial);
  DeterministicRng rng(8);
  std::vector<LoggedMessage> log;
  std::vector<std::uint64_t> hashes;
  const std::uint64_t ticks = 150;
  for (std::uint64_t t = 0; t < ticks; ++t) {
    std::vector<ControlMessage> batch;
    if (log.size() < 100 && (t % 3 != 2)) {
      ControlMessage m;
      switch (rng.next() % 7) {
        case 0: m.type = ControlMessage::Type::set_param; m.path = "materials.grain.K"; m.value = rng.uniform(1000, 9000); break;
        case 1: m.type = ControlMessage::Type::set_param; m.path = "ambient_viscosity"; m.value = rng.uniform(0, 3); break;
        case 2: m.type = ControlMessage::Type::pause; break;
        case 3: m.type = ControlMessage::Type::resume; break;
        case 4: m.type = ControlMessage::Type::step; m.n = rng.next() % 30; break;
        case 5: m.type = ControlMessage::Type::set_speed; m.frames_per_second = rng.uniform(5, 60); break;
        default: m.type = ControlMessage::Type::set_param; m.path = "gravity"; m.value = rng.uniform(5, 15); break;
      }
      batch.push_back(m);
      log.push_back({t, m});
    }
    hashes.push_back(fnv1a(tick(live, batch)));
  }
  const auto replayed = replay(initial, log_from_ndjson(log_to_ndjson(log)), ticks);
  return {replayed == hashes && log.size() == 100,
          fmt("%zu messages over %llu frames; stream hash %016llx", log.size(),
              static_cast<unsigned long long>(ticks),
              static_cast<unsigned long long>(fnv1a(std::string_view(reinterpret_cast<const char*>(hashes.data()),
                                                                      hashes.size() * sizeof(std::uint64_t)))))};
}

}  // namespace

int main() {
  std::printf("%s acceptance\n", std::string(kEngineVersion).c_str());
  report("conservation", conservation);
  report("dissipation", dissipation);
  report("restitution", restitution);
  report("neighbor-index exactness", neighbor_exactness);
  report("regime reproduction", regimes);
  report("elasticity transition", elasticity_transition);
  report("threshold-ratio transition", threshold_ratio_transition);
  report("threshold beats viscosity", dominance);
  report("(K, R_s) zone topology", zone_topology);
  report("Kelvin-Helmholtz onset", kelvin_helmholtz);
  report("throughput", throughput);
  report("determinism", determinism);
  report("replay determinism", replay_determinism);
  std::printf("%d failing\n", failures);
  return failures == 0 ? 0 : 1;
}
