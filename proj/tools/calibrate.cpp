// Pilot-run driver used to freeze the preset and classifier constants.
// Prints the metric vector of a preset at a fixed cadence.
#include <chrono>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "mesop/metrics.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mesop pilot-run driver"};
  std::string name = "granular_pile";
  std::uint64_t steps = 10000;
  std::uint64_t every = 1000;
  double gK = -1, gD0 = -1, K = -1, Z = -1, De = -1, Dv = -1, D0 = -1, ambient = -1;
  int dim = 2;
  std::uint64_t seed = 0;
  std::string dump;
  app.add_option("preset", name);
  app.add_option("--steps", steps);
  app.add_option("--every", every);
  app.add_option("--K", K);
  app.add_option("--gK", gK);
  app.add_option("--gD0", gD0);
  app.add_option("--Z", Z);
  app.add_option("--De", De);
  app.add_option("--Dv", Dv);
  app.add_option("--D0", D0);
  app.add_option("--ambient", ambient);
  app.add_option("--dim", dim);
  app.add_option("--seed", seed);
  app.add_option("--dump", dump);
  CLI11_PARSE(app, argc, argv);

  mesop::PresetOptions opt;
  opt.dim = dim;
  mesop::Scenario sc = mesop::preset(name, opt);
  auto& law = sc.materials[0].law;
  if (K >= 0) law.K = K;
  if (Z >= 0) law.Z = Z;
  if (De > 0) law.De = De;
  if (Dv > 0) law.Dv = Dv;
  if (D0 >= 0) law.D0 = D0;
  if (sc.materials.size() > 1) {
    mesop::MaterialLaw g = sc.pair_rules.resolve(sc.materials, 0, 1);
    if (gK >= 0) g.K = gK;
    if (gD0 >= 0) g.D0 = gD0;
    sc.pair_rules.set(0, 1, g);
  }
  if (ambient >= 0) sc.ambient_viscosity = ambient;
  sc.tags.clear();
  sc.rng_seed = seed;
  mesop::Simulation sim(sc);
  std::optional<double> shear_ref;
  const auto t0 = std::chrono::steady_clock::now();
  std::printf("%s\n", mesop::report_csv_header().c_str());
  for (std::uint64_t s = 0; s <= steps; s += every) {
    if (s > 0) sim.advance(every);
    auto frame = sim.frame();
    auto report = mesop::analyze(frame, sc.analysis, shear_ref);
    if (s == 100 || (!shear_ref && s >= 100)) shear_ref = report.metrics.shear_rms;
    std::printf("%s n=%zu\n", mesop::report_csv_row(frame.step, frame.time, report).c_str(),
                report.metrics.free_particles);
  }
  if (!dump.empty()) {
    FILE* f = std::fopen(dump.c_str(), "w");
    for (const auto& p : sim.state().particles) {
      std::fprintf(f, "%g,%g,%g,%g,%d\n", p.position.x, p.position.y, p.velocity.x, p.velocity.y,
                   p.is_free() ? 0 : 1);
    }
    std::fclose(f);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("elapsed %.2fs\n", secs);
}
