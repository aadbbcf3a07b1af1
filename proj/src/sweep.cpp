#include "mesop/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "mesop/calibration.hpp"
#include "mesop/config.hpp"
#include "mesop/frame_io.hpp"
#include "mesop/params.hpp"
#include "mesop/rng.hpp"
#include "mesop/version.hpp"

namespace mesop {

using nlohmann::json;

namespace {

constexpr std::uint64_t kShearReferenceStep = 100;

void check_axis(const SweepAxis& axis, const char* name) {
  if (axis.path.empty()) throw std::invalid_argument(std::string("sweep: ") + name + " has no path");
  if (axis.values.empty()) throw std::invalid_argument(std::string("sweep: ") + name + " has no values");
  for (double v : axis.values) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string("sweep: ") + name + " has a non-finite value");
  }
  const bool up = axis.values.size() < 2 || axis.values[1] > axis.values[0];
  for (std::size_t k = 1; k < axis.values.size(); ++k) {
    const bool ok = up ? axis.values[k] > axis.values[k - 1] : axis.values[k] < axis.values[k - 1];
    if (!ok) throw std::invalid_argument(std::string("sweep: ") + name + " values must be strictly monotone");
  }
}

json axis_json(const SweepAxis& a) { return json{{"path", a.path}, {"values", a.values}}; }

SweepAxis axis_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("path") || !j.contains("values") || !j["path"].is_string() ||
      !j["values"].is_array()) {
    throw ConfigError(where + ": expected {\"path\": string, \"values\": [numbers]}");
  }
  SweepAxis a;
  a.path = j["path"].get<std::string>();
  for (std::size_t k = 0; k < j["values"].size(); ++k) {
    if (!j["values"][k].is_number()) throw ConfigError(where + "/values/" + std::to_string(k) + ": expected a number");
    a.values.push_back(j["values"][k].get<double>());
  }
  return a;
}

std::string classifier_constants() {
  namespace c = calibration;
  std::string s;
  for (double v : {c::kGasMinKineticEnergy, c::kGasMaxClusterFraction, c::kTurbulentShearGrowth,
                   c::kSettledMaxKineticEnergy, c::kGranularMinRepose, c::kGranularMinStressCv,
                   c::kFluidMaxRepose, c::kFluidMaxSpread, c::kPasteMinClusterFraction, c::kPasteMinMoundIndex,
                   c::kSpreadBinWidth}) {
    s += format_double(v) + ";";
  }
  return s;
}

json metrics_json(const MetricVector& m) {
  json j{{"pile_defined", m.pile_defined},
         {"repose_angle_deg", m.repose_angle_deg},
         {"spread_ratio", m.spread_ratio},
         {"cluster_count", m.cluster_count},
         {"largest_cluster_fraction", m.largest_cluster_fraction},
         {"stress_defined", m.stress_defined},
         {"stress_cv", m.stress_cv},
         {"shear_rms", m.shear_rms},
         {"kinetic_energy_per_particle", m.kinetic_energy_per_particle},
         {"free_particles", m.free_particles}};
  j["shear_growth"] = m.shear_growth ? json(*m.shear_growth) : json(nullptr);
  return j;
}

MetricVector metrics_from_json(const json& j) {
  MetricVector m;
  m.pile_defined = j.at("pile_defined").get<bool>();
  m.repose_angle_deg = j.at("repose_angle_deg").get<double>();
  m.spread_ratio = j.at("spread_ratio").get<double>();
  m.cluster_count = j.at("cluster_count").get<std::size_t>();
  m.largest_cluster_fraction = j.at("largest_cluster_fraction").get<double>();
  m.stress_defined = j.at("stress_defined").get<bool>();
  m.stress_cv = j.at("stress_cv").get<double>();
  m.shear_rms = j.at("shear_rms").get<double>();
  m.kinetic_energy_per_particle = j.at("kinetic_energy_per_particle").get<double>();
  m.free_particles = j.at("free_particles").get<std::size_t>();
  if (!j.at("shear_growth").is_null()) m.shear_growth = j.at("shear_growth").get<double>();
  return m;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << v;
  return s.str();
}

}  // namespace

void SweepSpec::validate() const {
  check_axis(axis1, "axis1");
  if (axis2) check_axis(*axis2, "axis2");
  if (steps == 0) throw std::invalid_argument("sweep: steps must be > 0");
  Scenario s = load_scenario(base);
  try {
    get_param(s, axis1.path);
    if (axis2) get_param(s, axis2->path);
  } catch (const ParamError& e) {
    throw std::invalid_argument(std::string("sweep: ") + e.what());
  }
}

json sweep_spec_to_json(const SweepSpec& spec) {
  json j{{"base", spec.base}, {"axis1", axis_json(spec.axis1)}, {"steps", spec.steps}, {"seed", spec.seed}};
  if (spec.axis2) j["axis2"] = axis_json(*spec.axis2);
  return j;
}

SweepSpec sweep_spec_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("/: expected an object");
  for (const auto& [key, v] : j.items()) {
    if (key != "base" && key != "axis1" && key != "axis2" && key != "steps" && key != "seed") {
      throw ConfigError("/" + key + ": unknown key");
    }
  }
  if (!j.contains("base") || !j["base"].is_string()) throw ConfigError("/base: expected a string");
  if (!j.contains("axis1")) throw ConfigError("/: missing key 'axis1'");
  SweepSpec s;
  s.base = j["base"].get<std::string>();
  s.axis1 = axis_from_json(j["axis1"], "/axis1");
  if (j.contains("axis2")) s.axis2 = axis_from_json(j["axis2"], "/axis2");
  if (j.contains("steps")) {
    if (!j["steps"].is_number_unsigned()) throw ConfigError("/steps: expected a non-negative integer");
    s.steps = j["steps"].get<std::uint64_t>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("/seed: expected a non-negative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  return s;
}

std::uint64_t cell_seed(std::uint64_t seed, std::size_t i, std::size_t j) {
  return mix_seed(mix_seed(seed, i), j);
}

std::uint64_t constants_hash(const Scenario& base) {
  return fnv1a(classifier_constants(), fnv1a(dump_scenario(base)));
}

std::uint64_t cell_key(const SweepSpec& spec, const Provenance& provenance, std::size_t i, std::size_t j) {
  std::string text = std::string(provenance.engine_version) + "|" + std::to_string(provenance.constants_hash) + "|" +
                     spec.axis1.path + "=" + format_double(spec.axis1.values.at(i));
  if (spec.axis2) text += "|" + spec.axis2->path + "=" + format_double(spec.axis2->values.at(j));
  text += "|steps=" + std::to_string(spec.steps) + "|seed=" + std::to_string(cell_seed(spec.seed, i, j));
  return fnv1a(text);
}

RegimeReport run_and_classify(const Scenario& scenario, std::uint64_t steps, unsigned threads) {
  Simulation sim(scenario, threads);
  std::optional<double> reference;
  if (steps > kShearReferenceStep) {
    sim.advance(kShearReferenceStep);
    reference = analyze(sim.frame(), scenario.analysis).metrics.shear_rms;
    sim.advance(steps - kShearReferenceStep);
  } else {
    sim.advance(steps);
  }
  return analyze(sim.frame(), scenario.analysis, reference);
}

Scenario cell_scenario(const SweepSpec& spec, const Scenario& base, std::size_t i, std::size_t j) {
  Scenario s = base;
  s.tags.clear();
  set_param(s, spec.axis1.path, spec.axis1.values.at(i));
  if (spec.axis2) set_param(s, spec.axis2->path, spec.axis2->values.at(j));
  s.rng_seed = cell_seed(spec.seed, i, j);
  s.validate();
  return s;
}

SweepCell run_cell(const SweepSpec& spec, const Scenario& base, std::size_t i, std::size_t j) {
  SweepCell cell;
  cell.i = i;
  cell.j = j;
  cell.value1 = spec.axis1.values.at(i);
  cell.value2 = spec.axis2 ? spec.axis2->values.at(j) : 0.0;
  cell.seed = cell_seed(spec.seed, i, j);
  try {
    cell.report = run_and_classify(cell_scenario(spec, base, i, j), spec.steps);
  } catch (const DivergenceError& e) {
    cell.failed = true;
    cell.error = std::string("divergence: ") + e.what();
  } catch (const std::invalid_argument& e) {
    cell.failed = true;
    cell.error = std::string("invalid cell: ") + e.what();
  }
  if (cell.failed) cell.report = RegimeReport{};
  return cell;
}

unsigned default_worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("MESOP_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(cap, &end, 10);
    if (end != cap && *end == '\0' && v > 0) n = std::min<unsigned>(n, static_cast<unsigned>(v));
  }
  return n;
}

BehaviorMap run_sweep(const SweepSpec& spec, const SweepOptions& options) {
  spec.validate();
  const Scenario base = load_scenario(spec.base);
  BehaviorMap map;
  map.spec = spec;
  map.provenance = Provenance{std::string(kEngineVersion), spec.seed, constants_hash(base)};
  const std::size_t rows = spec.rows(), cols = spec.cols(), total = rows * cols;
  map.cells.resize(total);

  std::vector<bool> done(total, false);
  for (const SweepCell& c : options.completed) {
    if (c.i < rows && c.j < cols) {
      map.cells[c.i * cols + c.j] = c;
      done[c.i * cols + c.j] = true;
    }
  }
  std::vector<std::size_t> todo;
  for (std::size_t k = 0; k < total; ++k) {
    if (!done[k]) todo.push_back(k);
  }

  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(options.threads ? options.threads : default_worker_count(), std::max<std::size_t>(1, todo.size())));
  std::atomic<std::size_t> next{0};
  std::mutex report_mutex;
  auto work = [&] {
    for (std::size_t n = next++; n < todo.size(); n = next++) {
      const std::size_t k = todo[n];
      SweepCell cell = run_cell(spec, base, k / cols, k % cols);
      std::lock_guard lock(report_mutex);
      map.cells[k] = cell;
      if (options.on_cell) options.on_cell(cell);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return map;
}

std::string behavior_map_csv(const BehaviorMap& map) {
  const SweepSpec& spec = map.spec;
  std::string out;
  out += "# engine=" + map.provenance.engine_version + "\n";
  out += "# seed=" + std::to_string(map.provenance.seed) + "\n";
  out += "# constants_hash=" + hex64(map.provenance.constants_hash) + "\n";
  out += "# base=" + spec.base + " steps=" + std::to_string(spec.steps) + "\n";
  out += "# axis1=" + spec.axis1.path + (spec.axis2 ? " axis2=" + spec.axis2->path : std::string()) + "\n";
  out += "# axis ranges are calibration choices, not published values\n";
  out += "axis1,axis2,i,j,seed,status,repose_angle_deg,spread_ratio,cluster_count,largest_cluster_fraction,"
         "stress_cv,shear_rms,kinetic_energy_per_particle,shear_growth,label\n";
  for (const SweepCell& c : map.cells) {
    const std::string row = report_csv_row(0, 0.0, c.report);
    // drop the leading "step,time," columns of the per-frame layout
    const std::string metrics = row.substr(row.find(',', row.find(',') + 1) + 1);
    out += format_double(c.value1) + "," + (spec.axis2 ? format_double(c.value2) : std::string()) + "," +
           std::to_string(c.i) + "," + std::to_string(c.j) + "," + std::to_string(c.seed) + "," +
           (c.failed ? "failed" : "ok") + "," + metrics + "\n";
  }
  return out;
}

std::uint32_t label_color(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::gas: return 0x9ECAE1;
    case RegimeLabel::granular: return 0xE6AB02;
    case RegimeLabel::fluid_laminar: return 0x1F78B4;
    case RegimeLabel::fluid_turbulent: return 0x6A3D9A;
    case RegimeLabel::paste: return 0xB15928;
    case RegimeLabel::unclassified: return 0x808080;
  }
  return 0x808080;
}

std::string behavior_map_ppm(const BehaviorMap& map, int cell_pixels) {
  if (cell_pixels <= 0) throw std::invalid_argument("ppm: cell size must be positive");
  const std::size_t rows = map.spec.rows(), cols = map.spec.cols();
  const int width = static_cast<int>(rows) * cell_pixels, height = static_cast<int>(cols) * cell_pixels;
  std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  for (int y = 0; y < height; ++y) {
    const std::size_t j = cols - 1 - static_cast<std::size_t>(y / cell_pixels);
    for (int x = 0; x < width; ++x) {
      const SweepCell& c = map.cell(static_cast<std::size_t>(x / cell_pixels), j);
      const std::uint32_t rgb = c.failed ? kFailedCellColor : label_color(c.report.label);
      out += static_cast<char>((rgb >> 16) & 0xFF);
      out += static_cast<char>((rgb >> 8) & 0xFF);
      out += static_cast<char>(rgb & 0xFF);
    }
  }
  return out;
}

json cell_to_json(const SweepCell& c) {
  return json{{"i", c.i},           {"j", c.j},         {"value1", c.value1},
              {"value2", c.value2}, {"seed", c.seed},   {"failed", c.failed},
              {"error", c.error},   {"label", to_string(c.report.label)},
              {"metrics", metrics_json(c.report.metrics)}};
}

SweepCell cell_from_json(const json& j) {
  SweepCell c;
  c.i = j.at("i").get<std::size_t>();
  c.j = j.at("j").get<std::size_t>();
  c.value1 = j.at("value1").get<double>();
  c.value2 = j.at("value2").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.failed = j.at("failed").get<bool>();
  c.error = j.at("error").get<std::string>();
  c.report.label = regime_label_from_string(j.at("label").get<std::string>());
  c.report.metrics = metrics_from_json(j.at("metrics"));
  return c;
}

}  // namespace mesop
