#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mesop/metrics.hpp"

namespace mesop {

struct SweepAxis {
  std::string path;  // see params.hpp
  std::vector<double> values;

  friend bool operator==(const SweepAxis&, const SweepAxis&) = default;
};

struct SweepSpec {
  std::string base;  // "preset:<name>" or a scenario file
  SweepAxis axis1;
  std::optional<SweepAxis> axis2;
  std::uint64_t steps = 10000;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument: empty or non-strictly-monotone value list,
  // zero steps, or a path the base scenario does not have.
  void validate() const;
  std::size_t rows() const { return axis1.values.size(); }
  std::size_t cols() const { return axis2 ? axis2->values.size() : 1; }

  friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

nlohmann::json sweep_spec_to_json(const SweepSpec& spec);
// Throws ConfigError naming the offending field.
SweepSpec sweep_spec_from_json(const nlohmann::json& document);

struct SweepCell {
  std::size_t i = 0;  // index along axis1
  std::size_t j = 0;  // index along axis2 (0 without one)
  double value1 = 0.0;
  double value2 = 0.0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  RegimeReport report;

  friend bool operator==(const SweepCell& a, const SweepCell& b) {
    return a.i == b.i && a.j == b.j && a.value1 == b.value1 && a.value2 == b.value2 && a.seed == b.seed &&
           a.failed == b.failed && a.error == b.error && a.report.label == b.report.label &&
           report_csv_row(0, 0.0, a.report) == report_csv_row(0, 0.0, b.report);
  }
};

struct Provenance {
  std::string engine_version;
  std::uint64_t seed = 0;
  std::uint64_t constants_hash = 0;  // base scenario + classifier constants
};

struct BehaviorMap {
  SweepSpec spec;
  Provenance provenance;
  std::vector<SweepCell> cells;  // row-major: index i * cols + j

  const SweepCell& cell(std::size_t i, std::size_t j = 0) const { return cells.at(i * spec.cols() + j); }
  RegimeLabel label(std::size_t i, std::size_t j = 0) const { return cell(i, j).report.label; }
};

// Seed of one cell: a hash of the sweep seed and the cell coordinates.
std::uint64_t cell_seed(std::uint64_t seed, std::size_t i, std::size_t j);

// Hash of the base scenario document and the classifier constants.
std::uint64_t constants_hash(const Scenario& base);

// Key identifying a completed cell for resumption: changes whenever anything
// that influences the cell's result changes.
std::uint64_t cell_key(const SweepSpec& spec, const Provenance& provenance, std::size_t i, std::size_t j);

// Runs a scenario for `steps` steps and classifies the final frame. The
// shear growth is taken against the frame at step 100 when steps > 100.
RegimeReport run_and_classify(const Scenario& scenario, std::uint64_t steps, unsigned threads = 1);

// The scenario a cell runs: base with both axis values applied, the cell
// seed set and interaction-preset tags dropped (an edited law is no longer
// the named preset).
Scenario cell_scenario(const SweepSpec& spec, const Scenario& base, std::size_t i, std::size_t j);

// Runs one cell; divergence or an invalid parameter value is recorded as a
// failed cell.
SweepCell run_cell(const SweepSpec& spec, const Scenario& base, std::size_t i, std::size_t j);

struct SweepOptions {
  unsigned threads = 0;  // 0: hardware concurrency capped by MESOP_THREADS
  // Cells already computed (e.g. by an interrupted run); used verbatim.
  std::vector<SweepCell> completed;
  // Called once per newly computed cell, serialised by the runner.
  std::function<void(const SweepCell&)> on_cell;
};

BehaviorMap run_sweep(const SweepSpec& spec, const SweepOptions& options = {});

// Worker count from the hardware and the MESOP_THREADS cap.
unsigned default_worker_count();

// Long-form CSV: provenance comment lines, a header, one row per cell.
std::string behavior_map_csv(const BehaviorMap& map);

// Fixed label colours (0xRRGGBB); failed cells are black.
std::uint32_t label_color(RegimeLabel label);
inline constexpr std::uint32_t kFailedCellColor = 0x000000;

// Binary PPM, `cell_pixels` square per cell; axis1 grows to the right and
// axis2 grows upward.
std::string behavior_map_ppm(const BehaviorMap& map, int cell_pixels = 16);

nlohmann::json cell_to_json(const SweepCell& cell);
SweepCell cell_from_json(const nlohmann::json& document);

}  // namespace mesop
