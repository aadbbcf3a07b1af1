#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "mesop/scenarios.hpp"

namespace mesop {

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RegimeLabel { gas, granular, fluid_laminar, fluid_turbulent, paste, unclassified };

std::string to_string(RegimeLabel label);
RegimeLabel regime_label_from_string(const std::string& text);

// Horizontal axis is x, vertical is y. Only free particles above the ground
// count. The silhouette is the highest particle per bin (bins of bin_width
// centred on the middle of the occupied span); a least-squares line is fitted
// on each side of the apex and the mean absolute slope angle is returned.
// Throws MetricError with fewer than 10 particles or a single occupied bin.
double angle_of_repose(const Frame& frame, double ground_height, double bin_width);

// Silhouette height over occupied width.
double spread_ratio(const Frame& frame, double ground_height);

// Connected components of the free-particle contact graph.
std::pair<std::size_t, double> cluster_count(const Frame& frame, double contact_radius);

// Coefficient of variation of per-particle elastic load over free particles
// with at least one contact. Throws MetricError when none have contacts.
double stress_heterogeneity(const Frame& frame);

// RMS of the velocity component transverse to flow_axis over free particles.
double shear_rms(const Frame& frame, const Vec3& flow_axis);

double kinetic_energy_per_particle(const Frame& frame);

// Inputs of the decision table.
struct MetricVector {
  bool pile_defined = false;  // a ground exists and the angle was measurable
  double repose_angle_deg = 0.0;
  double spread_ratio = 0.0;
  std::size_t cluster_count = 0;
  double largest_cluster_fraction = 0.0;
  bool stress_defined = false;
  double stress_cv = 0.0;
  double shear_rms = 0.0;
  double kinetic_energy_per_particle = 0.0;
  // shear_rms now over shear_rms at the reference frame, when tracked
  std::optional<double> shear_growth;
  std::size_t free_particles = 0;
};

// Height/width of the heap relative to a triangular pile with the same base
// angle (1 for a clean triangle).
double mound_index(const MetricVector& metrics);
RegimeLabel classify(const MetricVector& metrics);

struct RegimeReport {
  MetricVector metrics;
  RegimeLabel label = RegimeLabel::unclassified;
};

// Computes every metric for a frame and classifies it. `shear_reference`
// is the shear_rms of an earlier frame of the same run.
RegimeReport analyze(const Frame& frame, const AnalysisHints& hints,
                     std::optional<double> shear_reference = std::nullopt);

// Fixed CSV layout, one row per frame.
std::string report_csv_header();
std::string report_csv_row(std::uint64_t step, double time, const RegimeReport& report);

}  // namespace mesop
