#include "mesop/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <vector>

#include "mesop/calibration.hpp"
#include "mesop/frame_io.hpp"
#include "mesop/neighbor_index.hpp"

namespace mesop {

namespace {

struct Silhouette {
  // contiguous run of occupied bins around the apex: (bin centre, height)
  std::vector<std::pair<double, double>> bins;
  std::size_t apex = 0;
  std::size_t total_particles = 0;
};

Silhouette silhouette(const Frame& frame, double ground_height, double bin_width) {
  if (!(bin_width > 0.0)) throw MetricError("silhouette: bin width must be > 0");
  std::vector<std::pair<double, double>> pts;
  for (const Particle& p : frame.particles) {
    if (!p.is_free() || !(p.position.y > ground_height)) continue;
    pts.emplace_back(p.position.x, p.position.y - ground_height);
  }
  Silhouette s;
  s.total_particles = pts.size();
  if (pts.empty()) return s;
  double lo = pts.front().first;
  double hi = lo;
  for (const auto& [x, h] : pts) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double centre = 0.5 * (lo + hi);
  std::map<long long, double> top;
  for (const auto& [x, h] : pts) {
    const auto b = static_cast<long long>(std::floor((x - centre) / bin_width + 0.5));
    auto [it, inserted] = top.emplace(b, h);
    if (!inserted) it->second = std::max(it->second, h);
  }
  // apex: highest bin, ties resolved towards the centre, then lower index
  auto apex = top.begin();
  for (auto it = top.begin(); it != top.end(); ++it) {
    if (it->second > apex->second ||
        (it->second == apex->second && std::llabs(it->first) < std::llabs(apex->first))) {
      apex = it;
    }
  }
  // extend left and right while gaps stay within one empty bin
  auto first = apex;
  while (first != top.begin()) {
    auto prev = std::prev(first);
    if (first->first - prev->first > 2) break;
    first = prev;
  }
  auto last = apex;
  for (auto next = std::next(last); next != top.end() && next->first - last->first <= 2;
       next = std::next(last)) {
    last = next;
  }
  for (auto it = first;; ++it) {
    if (it == apex) s.apex = s.bins.size();
    s.bins.emplace_back(centre + static_cast<double>(it->first) * bin_width, it->second);
    if (it == last) break;
  }
  return s;
}

double fitted_slope(std::span<const std::pair<double, double>> pts) {
  const double n = static_cast<double>(pts.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b] || (size_[a] == size_[b] && b < a)) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }
  std::size_t size_of(std::size_t x) { return size_[find(x)]; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

}  // namespace

std::string to_string(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::gas: return "gas";
    case RegimeLabel::granular: return "granular";
    case RegimeLabel::fluid_laminar: return "fluid_laminar";
    case RegimeLabel::fluid_turbulent: return "fluid_turbulent";
    case RegimeLabel::paste: return "paste";
    case RegimeLabel::unclassified: return "unclassified";
  }
  return "unclassified";
}

RegimeLabel regime_label_from_string(const std::string& text) {
  for (RegimeLabel l : {RegimeLabel::gas, RegimeLabel::granular, RegimeLabel::fluid_laminar,
                        RegimeLabel::fluid_turbulent, RegimeLabel::paste, RegimeLabel::unclassified}) {
    if (to_string(l) == text) return l;
  }
  throw std::invalid_argument("unknown regime label '" + text + "'");
}

double angle_of_repose(const Frame& frame, double ground_height, double bin_width) {
  const Silhouette s = silhouette(frame, ground_height, bin_width);
  if (s.total_particles < 10) throw MetricError("angle_of_repose: fewer than 10 particles above ground");
  if (s.bins.size() < 2) throw MetricError("angle_of_repose: all particles fall in one bin");
  const std::span<const std::pair<double, double>> bins(s.bins);
  double sum = 0.0;
  int sides = 0;
  if (s.apex >= 1) {
    sum += std::atan(std::abs(fitted_slope(bins.first(s.apex + 1))));
    ++sides;
  }
  if (s.apex + 1 < bins.size()) {
    sum += std::atan(std::abs(fitted_slope(bins.subspan(s.apex))));
    ++sides;
  }
  return sum / sides * 180.0 / std::numbers::pi;
}

double spread_ratio(const Frame& frame, double ground_height) {
  const Silhouette s = silhouette(frame, ground_height, calibration::kSpreadBinWidth);
  if (s.bins.empty()) return 0.0;
  const double width = (s.bins.back().first - s.bins.front().first) + calibration::kSpreadBinWidth;
  return s.bins[s.apex].second / width;
}

std::pair<std::size_t, double> cluster_count(const Frame& frame, double contact_radius) {
  if (!(contact_radius > 0.0)) throw std::invalid_argument("cluster_count: contact_radius must be > 0");
  std::vector<Vec3> positions;
  for (const Particle& p : frame.particles) {
    if (p.is_free()) positions.push_back(p.position);
  }
  const std::size_t n = positions.size();
  if (n == 0) return {0, 0.0};
  const NeighborIndex index = NeighborIndex::build(positions, contact_radius, frame.dim);
  DisjointSets sets(n);
  for (const PairHit& h : index.pairs_within(contact_radius)) sets.unite(h.i, h.j);
  std::size_t count = 0;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (sets.find(i) == i) {
      ++count;
      largest = std::max(largest, sets.size_of(i));
    }
  }
  return {count, static_cast<double>(largest) / static_cast<double>(n)};
}

double stress_heterogeneity(const Frame& frame) {
  if (frame.contacts.size() != frame.particles.size()) {
    throw MetricError("stress_heterogeneity: frame has no contact statistics");
  }
  std::vector<double> loads;
  for (std::size_t i = 0; i < frame.particles.size(); ++i) {
    if (frame.particles[i].is_free() && frame.contacts[i].elastic_contacts > 0) {
      loads.push_back(frame.contacts[i].elastic_load);
    }
  }
  if (loads.empty()) throw MetricError("stress_heterogeneity: no particle has elastic contacts");
  const double mean = std::accumulate(loads.begin(), loads.end(), 0.0) / loads.size();
  if (mean <= 0.0) return 0.0;
  double var = 0.0;
  for (double l : loads) var += (l - mean) * (l - mean);
  var /= static_cast<double>(loads.size());
  return std::sqrt(var) / mean;
}

double shear_rms(const Frame& frame, const Vec3& flow_axis) {
  const double len = norm(flow_axis);
  if (!(len > 0.0)) throw std::invalid_argument("shear_rms: flow axis must be non-zero");
  const Vec3 axis = flow_axis * (1.0 / len);
  double sum = 0.0;
  std::size_t n = 0;
  for (const Particle& p : frame.particles) {
    if (!p.is_free()) continue;
    const Vec3 transverse = p.velocity - axis * dot(p.velocity, axis);
    sum += norm2(transverse);
    ++n;
  }
  return n == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(n));
}

double kinetic_energy_per_particle(const Frame& frame) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const Particle& p : frame.particles) {
    if (!p.is_free()) continue;
    sum += 0.5 * p.mass * norm2(p.velocity);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double mound_index(const MetricVector& m) {
  // A triangular pile with base angle a has height/width = tan(a)/2, so its
  // index is 1. Rounded heaps that have not spread out score well above 1.
  const double t = std::tan(m.repose_angle_deg * std::numbers::pi / 180.0);
  if (t <= 0.0) return std::numeric_limits<double>::infinity();
  return m.spread_ratio / (0.5 * t);
}

RegimeLabel classify(const MetricVector& m) {
  namespace c = calibration;
  if (m.free_particles == 0) return RegimeLabel::unclassified;

  const bool energetic = m.kinetic_energy_per_particle >= c::kGasMinKineticEnergy;
  const bool dispersed = m.largest_cluster_fraction <= c::kGasMaxClusterFraction;
  if (energetic && dispersed) return RegimeLabel::gas;
  if (m.shear_growth && *m.shear_growth >= c::kTurbulentShearGrowth && !m.pile_defined) {
    return RegimeLabel::fluid_turbulent;
  }
  if (!m.pile_defined) return RegimeLabel::unclassified;
  if (m.kinetic_energy_per_particle > c::kSettledMaxKineticEnergy) return RegimeLabel::unclassified;

  const bool steep = m.repose_angle_deg >= c::kGranularMinRepose;
  const bool flat = m.repose_angle_deg < c::kFluidMaxRepose;
  const bool cohesive = m.largest_cluster_fraction >= c::kPasteMinClusterFraction;
  const bool heterogeneous = m.stress_defined && m.stress_cv >= c::kGranularMinStressCv;
  const bool mound = !flat && mound_index(m) >= c::kPasteMinMoundIndex;

  if (steep && heterogeneous && !mound) return RegimeLabel::granular;
  if (flat && m.spread_ratio <= c::kFluidMaxSpread) return RegimeLabel::fluid_laminar;
  if (cohesive && mound) return RegimeLabel::paste;
  return RegimeLabel::unclassified;
}

RegimeReport analyze(const Frame& frame, const AnalysisHints& hints,
                     std::optional<double> shear_reference) {
  RegimeReport r;
  MetricVector& m = r.metrics;
  m.free_particles = static_cast<std::size_t>(std::count_if(
      frame.particles.begin(), frame.particles.end(), [](const Particle& p) { return p.is_free(); }));
  if (!std::isnan(hints.ground_height)) {
    try {
      m.repose_angle_deg = angle_of_repose(frame, hints.ground_height, hints.bin_width);
      m.spread_ratio = spread_ratio(frame, hints.ground_height);
      m.pile_defined = true;
    } catch (const MetricError&) {
      m.pile_defined = false;
    }
  }
  std::tie(m.cluster_count, m.largest_cluster_fraction) = cluster_count(frame, hints.contact_radius);
  if (!frame.contacts.empty()) {
    try {
      m.stress_cv = stress_heterogeneity(frame);
      m.stress_defined = true;
    } catch (const MetricError&) {
      m.stress_defined = false;
    }
  }
  m.shear_rms = shear_rms(frame, hints.flow_axis);
  m.kinetic_energy_per_particle = kinetic_energy_per_particle(frame);
  if (shear_reference && *shear_reference > 0.0) m.shear_growth = m.shear_rms / *shear_reference;
  r.label = classify(m);
  return r;
}

std::string report_csv_header() {
  return "step,time,repose_angle_deg,spread_ratio,cluster_count,largest_cluster_fraction,"
         "stress_cv,shear_rms,kinetic_energy_per_particle,shear_growth,label";
}

std::string report_csv_row(std::uint64_t step, double time, const RegimeReport& report) {
  const MetricVector& m = report.metrics;
  std::string row = std::to_string(step);
  for (double v : {time, m.repose_angle_deg, m.spread_ratio}) row += "," + format_double(v);
  row += "," + std::to_string(m.cluster_count);
  for (double v : {m.largest_cluster_fraction, m.stress_cv, m.shear_rms, m.kinetic_energy_per_particle,
                   m.shear_growth.value_or(0.0)}) {
    row += "," + format_double(v);
  }
  return row + "," + to_string(report.label);
}

}  // namespace mesop
