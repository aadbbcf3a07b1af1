#include "mesop/neighbor_index.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mesop {

namespace {

constexpr double kMaxCellCoord = 4.0e15;  // keeps floor() exact in int64
constexpr std::uint64_t kAxisMask = (std::uint64_t{1} << 21) - 1;

}  // namespace

NeighborIndex NeighborIndex::build(std::span<const Vec3> positions, double cell_size, int dim) {
  NeighborIndex index;
  index.rebuild(positions, cell_size, dim);
  return index;
}

std::uint64_t NeighborIndex::pack(const CellCoord& cell) {
  // Wraps each axis to 21 bits. Distant cells may share a key; they only cost
  // extra distance checks, while the 3^dim neighbourhood never aliases.
  return (static_cast<std::uint64_t>(cell.c[0]) & kAxisMask) |
         ((static_cast<std::uint64_t>(cell.c[1]) & kAxisMask) << 21) |
         ((static_cast<std::uint64_t>(cell.c[2]) & kAxisMask) << 42);
}

NeighborIndex::CellCoord NeighborIndex::coord_of(const Vec3& p) const {
  CellCoord cell;
  for (int a = 0; a < dim_; ++a) {
    cell.c[a] = static_cast<std::int64_t>(std::floor(p[a] * inv_cell_));
  }
  return cell;
}

void NeighborIndex::rebuild(std::span<const Vec3> positions, double cell_size, int dim) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw std::invalid_argument("NeighborIndex: cell_size must be finite and > 0");
  }
  if (dim != 2 && dim != 3) throw std::invalid_argument("NeighborIndex: dim must be 2 or 3");
  cell_size_ = cell_size;
  inv_cell_ = 1.0 / cell_size;
  dim_ = dim;
  positions_.assign(positions.begin(), positions.end());
  const std::size_t n = positions_.size();
  cell_of_.resize(n);
  sorted_.resize(n);
  sparse_.clear();
  cell_start_.clear();

  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& p = positions_[i];
    if (!is_finite(p)) {
      throw std::invalid_argument("NeighborIndex: non-finite position at index " +
                                  std::to_string(i));
    }
    for (int a = 0; a < dim_; ++a) {
      if (std::abs(p[a] * inv_cell_) > kMaxCellCoord) {
        throw std::invalid_argument("NeighborIndex: position out of range at index " +
                                    std::to_string(i));
      }
    }
    cell_of_[i] = coord_of(p);
  }

  lo_ = CellCoord{};
  CellCoord hi{};
  if (n > 0) {
    lo_ = hi = cell_of_[0];
    for (const CellCoord& c : cell_of_) {
      for (int a = 0; a < dim_; ++a) {
        lo_.c[a] = std::min(lo_.c[a], c.c[a]);
        hi.c[a] = std::max(hi.c[a], c.c[a]);
      }
    }
  }
  const double budget = 4.0 * static_cast<double>(n) + 64.0;
  double cells = 1.0;
  for (int a = 0; a < 3; ++a) {
    extent_[a] = a < dim_ ? hi.c[a] - lo_.c[a] + 1 : 1;
    cells *= static_cast<double>(extent_[a]);
  }
  dense_ = cells <= budget;

  if (dense_) {
    const auto total = static_cast<std::size_t>(cells);
    cell_start_.assign(total + 1, 0);
    auto flat = [&](const CellCoord& c) {
      return static_cast<std::size_t>(((c.c[2] - lo_.c[2]) * extent_[1] + (c.c[1] - lo_.c[1])) *
                                          extent_[0] +
                                      (c.c[0] - lo_.c[0]));
    };
    for (std::size_t i = 0; i < n; ++i) ++cell_start_[flat(cell_of_[i]) + 1];
    for (std::size_t k = 0; k < total; ++k) cell_start_[k + 1] += cell_start_[k];
    std::vector<std::uint32_t> cursor(cell_start_.begin(), cell_start_.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
      sorted_[cursor[flat(cell_of_[i])]++] = static_cast<std::uint32_t>(i);
    }
    return;
  }

  std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed(n);
  for (std::size_t i = 0; i < n; ++i) keyed[i] = {pack(cell_of_[i]), static_cast<std::uint32_t>(i)};
  std::sort(keyed.begin(), keyed.end());
  sparse_.reserve(n);
  std::size_t begin = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sorted_[k] = keyed[k].second;
    if (k + 1 == n || keyed[k + 1].first != keyed[k].first) {
      sparse_.emplace(keyed[k].first, std::pair<std::uint32_t, std::uint32_t>(
                                          static_cast<std::uint32_t>(begin),
                                          static_cast<std::uint32_t>(k + 1)));
      begin = k + 1;
    }
  }
}

std::pair<std::uint32_t, std::uint32_t> NeighborIndex::range_of(const CellCoord& cell) const {
  if (dense_) {
    std::int64_t flat = 0;
    for (int a = 2; a >= 0; --a) {
      const std::int64_t off = cell.c[a] - lo_.c[a];
      if (off < 0 || off >= extent_[a]) return {0, 0};
      flat = flat * extent_[a] + off;
    }
    if (cell_start_.empty()) return {0, 0};
    const auto k = static_cast<std::size_t>(flat);
    return {cell_start_[k], cell_start_[k + 1]};
  }
  const auto it = sparse_.find(pack(cell));
  if (it == sparse_.end()) return {0, 0};
  return it->second;
}

std::span<const std::uint32_t> NeighborIndex::cell_members(const Vec3& point) const {
  const auto [b, e] = range_of(coord_of(point));
  return std::span<const std::uint32_t>(sorted_).subspan(b, e - b);
}

std::size_t NeighborIndex::occupied_cells() const {
  if (!dense_) return sparse_.size();
  std::size_t count = 0;
  for (std::size_t k = 0; k + 1 < cell_start_.size(); ++k) {
    if (cell_start_[k + 1] > cell_start_[k]) ++count;
  }
  return count;
}

std::vector<PairHit> NeighborIndex::pairs_within(double radius) const {
  std::vector<PairHit> out;
  pairs_within(radius, out);
  return out;
}

void NeighborIndex::pairs_within(double radius, std::vector<PairHit>& out) const {
  if (!(radius <= cell_size_)) {
    throw ContractViolation("NeighborIndex::pairs_within: radius exceeds cell size");
  }
  out.clear();
  const std::size_t n = positions_.size();
  const int reach_z = dim_ == 3 ? 1 : 0;
  const double r2_guard = radius * radius * (1.0 + 1e-12);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& xi = positions_[i];
    const CellCoord& home = cell_of_[i];
    const std::size_t first = out.size();
    CellCoord probe;
    for (std::int64_t dz = -reach_z; dz <= reach_z; ++dz) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          probe.c[0] = home.c[0] + dx;
          probe.c[1] = home.c[1] + dy;
          probe.c[2] = home.c[2] + dz;
          const auto [b, e] = range_of(probe);
          for (std::uint32_t k = b; k < e; ++k) {
            const std::uint32_t j = sorted_[k];
            if (j <= i) continue;
            const Vec3 sep = xi - positions_[j];
            const double d2 = norm2(sep);
            if (d2 > r2_guard) continue;
            const double d = std::sqrt(d2);
            if (d > radius) continue;
            PairHit hit;
            hit.i = static_cast<std::uint32_t>(i);
            hit.j = j;
            hit.distance = d;
            hit.unit_ji = d > 0.0 ? sep * (1.0 / d) : Vec3{};
            out.push_back(hit);
          }
        }
      }
    }
    std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
              [](const PairHit& a, const PairHit& b) { return a.j < b.j; });
  }
}

}  // namespace mesop
