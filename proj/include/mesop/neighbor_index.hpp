#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "mesop/vec.hpp"

namespace mesop {

// One pair emitted by NeighborIndex::pairs_within. unit_ji points from j to i
// and is the zero vector when the two centres coincide.
struct PairHit {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double distance = 0.0;
  Vec3 unit_ji;
};

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Uniform grid over the positions it was built from. Cells are cubes (squares
// in 2D) of side cell_size; every particle lives in exactly one cell and each
// cell lists its particles in ascending index order. A dense table is used when
// the occupied bounding box is compact, a sparse hash otherwise.
class NeighborIndex {
 public:
  NeighborIndex() = default;

  // Throws std::invalid_argument for cell_size <= 0 or a non-finite position.
  static NeighborIndex build(std::span<const Vec3> positions, double cell_size, int dim);

  // Rebuild in place, reusing allocations.
  void rebuild(std::span<const Vec3> positions, double cell_size, int dim);

  // All pairs i < j with distance <= radius, in lexicographic (i, j) order.
  // Throws ContractViolation when radius > cell_size.
  std::vector<PairHit> pairs_within(double radius) const;
  void pairs_within(double radius, std::vector<PairHit>& out) const;

  // Particle indices sharing the cell of a given coordinate (testing aid).
  std::span<const std::uint32_t> cell_members(const Vec3& point) const;

  double cell_size() const { return cell_size_; }
  int dim() const { return dim_; }
  std::size_t size() const { return positions_.size(); }
  std::size_t occupied_cells() const;
  std::span<const Vec3> positions() const { return positions_; }

 private:
  struct CellCoord {
    std::int64_t c[3] = {0, 0, 0};
  };

  CellCoord coord_of(const Vec3& p) const;
  // Returns [begin, end) into sorted_ for a cell, empty when unoccupied.
  std::pair<std::uint32_t, std::uint32_t> range_of(const CellCoord& cell) const;
  static std::uint64_t pack(const CellCoord& cell);

  double cell_size_ = 1.0;
  double inv_cell_ = 1.0;
  int dim_ = 2;
  std::vector<Vec3> positions_;
  std::vector<CellCoord> cell_of_;
  std::vector<std::uint32_t> sorted_;  // particle indices grouped by cell

  // dense layout
  bool dense_ = true;
  CellCoord lo_;
  std::int64_t extent_[3] = {1, 1, 1};
  std::vector<std::uint32_t> cell_start_;  // size cells + 1

  // sparse layout
  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> sparse_;
};

}  // namespace mesop
