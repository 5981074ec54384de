#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "asta3d/point_cloud.hpp"

namespace asta3d {

inline constexpr std::size_t kNeighborSlots = 8;

struct NeighborSlot {
  std::size_t index = 0;
  Vec3 position;
  int timestamp = 0;
};

/// Up to eight neighbors of one anchor. When 0 < valid_count < 8 the trailing
/// slots repeat the first valid slot; valid_count == 0 marks an empty anchor.
struct NeighborGroup {
  std::array<NeighborSlot, kNeighborSlots> slots{};
  std::size_t valid_count = 0;
};

/// Query radius indexed by frame interval |t - t_anchor|.
using RadiusTable = std::span<const double>;

/// Naive ball query: scans candidates in ascending index and keeps the first
/// eight with ||x - anchor|| < radius[|dt|] (strict).
NeighborGroup radius_query(const Vec3& anchor, int anchor_time, std::span<const Vec3> positions,
                           std::span<const int> timestamps, RadiusTable radius);

/// Uniform spatial hash over a fixed point set. Candidate lists are a superset
/// of the ball and come back in ascending index order, so filtered results are
/// identical to the naive scan.
class GridIndex {
 public:
  GridIndex(std::span<const Vec3> positions, double cell_size);

  void candidates(const Vec3& center, double radius, std::vector<std::size_t>& out) const;

  NeighborGroup radius_query(const Vec3& anchor, int anchor_time, std::span<const Vec3> positions,
                             std::span<const int> timestamps, RadiusTable radius) const;

  double cell_size() const { return cell_size_; }
  std::size_t cell_count() const { return cells_.size(); }

 private:
  std::int64_t cell_coord(double v) const;
  bool covers_all(const Vec3& center, double radius) const;
  template <typename Visit>
  void visit_cells(const Vec3& center, double radius, Visit&& visit) const;
  static std::uint64_t pack(std::int64_t x, std::int64_t y, std::int64_t z);

  double cell_size_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

}  // namespace asta3d
