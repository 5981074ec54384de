#pragma once

#include <array>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "asta3d/point_cloud.hpp"

namespace asta3d {

inline constexpr std::size_t kAnchorCount = 4;

/// Unit offsets from a core point to the vertices of a regular tetrahedron.
/// Rows are unit length, pairwise dot product -1/3, and sum to zero.
inline constexpr std::array<Vec3, kAnchorCount> kTetrahedron = {{
    {std::numbers::sqrt2 / 3.0, -std::numbers::sqrt2 * std::numbers::sqrt3 / 3.0, -1.0 / 3.0},
    {std::numbers::sqrt2 / 3.0, std::numbers::sqrt2 * std::numbers::sqrt3 / 3.0, -1.0 / 3.0},
    {-2.0 * std::numbers::sqrt2 / 3.0, 0.0, -1.0 / 3.0},
    {0.0, 0.0, 1.0},
}};

/// Four virtual anchors per core; anchors inherit the core timestamp.
struct AnchorSet {
  std::vector<std::array<Vec3, kAnchorCount>> positions;
  std::vector<int> timestamps;
  double scale = 0.0;  // distance from every anchor to its core

  std::size_t size() const { return positions.size(); }
};

/// Throws std::invalid_argument unless scale > 0.
AnchorSet make_anchors(std::span<const Vec3> core_positions, std::span<const int> core_timestamps, double scale);
AnchorSet make_anchors(const CoreSet& cores, double scale);

/// Query radius as a function of frame interval.
///
/// radius(d) = max(clamp_floor, 2^level * a * lerp(band_low, band_high, d / (T - 1)))
/// with the band's low end used directly when T == 1.
struct RadiusSchedule {
  double adjustment = 0.25;  // a
  double band_low = 0.5;
  double band_high = 0.6;
  std::size_t frame_count = 1;  // T
  std::size_t level = 0;
  double clamp_floor = 0.0;  // anchor scale of the layer

  /// Throws std::out_of_range when frame_interval >= frame_count.
  double radius_for(std::size_t frame_interval) const;
  /// radius_for(0 .. T-1).
  std::vector<double> table() const;
  /// The level radius at interval 0, before clamping.
  double base_radius() const;
};

}  // namespace asta3d
