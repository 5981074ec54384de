#include "asta3d/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace asta3d {

AnchorSet make_anchors(std::span<const Vec3> core_positions, std::span<const int> core_timestamps, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("anchor scale must be positive, got " + std::to_string(scale));
  if (core_positions.size() != core_timestamps.size()) {
    throw std::invalid_argument("make_anchors: positions and timestamps differ in length");
  }
  AnchorSet set;
  set.scale = scale;
  set.positions.reserve(core_positions.size());
  for (const auto& core : core_positions) {
    std::array<Vec3, kAnchorCount> anchors;
    for (std::size_t j = 0; j < kAnchorCount; ++j) anchors[j] = core + scale * kTetrahedron[j];
    set.positions.push_back(anchors);
  }
  set.timestamps.assign(core_timestamps.begin(), core_timestamps.end());
  return set;
}

AnchorSet make_anchors(const CoreSet& cores, double scale) { return make_anchors(cores.positions, cores.timestamps, scale); }

double RadiusSchedule::base_radius() const {
  return std::ldexp(adjustment * band_low, static_cast<int>(level));
}

double RadiusSchedule::radius_for(std::size_t frame_interval) const {
  if (frame_count == 0) throw std::invalid_argument("radius schedule needs a positive frame count");
  if (frame_interval >= frame_count) {
    throw std::out_of_range("frame interval " + std::to_string(frame_interval) + " not below frame count " +
                            std::to_string(frame_count));
  }
  double band = band_low;
  if (frame_count > 1 && frame_interval > 0) {
    const double u = static_cast<double>(frame_interval) / static_cast<double>(frame_count - 1);
    band = frame_interval + 1 == frame_count ? band_high : band_low + (band_high - band_low) * u;
  }
  const double r = std::ldexp(adjustment * band, static_cast<int>(level));
  return std::max(clamp_floor, r);
}

std::vector<double> RadiusSchedule::table() const {
  std::vector<double> out(frame_count);
  for (std::size_t d = 0; d < frame_count; ++d) out[d] = radius_for(d);
  return out;
}

}  // namespace asta3d
