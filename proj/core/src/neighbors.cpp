#include "asta3d/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace asta3d {

namespace {

class GroupBuilder {
 public:
  GroupBuilder(const Vec3& anchor, int anchor_time, std::span<const Vec3> positions, std::span<const int> timestamps,
               RadiusTable radius)
      : anchor_(anchor), time_(anchor_time), positions_(positions), timestamps_(timestamps), radius_(radius) {}

  bool qualifies(std::size_t i) const {
    const auto interval = static_cast<std::size_t>(std::abs(timestamps_[i] - time_));
    if (interval >= radius_.size()) {
      throw std::out_of_range("radius table has no entry for frame interval " + std::to_string(interval));
    }
    const double r = radius_[interval];
    return squared_distance(positions_[i], anchor_) < r * r;
  }

  void push(std::size_t i) { group_.slots[group_.valid_count++] = {i, positions_[i], timestamps_[i]}; }

  // Returns true once the group is full.
  bool offer(std::size_t i) {
    if (qualifies(i)) push(i);
    return group_.valid_count == kNeighborSlots;
  }

  NeighborGroup finish() {
    for (std::size_t k = group_.valid_count; k < kNeighborSlots && group_.valid_count > 0; ++k) {
      group_.slots[k] = group_.slots[0];
    }
    return group_;
  }

 private:
  Vec3 anchor_;
  int time_;
  std::span<const Vec3> positions_;
  std::span<const int> timestamps_;
  RadiusTable radius_;
  NeighborGroup group_;
};

void check_inputs(std::span<const Vec3> positions, std::span<const int> timestamps) {
  if (positions.size() != timestamps.size()) {
    throw std::invalid_argument("radius_query: positions and timestamps differ in length");
  }
}

}  // namespace

NeighborGroup radius_query(const Vec3& anchor, int anchor_time, std::span<const Vec3> positions,
                           std::span<const int> timestamps, RadiusTable radius) {
  check_inputs(positions, timestamps);
  GroupBuilder builder(anchor, anchor_time, positions, timestamps, radius);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (builder.offer(i)) break;
  }
  return builder.finish();
}

GridIndex::GridIndex(std::span<const Vec3> positions, double cell_size) : cell_size_(cell_size) {
  if (!(cell_size > 0.0)) throw std::invalid_argument("GridIndex: cell size must be positive");
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto& p = positions[i];
    cells_[pack(cell_coord(p.x), cell_coord(p.y), cell_coord(p.z))].push_back(i);
  }
}

std::int64_t GridIndex::cell_coord(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_size_)); }

std::uint64_t GridIndex::pack(std::int64_t x, std::int64_t y, std::int64_t z) {
  constexpr std::uint64_t mask = (1u << 21) - 1;
  return ((static_cast<std::uint64_t>(x) & mask) << 42) | ((static_cast<std::uint64_t>(y) & mask) << 21) |
         (static_cast<std::uint64_t>(z) & mask);
}

bool GridIndex::covers_all(const Vec3& center, double radius) const {
  const std::int64_t x0 = cell_coord(center.x - radius), x1 = cell_coord(center.x + radius);
  const std::int64_t y0 = cell_coord(center.y - radius), y1 = cell_coord(center.y + radius);
  const std::int64_t z0 = cell_coord(center.z - radius), z1 = cell_coord(center.z + radius);
  const auto span_cells = static_cast<std::uint64_t>((x1 - x0 + 1) * (y1 - y0 + 1) * (z1 - z0 + 1));
  return span_cells > cells_.size();
}

template <typename Visit>
void GridIndex::visit_cells(const Vec3& center, double radius, Visit&& visit) const {
  const std::int64_t x0 = cell_coord(center.x - radius), x1 = cell_coord(center.x + radius);
  const std::int64_t y0 = cell_coord(center.y - radius), y1 = cell_coord(center.y + radius);
  const std::int64_t z0 = cell_coord(center.z - radius), z1 = cell_coord(center.z + radius);
  for (auto x = x0; x <= x1; ++x) {
    for (auto y = y0; y <= y1; ++y) {
      for (auto z = z0; z <= z1; ++z) {
        auto it = cells_.find(pack(x, y, z));
        if (it != cells_.end()) visit(it->second);
      }
    }
  }
}

void GridIndex::candidates(const Vec3& center, double radius, std::vector<std::size_t>& out) const {
  out.clear();
  if (covers_all(center, radius)) {
    for (const auto& [key, members] : cells_) {
      (void)key;
      out.insert(out.end(), members.begin(), members.end());
    }
  } else {
    visit_cells(center, radius, [&](const std::vector<std::size_t>& members) {
      out.insert(out.end(), members.begin(), members.end());
    });
  }
  std::sort(out.begin(), out.end());
}

NeighborGroup GridIndex::radius_query(const Vec3& anchor, int anchor_time, std::span<const Vec3> positions,
                                      std::span<const int> timestamps, RadiusTable radius) const {
  check_inputs(positions, timestamps);
  if (radius.empty()) throw std::out_of_range("radius table is empty");
  const double reach = *std::max_element(radius.begin(), radius.end());
  GroupBuilder builder(anchor, anchor_time, positions, timestamps, radius);
  if (covers_all(anchor, reach)) {
    // Every point is a candidate, so the index-order scan with early exit is cheapest.
    for (std::size_t i = 0; i < positions.size(); ++i) {
      if (builder.offer(i)) break;
    }
    return builder.finish();
  }
  // Keep only qualifying points, then take the lowest eight indices.
  thread_local std::vector<std::size_t> hits;
  hits.clear();
  visit_cells(anchor, reach, [&](const std::vector<std::size_t>& members) {
    for (auto i : members) {
      if (builder.qualifies(i)) hits.push_back(i);
    }
  });
  const auto keep = std::min(hits.size(), kNeighborSlots);
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end());
  for (std::size_t k = 0; k < keep; ++k) builder.push(hits[k]);
  return builder.finish();
}

}  // namespace asta3d
