#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "asta3d/point_cloud.hpp"

namespace asta3d {

/// Farthest point sampling over 3D positions.
///
/// The first pick is `seed_index`; each later pick maximizes the distance to the
/// nearest already-picked point, with ties going to the lowest index. Throws
/// std::invalid_argument when n exceeds the point count or seed_index is out of range.
std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points, std::size_t n,
                                               std::size_t seed_index = 0);

enum class FpsMode {
  pooled,     // one candidate set across all frames
  per_frame,  // n / frame_count picks inside each frame, frames in order
};

CoreSet farthest_point_sample(const PointCloudSequence& seq, std::size_t n, std::size_t seed_index = 0,
                              FpsMode mode = FpsMode::pooled);

/// Cores picked independently inside every sample of a batch.
struct BatchedCores {
  BatchedCloud cloud;
  std::vector<std::size_t> source_indices;  // global rows into the parent cloud
};

/// `seed_indices` holds one local seed per sample (empty means 0 everywhere).
BatchedCores sample_cores(const BatchedCloud& cloud, std::size_t per_sample,
                          std::span<const std::size_t> seed_indices = {});

}  // namespace asta3d
