#include "asta3d/sampling.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace asta3d {

std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points, std::size_t n,
                                               std::size_t seed_index) {
  if (n > points.size()) {
    throw std::invalid_argument("farthest_point_sample: requested " + std::to_string(n) + " of " +
                                std::to_string(points.size()) + " points");
  }
  std::vector<std::size_t> picked;
  if (n == 0) return picked;
  if (seed_index >= points.size()) throw std::invalid_argument("farthest_point_sample: seed index out of range");

  picked.reserve(n);
  std::vector<double> nearest(points.size(), std::numeric_limits<double>::infinity());
  std::vector<bool> taken(points.size(), false);
  std::size_t current = seed_index;
  picked.push_back(current);
  taken[current] = true;
  while (picked.size() < n) {
    const Vec3& anchor = points[current];
    std::size_t best = 0;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double d = squared_distance(points[i], anchor);
      if (d < nearest[i]) nearest[i] = d;
      if (!taken[i] && nearest[i] > best_dist) {
        best_dist = nearest[i];
        best = i;
      }
    }
    current = best;
    picked.push_back(current);
    taken[current] = true;
  }
  return picked;
}

CoreSet farthest_point_sample(const PointCloudSequence& seq, std::size_t n, std::size_t seed_index, FpsMode mode) {
  CoreSet cores;
  if (mode == FpsMode::pooled) {
    cores.indices = farthest_point_sample(seq.positions, n, seed_index);
  } else {
    if (seq.frame_count == 0 || n % seq.frame_count != 0) {
      throw std::invalid_argument("per-frame sampling needs a count divisible by the frame count");
    }
    const std::size_t per_frame = n / seq.frame_count;
    for (std::size_t f = 0; f < seq.frame_count; ++f) {
      std::vector<std::size_t> members;
      std::vector<Vec3> frame_points;
      for (std::size_t i = 0; i < seq.size(); ++i) {
        if (static_cast<std::size_t>(seq.timestamps[i]) == f) {
          members.push_back(i);
          frame_points.push_back(seq.positions[i]);
        }
      }
      if (frame_points.empty()) throw std::invalid_argument("frame " + std::to_string(f) + " is empty");
      for (auto local : farthest_point_sample(frame_points, per_frame, seed_index % frame_points.size())) {
        cores.indices.push_back(members[local]);
      }
    }
  }
  for (auto i : cores.indices) {
    cores.positions.push_back(seq.positions[i]);
    cores.timestamps.push_back(seq.timestamps[i]);
  }
  return cores;
}

BatchedCores sample_cores(const BatchedCloud& cloud, std::size_t per_sample, std::span<const std::size_t> seed_indices) {
  BatchedCores out;
  out.cloud.frame_count = cloud.frame_count;
  const std::span<const Vec3> all(cloud.positions);
  for (std::size_t b = 0; b < cloud.batch_size(); ++b) {
    const std::size_t begin = cloud.offsets[b];
    const std::size_t count = cloud.sample_size(b);
    const std::size_t seed = seed_indices.empty() ? 0 : seed_indices[b] % count;
    for (auto local : farthest_point_sample(all.subspan(begin, count), per_sample, seed)) {
      const std::size_t g = begin + local;
      out.source_indices.push_back(g);
      out.cloud.positions.push_back(cloud.positions[g]);
      out.cloud.timestamps.push_back(cloud.timestamps[g]);
    }
    out.cloud.offsets.push_back(out.cloud.positions.size());
  }
  return out;
}

}  // namespace asta3d
