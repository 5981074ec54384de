#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <random>
#include <vector>

#include "asta3d/point_cloud.hpp"
#include "asta3d/tensor.hpp"

namespace asta3d::testing {

inline std::vector<double> uniform_values(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline Tensor random_tensor(std::mt19937_64& rng, Shape shape, bool requires_grad = false) {
  const std::size_t n = shape_numel(shape);
  return Tensor::from(std::move(shape), uniform_values(rng, n), requires_grad);
}

inline Vec3 random_point(std::mt19937_64& rng, double extent = 1.0) {
  std::uniform_real_distribution<double> dist(-extent, extent);
  const double x = dist(rng);
  const double y = dist(rng);
  return {x, y, dist(rng)};
}

/// Random sequence with uniform positions in [-extent, extent]^3, features in
/// [-1, 1] and frame-major timestamps.
inline PointCloudSequence random_sequence(std::mt19937_64& rng, std::size_t frames, std::size_t per_frame,
                                          std::size_t feature_dim, double extent = 1.0) {
  PointCloudSequence seq;
  seq.frame_count = frames;
  seq.points_per_frame = per_frame;
  seq.feature_dim = feature_dim;
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t i = 0; i < per_frame; ++i) {
      seq.positions.push_back(random_point(rng, extent));
      seq.timestamps.push_back(static_cast<int>(f));
    }
  }
  seq.features = uniform_values(rng, seq.size() * feature_dim);
  return seq;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return a.size() == b.size() ? m : 1e300;
}

}  // namespace asta3d::testing
