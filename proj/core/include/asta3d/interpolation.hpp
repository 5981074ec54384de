#pragma once

#include <cstddef>
#include <vector>

#include "asta3d/point_cloud.hpp"
#include "asta3d/tensor.hpp"

namespace asta3d {

/// Inverse-distance weights over the three nearest source points of every
/// target point, searched within the same batch sample. A source point at
/// zero distance takes weight 1; samples with fewer than three sources pad
/// with zero-weight repeats.
struct InterpolationPlan {
  static constexpr std::size_t kWidth = 3;
  std::vector<std::size_t> indices;  // [targets x 3] global source rows
  std::vector<double> weights;       // [targets x 3], rows sum to 1
};

InterpolationPlan three_nn_plan(const BatchedCloud& source, const BatchedCloud& target);

/// [targets x c] features interpolated from [sources x c].
Tensor interpolate(const Tensor& source_features, const InterpolationPlan& plan);

}  // namespace asta3d
