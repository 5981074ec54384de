#include "asta3d/interpolation.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "asta3d/ops.hpp"

namespace asta3d {

InterpolationPlan three_nn_plan(const BatchedCloud& source, const BatchedCloud& target) {
  constexpr std::size_t W = InterpolationPlan::kWidth;
  if (source.batch_size() != target.batch_size()) {
    throw std::invalid_argument("interpolation clouds hold different batch sizes");
  }
  InterpolationPlan plan;
  plan.indices.reserve(target.size() * W);
  plan.weights.reserve(target.size() * W);
  for (std::size_t b = 0; b < target.batch_size(); ++b) {
    const std::size_t s0 = source.offsets[b], s1 = source.offsets[b + 1];
    if (s0 == s1) throw std::invalid_argument("interpolation source sample is empty");
    for (std::size_t t = target.offsets[b]; t < target.offsets[b + 1]; ++t) {
      std::array<std::size_t, W> best{};
      std::array<double, W> best_d;
      best_d.fill(std::numeric_limits<double>::infinity());
      std::size_t found = 0;
      for (std::size_t s = s0; s < s1; ++s) {
        const double d = squared_distance(source.positions[s], target.positions[t]);
        // Strict comparison keeps the lower index first among equal distances.
        std::size_t slot = std::min(found, W);
        while (slot > 0 && d < best_d[slot - 1]) --slot;
        if (slot >= W) continue;
        for (std::size_t k = std::min(found, W - 1); k > slot; --k) {
          best[k] = best[k - 1];
          best_d[k] = best_d[k - 1];
        }
        best[slot] = s;
        best_d[slot] = d;
        found = std::min(found + 1, W);
      }
      std::array<double, W> w{};
      if (best_d[0] == 0.0) {
        w[0] = 1.0;
      } else {
        double total = 0.0;
        for (std::size_t k = 0; k < found; ++k) {
          w[k] = 1.0 / std::sqrt(best_d[k]);
          total += w[k];
        }
        for (std::size_t k = 0; k < found; ++k) w[k] /= total;
      }
      for (std::size_t k = 0; k < W; ++k) {
        plan.indices.push_back(k < found ? best[k] : best[0]);
        plan.weights.push_back(k < found ? w[k] : 0.0);
      }
    }
  }
  return plan;
}

Tensor interpolate(const Tensor& source_features, const InterpolationPlan& plan) {
  return weighted_gather_rows(source_features, plan.indices, plan.weights, InterpolationPlan::kWidth);
}

}  // namespace asta3d
