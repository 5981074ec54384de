#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "asta3d/point_cloud.hpp"

namespace asta3d {

enum class SyntheticTask { motion_classification, blob_segmentation };

std::string to_string(SyntheticTask task);
SyntheticTask parse_synthetic_task(const std::string& name);

/// Parameters of a synthetic dataset. Generation is a pure function of this
/// struct; fields that do not apply to a task are ignored.
struct SyntheticTaskSpec {
  SyntheticTask task = SyntheticTask::motion_classification;
  std::size_t classes = 4;
  std::size_t frames = 8;
  std::size_t points_per_frame = 64;
  std::size_t sequences = 200;
  double noise = 0.01;  // Gaussian position noise sigma
  std::uint64_t seed = 0;

  // Motion classification: per-frame displacement along z, scale growth and
  // rotation angle (radians). Each sequence scales them by 1 + jitter * U(-1, 1).
  double step = 0.08;
  double expand_rate = 0.08;
  double angular_step = 0.2;
  double magnitude_jitter = 0.0;

  // Blob segmentation: background is uniform over [-1,1]^2 x [-0.05, 0.05];
  // the blob is a truncated Gaussian (|offset| <= 3 sigma per axis) centered
  // blob_height above the plane, moving blob_speed per frame in a random
  // horizontal direction.
  std::size_t blob_points = 64;
  double blob_sigma = 0.08;
  double blob_height = 0.4;
  double blob_speed = 0.15;
  double color_noise = 0.05;
};

/// Sequences with feature f = [t] and every point labeled with the sequence class.
/// Class k uses motion k of: translate-up, translate-down, uniform-expand,
/// rotate-about-z. Throws std::invalid_argument for classes outside [1, 4].
std::vector<PointCloudSequence> generate_motion_classification(const SyntheticTaskSpec& spec);

/// Sequences with features f = [r, g, b, t]; background points are labeled 0
/// and blob points 1. Throws std::invalid_argument when classes != 2 or the
/// blob does not fit in a frame.
std::vector<PointCloudSequence> generate_blob_segmentation(const SyntheticTaskSpec& spec);

std::vector<PointCloudSequence> generate(const SyntheticTaskSpec& spec);

/// Reduces every frame of `raw` to `points_per_frame` points by FPS within the
/// frame, keeping frame order. Input frames may hold different point counts;
/// `raw.points_per_frame` is ignored and `raw.frame_count` bounds the timestamps.
PointCloudSequence downsample_per_frame(const PointCloudSequence& raw, std::size_t points_per_frame);

}  // namespace asta3d
