#include "asta3d/point_cloud.hpp"

#include <string>

namespace asta3d {

void PointCloudSequence::validate() const {
  const std::size_t n = positions.size();
  if (frame_count == 0) throw SequenceError("frame_count must be positive");
  if (points_per_frame == 0) throw SequenceError("points_per_frame must be positive");
  if (n != frame_count * points_per_frame) {
    throw SequenceError("sequence holds " + std::to_string(n) + " points, expected frame_count x points_per_frame = " +
                        std::to_string(frame_count * points_per_frame));
  }
  if (timestamps.size() != n) throw SequenceError("timestamp count does not match point count");
  if (features.size() != n * feature_dim) throw SequenceError("feature buffer does not match point count x feature_dim");
  if (!labels.empty() && labels.size() != n) throw SequenceError("label count does not match point count");
  std::vector<std::size_t> per_frame(frame_count, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int t = timestamps[i];
    if (t < 0 || static_cast<std::size_t>(t) >= frame_count) {
      throw SequenceError("timestamp " + std::to_string(t) + " outside [0, " + std::to_string(frame_count) + ")");
    }
    ++per_frame[static_cast<std::size_t>(t)];
  }
  for (std::size_t f = 0; f < frame_count; ++f) {
    if (per_frame[f] != points_per_frame) {
      throw SequenceError("frame " + std::to_string(f) + " holds " + std::to_string(per_frame[f]) +
                          " points, expected " + std::to_string(points_per_frame));
    }
  }
  for (int label : labels) {
    if (label < 0) throw SequenceError("negative label " + std::to_string(label));
  }
}

int PointCloudSequence::sequence_label() const {
  if (labels.empty()) throw SequenceError("sequence carries no labels");
  for (int label : labels) {
    if (label != labels.front()) throw SequenceError("point labels disagree; not a classification sequence");
  }
  return labels.front();
}

BatchedCloud batch_geometry(std::span<const PointCloudSequence* const> samples) {
  BatchedCloud cloud;
  if (samples.empty()) throw SequenceError("empty batch");
  cloud.frame_count = samples.front()->frame_count;
  for (const auto* s : samples) {
    if (s->frame_count != cloud.frame_count) throw SequenceError("batch mixes sequences of different frame counts");
    cloud.positions.insert(cloud.positions.end(), s->positions.begin(), s->positions.end());
    cloud.timestamps.insert(cloud.timestamps.end(), s->timestamps.begin(), s->timestamps.end());
    cloud.offsets.push_back(cloud.positions.size());
  }
  return cloud;
}

PointCloudSequence translated(const PointCloudSequence& seq, const Vec3& shift) {
  PointCloudSequence out = seq;
  for (auto& p : out.positions) p = p + shift;
  return out;
}

}  // namespace asta3d
