#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace asta3d {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
  double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const Vec3 d = a - b;
  return dot(d, d);
}
inline double distance(const Vec3& a, const Vec3& b) { return std::sqrt(squared_distance(a, b)); }
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

class SequenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Multi-frame point cloud. Points are stored structure-of-arrays; features are
/// row-major [point_count x feature_dim]. Labels are per point when present.
struct PointCloudSequence {
  std::vector<Vec3> positions;
  std::vector<int> timestamps;
  std::vector<double> features;
  std::vector<int> labels;  // empty when unlabeled
  std::size_t feature_dim = 0;
  std::size_t frame_count = 1;
  std::size_t points_per_frame = 0;

  std::size_t size() const { return positions.size(); }
  bool has_labels() const { return !labels.empty(); }
  std::span<const double> feature(std::size_t i) const {
    return {features.data() + i * feature_dim, feature_dim};
  }

  /// Checks every structural invariant; throws SequenceError naming the first violation.
  void validate() const;

  /// Sequence-level label for classification data (all point labels must agree).
  int sequence_label() const;
};

/// Points selected as convolution centers, with copies of their geometry.
struct CoreSet {
  std::vector<std::size_t> indices;
  std::vector<Vec3> positions;
  std::vector<int> timestamps;

  std::size_t size() const { return indices.size(); }
};

/// Geometry of a mini-batch at one network level: the points of every sample
/// concatenated, with sample b occupying [offsets[b], offsets[b+1]).
struct BatchedCloud {
  std::vector<Vec3> positions;
  std::vector<int> timestamps;
  std::vector<std::size_t> offsets{0};
  std::size_t frame_count = 1;

  std::size_t size() const { return positions.size(); }
  std::size_t batch_size() const { return offsets.size() - 1; }
  std::size_t sample_size(std::size_t b) const { return offsets[b + 1] - offsets[b]; }
};

BatchedCloud batch_geometry(std::span<const PointCloudSequence* const> samples);

/// Copy of `seq` with every position shifted by `shift`.
PointCloudSequence translated(const PointCloudSequence& seq, const Vec3& shift);

}  // namespace asta3d
