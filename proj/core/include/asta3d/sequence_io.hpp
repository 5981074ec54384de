#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "asta3d/point_cloud.hpp"

namespace asta3d {

/// Sequence file layout, all values little-endian:
///
///   offset  size  field
///   0       12    magic "ASTA3D-SEQ-1"
///   12      4     u32 frame_count
///   16      4     u32 points_per_frame
///   20      4     u32 feature_dim c
///   24      1     u8  has_labels (0 or 1)
///   25      1     u8  task tag (0 none, 1 classification, 2 segmentation)
///   26      ...   per point, frame_count * points_per_frame records of f64:
///                 x, y, z, t, f[0..c), [label]
///
/// t and label hold exact non-negative integers stored as doubles.
inline constexpr std::string_view kSequenceMagic = "ASTA3D-SEQ-1";
inline constexpr std::size_t kSequenceHeaderBytes = 26;

enum class TaskTag : std::uint8_t { none = 0, classification = 1, segmentation = 2 };

class SequenceFormatError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, bad_header, truncated, trailing_data, bad_timestamp, bad_label };

  SequenceFormatError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string encode_sequence(const PointCloudSequence& seq, TaskTag tag = TaskTag::none);
PointCloudSequence decode_sequence(std::string_view bytes, TaskTag* tag = nullptr);

void write_sequence(const PointCloudSequence& seq, const std::filesystem::path& path, TaskTag tag = TaskTag::none);
PointCloudSequence read_sequence(const std::filesystem::path& path, TaskTag* tag = nullptr);

}  // namespace asta3d
