#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace asta3d {

struct ClassCounts {
  std::uint64_t true_positive = 0;
  std::uint64_t false_positive = 0;
  std::uint64_t false_negative = 0;
};

struct ClassIoU {
  std::size_t class_id = 0;
  ClassCounts counts;
  bool present = false;  // appears in predictions or labels
  double iou = 0.0;      // TP / (TP + FP + FN); 0 when absent
};

struct SegmentationMetrics {
  std::vector<ClassIoU> per_class;
  double mean_iou = 0.0;  // over present classes only
  double accuracy = 0.0;  // point-wise
};

/// Fraction of equal entries. Throws std::invalid_argument on length mismatch or empty input.
double accuracy(std::span<const int> predictions, std::span<const int> labels);

/// Per-class IoU from raw counts; classes with TP + FP + FN == 0 are left out of the mean.
SegmentationMetrics iou_from_counts(std::span<const ClassCounts> counts);

SegmentationMetrics segmentation_metrics(std::span<const int> predictions, std::span<const int> labels,
                                         std::size_t class_count);

}  // namespace asta3d
