#include "asta3d/metrics.hpp"

#include <stdexcept>
#include <string>

namespace asta3d {

namespace {

void check_aligned(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("metrics: " + std::to_string(predictions.size()) + " predictions for " +
                                std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw std::invalid_argument("metrics: no samples");
}

}  // namespace

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  check_aligned(predictions, labels);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

SegmentationMetrics iou_from_counts(std::span<const ClassCounts> counts) {
  SegmentationMetrics out;
  double total = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    ClassIoU entry;
    entry.class_id = c;
    entry.counts = counts[c];
    const auto denom = counts[c].true_positive + counts[c].false_positive + counts[c].false_negative;
    entry.present = denom > 0;
    if (entry.present) {
      entry.iou = static_cast<double>(counts[c].true_positive) / static_cast<double>(denom);
      total += entry.iou;
      ++present;
    }
    out.per_class.push_back(entry);
  }
  out.mean_iou = present > 0 ? total / static_cast<double>(present) : 0.0;
  return out;
}

SegmentationMetrics segmentation_metrics(std::span<const int> predictions, std::span<const int> labels,
                                         std::size_t class_count) {
  check_aligned(predictions, labels);
  std::vector<ClassCounts> counts(class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int p = predictions[i];
    const int l = labels[i];
    if (p < 0 || l < 0 || static_cast<std::size_t>(p) >= class_count || static_cast<std::size_t>(l) >= class_count) {
      throw std::out_of_range("metrics: class index outside [0, " + std::to_string(class_count) + ")");
    }
    if (p == l) {
      ++counts[static_cast<std::size_t>(p)].true_positive;
    } else {
      ++counts[static_cast<std::size_t>(p)].false_positive;
      ++counts[static_cast<std::size_t>(l)].false_negative;
    }
  }
  auto out = iou_from_counts(counts);
  out.accuracy = accuracy(predictions, labels);
  return out;
}

}  // namespace asta3d
