#include <gtest/gtest.h>

#include <random>

#include "asta3d/metrics.hpp"
#include "oracles.hpp"

using namespace asta3d;
using namespace asta3d::testing;

TEST(Accuracy, PerfectAndMismatch) {
  const std::vector<int> labels{0, 1, 2, 1};
  EXPECT_EQ(accuracy(labels, labels), 1.0);
  EXPECT_EQ(accuracy(std::vector<int>{0, 0, 2, 0}, labels), 0.5);
  EXPECT_THROW(accuracy(std::vector<int>{0}, labels), std::invalid_argument);
  EXPECT_THROW(accuracy(std::vector<int>{}, std::vector<int>{}), std::invalid_argument);
}

TEST(SegmentationMetrics, PerfectPredictions) {
  const std::vector<int> labels{0, 1, 1, 0, 1};
  const auto m = segmentation_metrics(labels, labels, 2);
  EXPECT_EQ(m.mean_iou, 1.0);
  EXPECT_EQ(m.accuracy, 1.0);
}

TEST(SegmentationMetrics, ComplementOfBinaryLabels) {
  const std::vector<int> labels{0, 1, 1, 0, 1};
  const std::vector<int> pred{1, 0, 0, 1, 0};
  const auto m = segmentation_metrics(pred, labels, 2);
  EXPECT_EQ(m.per_class[0].iou, 0.0);
  EXPECT_EQ(m.per_class[1].iou, 0.0);
  EXPECT_EQ(m.mean_iou, 0.0);
}

TEST(SegmentationMetrics, ThreeClassCountsExample) {
  // No single prediction vector yields these counts (sum FP must equal sum FN),
  // so the counts go in directly.
  const std::vector<ClassCounts> counts{{5, 1, 2}, {3, 0, 0}, {0, 4, 3}};
  const auto m = iou_from_counts(counts);
  EXPECT_DOUBLE_EQ(m.per_class[0].iou, 5.0 / 8.0);
  EXPECT_DOUBLE_EQ(m.per_class[1].iou, 1.0);
  EXPECT_DOUBLE_EQ(m.per_class[2].iou, 0.0);
  EXPECT_NEAR(m.mean_iou, 0.5417, 5e-5);
  EXPECT_DOUBLE_EQ(m.mean_iou, (5.0 / 8.0 + 1.0) / 3.0);
}

TEST(SegmentationMetrics, AbsentClassesLeaveTheMean) {
  const std::vector<int> labels{0, 0, 2, 2};
  const std::vector<int> pred{0, 2, 2, 2};
  const auto m = segmentation_metrics(pred, labels, 4);
  EXPECT_FALSE(m.per_class[1].present);
  EXPECT_FALSE(m.per_class[3].present);
  EXPECT_DOUBLE_EQ(m.mean_iou, (0.5 + 2.0 / 3.0) / 2.0);
}

TEST(SegmentationMetrics, RejectsBadInput) {
  EXPECT_THROW(segmentation_metrics(std::vector<int>{0, 1}, std::vector<int>{0}, 2), std::invalid_argument);
  EXPECT_THROW(segmentation_metrics(std::vector<int>{0, 2}, std::vector<int>{0, 1}, 2), std::out_of_range);
  EXPECT_THROW(segmentation_metrics(std::vector<int>{0, -1}, std::vector<int>{0, 1}, 2), std::out_of_range);
}

TEST(SegmentationMetrics, MatchesConfusionMatrixOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t classes = 2 + rng() % 6;
    const std::size_t n = 1 + rng() % 300;
    std::uniform_int_distribution<int> cls(0, static_cast<int>(classes) - 1);
    std::vector<int> pred(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = cls(rng);
      pred[i] = rng() % 3 == 0 ? cls(rng) : truth[i];
    }
    std::vector<bool> present;
    const auto expected = iou_oracle(pred, truth, classes, &present);
    const auto m = segmentation_metrics(pred, truth, classes);
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      EXPECT_EQ(m.per_class[c].present, present[c]);
      EXPECT_NEAR(m.per_class[c].iou, expected[c], 1e-15);
      if (present[c]) {
        total += expected[c];
        ++count;
      }
    }
    EXPECT_NEAR(m.mean_iou, total / static_cast<double>(count), 1e-12);
  }
}
