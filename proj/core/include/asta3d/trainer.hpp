#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "asta3d/dataset.hpp"
#include "asta3d/metrics.hpp"
#include "asta3d/network_spec.hpp"
#include "asta3d/networks.hpp"
#include "asta3d/optim.hpp"

namespace asta3d {

inline constexpr int kReportSchemaVersion = 1;

struct RunSeeds {
  std::uint64_t data = 0;     // validation split
  std::uint64_t init = 0;     // parameter initialization
  std::uint64_t shuffle = 0;  // batch order and FPS seed augmentation
};

struct RunPaths {
  std::filesystem::path dataset;
  std::filesystem::path checkpoint;
  std::filesystem::path report;
};

struct RunConfig {
  NetworkSpec network;
  std::string network_source;  // file the network spec came from, empty when inline
  StepDecay schedule;
  std::size_t batch_size = 8;
  std::size_t epochs = 10;
  RunSeeds seeds;
  double validation_fraction = 0.1;
  bool random_fps_seed = false;  // random first FPS pick per sample while training
  RunPaths paths;

  void validate() const;
};

/// Reads a run config. "network" is either an inline object or a path; relative
/// paths resolve against `base_dir`.
RunConfig run_config_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& config);

struct EvalMetrics {
  Task task = Task::classification;
  std::size_t samples = 0;
  double loss = 0.0;      // mean cross-entropy per sample (classification) or per point
  double accuracy = 0.0;  // sequence-level or point-level
  SegmentationMetrics segmentation;  // segmentation only

  /// Model selection score: accuracy for classification, mIoU for segmentation.
  double score() const { return task == Task::classification ? accuracy : segmentation.mean_iou; }
};

/// Inference-mode metrics, one sample at a time.
EvalMetrics evaluate(Model& model, std::span<const PointCloudSequence> sequences);
std::string metrics_to_json(const EvalMetrics& metrics);

/// Dry-run shape check: throws std::invalid_argument naming the first
/// dataset/network mismatch.
void check_compatibility(const NetworkSpec& spec, const Dataset& dataset);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> validation_score;
};

struct TrainResult {
  std::unique_ptr<Model> model;  // holds the selected (best-by-validation) weights
  std::vector<EpochRecord> curve;
  std::size_t best_epoch = 0;
  EvalMetrics train;  // whole train split of the dataset
  std::optional<EvalMetrics> validation;
  EvalMetrics test;
  std::string checkpoint_hash;  // empty when no checkpoint path is set
  std::string report_json;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains on `dataset.train`, keeps the weights with the best validation score
/// (last epoch when the validation split is empty), then writes the checkpoint
/// and report when their paths are set.
TrainResult train_model(const RunConfig& config, const Dataset& dataset, const EpochCallback& on_epoch = {});

struct LoadedModel {
  std::unique_ptr<Model> model;
  std::string checkpoint_hash;
  std::string metadata_json;
};

LoadedModel load_model(const std::filesystem::path& checkpoint);

/// Report for a checkpoint evaluated on one split ("train" or "test").
std::string eval_report(const LoadedModel& loaded, const std::filesystem::path& checkpoint, const Dataset& dataset,
                        const std::string& split, EvalMetrics* metrics_out = nullptr);

/// Classification: {"class", "logits"}; segmentation: {"points", "classes"} in input order.
std::string infer_json(Model& model, const PointCloudSequence& seq);

}  // namespace asta3d
