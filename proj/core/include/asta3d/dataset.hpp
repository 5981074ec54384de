#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "asta3d/network_spec.hpp"
#include "asta3d/point_cloud.hpp"
#include "asta3d/synthetic.hpp"

namespace asta3d {

/// Index batches over a dataset of `size` items: a seeded permutation cut into
/// chunks of `batch_size`, with the final partial chunk kept. Throws
/// std::invalid_argument when size == 0 or batch_size == 0.
std::vector<std::vector<std::size_t>> make_batches(std::size_t size, std::size_t batch_size, std::uint64_t seed);

struct IndexSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Seeded split of [0, size); validation gets round(fraction * size) items but
/// never all of them. Both lists are sorted.
IndexSplit split_indices(std::size_t size, double validation_fraction, std::uint64_t seed);

struct Dataset {
  Task task = Task::classification;
  std::vector<PointCloudSequence> train;
  std::vector<PointCloudSequence> test;
};

/// A dataset directory holds manifest.json plus one sequence file per item:
///
///   manifest.json   {"format": "asta3d-dataset", "schema_version": 1, "task",
///                    "generator": {...} or null, "splits": {"train": [...], "test": [...]}}
///   train/NNNNNN.seq, test/NNNNNN.seq
///
/// Writing refuses an existing manifest unless `force` is set.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir, bool force,
                   const std::string& generator_json = "null");
Dataset read_dataset(const std::filesystem::path& dir);

/// Generates train and test splits with seeds `spec.seed` and `spec.seed + 1`.
Dataset generate_dataset(const SyntheticTaskSpec& spec, std::size_t train_sequences, std::size_t test_sequences);

std::string synthetic_spec_to_json(const SyntheticTaskSpec& spec);
SyntheticTaskSpec synthetic_spec_from_json(const std::string& text);

}  // namespace asta3d
