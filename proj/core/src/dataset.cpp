#include "asta3d/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "asta3d/sequence_io.hpp"
#include "json.hpp"

namespace asta3d {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::vector<std::size_t> permutation(std::size_t size, std::uint64_t seed) {
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::string item_name(std::size_t i) {
  std::string digits = std::to_string(i);
  return std::string(digits.size() < 6 ? 6 - digits.size() : 0, '0') + digits + ".seq";
}

}  // namespace

std::vector<std::vector<std::size_t>> make_batches(std::size_t size, std::size_t batch_size, std::uint64_t seed) {
  if (size == 0) throw std::invalid_argument("cannot batch an empty dataset");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be at least 1");
  const auto order = permutation(size, seed);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < size; i += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(size, i + batch_size)));
  }
  return batches;
}

IndexSplit split_indices(std::size_t size, double validation_fraction, std::uint64_t seed) {
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw std::invalid_argument("validation fraction must lie in [0, 1)");
  }
  auto count = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(size)));
  if (count >= size) count = size == 0 ? 0 : size - 1;
  const auto order = permutation(size, seed);
  IndexSplit split;
  split.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(count), order.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

void write_dataset(const Dataset& dataset, const fs::path& dir, bool force, const std::string& generator_json) {
  const fs::path manifest_path = dir / "manifest.json";
  if (fs::exists(manifest_path) && !force) {
    throw std::runtime_error("dataset already exists at " + dir.string() + " (use --force to overwrite)");
  }
  const TaskTag tag = dataset.task == Task::classification ? TaskTag::classification : TaskTag::segmentation;
  json splits;
  for (const char* split : {"train", "test"}) {
    const auto& items = std::string(split) == "train" ? dataset.train : dataset.test;
    fs::remove_all(dir / split);
    fs::create_directories(dir / split);
    json names = json::array();
    for (std::size_t i = 0; i < items.size(); ++i) {
      const std::string rel = std::string(split) + "/" + item_name(i);
      write_sequence(items[i], dir / rel, tag);
      names.push_back(rel);
    }
    splits[split] = std::move(names);
  }
  json manifest;
  manifest["format"] = "asta3d-dataset";
  manifest["schema_version"] = 1;
  manifest["task"] = to_string(dataset.task);
  manifest["generator"] = json::parse(generator_json);
  manifest["splits"] = std::move(splits);
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + manifest_path.string());
  out << manifest.dump(2) << '\n';
}

Dataset read_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("no dataset manifest at " + manifest_path.string());
  Dataset dataset;
  try {
    const json manifest = json::parse(in);
    if (manifest.at("format") != "asta3d-dataset") throw std::runtime_error("not an asta3d dataset manifest");
    dataset.task = parse_task(manifest.at("task").get<std::string>());
    for (const auto& rel : manifest.at("splits").at("train")) {
      dataset.train.push_back(read_sequence(dir / rel.get<std::string>()));
    }
    for (const auto& rel : manifest.at("splits").at("test")) {
      dataset.test.push_back(read_sequence(dir / rel.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed dataset manifest " + manifest_path.string() + ": " + e.what());
  }
  return dataset;
}

Dataset generate_dataset(const SyntheticTaskSpec& spec, std::size_t train_sequences, std::size_t test_sequences) {
  Dataset dataset;
  dataset.task = spec.task == SyntheticTask::motion_classification ? Task::classification : Task::segmentation;
  SyntheticTaskSpec s = spec;
  s.sequences = train_sequences;
  dataset.train = generate(s);
  s.sequences = test_sequences;
  s.seed = spec.seed + 1;
  dataset.test = generate(s);
  return dataset;
}

std::string synthetic_spec_to_json(const SyntheticTaskSpec& spec) {
  json j;
  j["task"] = to_string(spec.task);
  j["classes"] = spec.classes;
  j["frames"] = spec.frames;
  j["points_per_frame"] = spec.points_per_frame;
  j["sequences"] = spec.sequences;
  j["noise"] = spec.noise;
  j["seed"] = spec.seed;
  if (spec.task == SyntheticTask::motion_classification) {
    j["step"] = spec.step;
    j["expand_rate"] = spec.expand_rate;
    j["angular_step"] = spec.angular_step;
    j["magnitude_jitter"] = spec.magnitude_jitter;
  } else {
    j["blob_points"] = spec.blob_points;
    j["blob_sigma"] = spec.blob_sigma;
    j["blob_height"] = spec.blob_height;
    j["blob_speed"] = spec.blob_speed;
    j["color_noise"] = spec.color_noise;
  }
  return j.dump(2);
}

SyntheticTaskSpec synthetic_spec_from_json(const std::string& text) {
  SyntheticTaskSpec s;
  try {
    const json j = json::parse(text);
    s.task = parse_synthetic_task(j.at("task").get<std::string>());
    s.classes = j.value("classes", s.task == SyntheticTask::blob_segmentation ? std::size_t{2} : s.classes);
    s.frames = j.value("frames", s.frames);
    s.points_per_frame = j.value("points_per_frame", s.points_per_frame);
    s.sequences = j.value("sequences", s.sequences);
    s.noise = j.value("noise", s.noise);
    s.seed = j.value("seed", s.seed);
    s.step = j.value("step", s.step);
    s.expand_rate = j.value("expand_rate", s.expand_rate);
    s.angular_step = j.value("angular_step", s.angular_step);
    s.magnitude_jitter = j.value("magnitude_jitter", s.magnitude_jitter);
    s.blob_points = j.value("blob_points", s.blob_points);
    s.blob_sigma = j.value("blob_sigma", s.blob_sigma);
    s.blob_height = j.value("blob_height", s.blob_height);
    s.blob_speed = j.value("blob_speed", s.blob_speed);
    s.color_noise = j.value("color_noise", s.color_noise);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("synthetic task: malformed JSON: ") + e.what());
  }
  return s;
}

}  // namespace asta3d
