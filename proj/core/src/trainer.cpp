#include "asta3d/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "asta3d/checkpoint.hpp"
#include "asta3d/ops.hpp"
#include "json.hpp"

namespace asta3d {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text << '\n';
}

std::vector<int> batch_labels(const NetworkSpec& spec, std::span<const PointCloudSequence* const> batch) {
  std::vector<int> labels;
  for (const auto* s : batch) {
    if (spec.task == Task::classification) {
      labels.push_back(s->sequence_label());
    } else {
      labels.insert(labels.end(), s->labels.begin(), s->labels.end());
    }
  }
  return labels;
}

json seeds_json(const RunSeeds& s) { return {{"data", s.data}, {"init", s.init}, {"shuffle", s.shuffle}}; }

}  // namespace

void RunConfig::validate() const {
  network.validate();
  if (!(schedule.initial > 0.0)) throw std::invalid_argument("run config: learning rate must be positive");
  if (!(schedule.factor > 0.0 && schedule.factor <= 1.0)) {
    throw std::invalid_argument("run config: decay factor must lie in (0, 1]");
  }
  if (schedule.period == 0) throw std::invalid_argument("run config: decay period must be positive");
  if (batch_size == 0) throw std::invalid_argument("run config: batch_size must be at least 1");
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw std::invalid_argument("run config: validation_fraction must lie in [0, 1)");
  }
}

RunConfig run_config_from_json(const std::string& text, const fs::path& base_dir) {
  RunConfig c;
  try {
    const json j = json::parse(text);
    const auto& net = j.at("network");
    if (net.is_string()) {
      const fs::path path = resolve(base_dir, net.get<std::string>());
      c.network = load_network_spec(path);
      c.network_source = path.string();
    } else {
      c.network = network_spec_from_json(net.dump());
    }
    if (j.contains("task") && parse_task(j.at("task").get<std::string>()) != c.network.task) {
      throw std::invalid_argument("run config: task does not match the network spec");
    }
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      c.schedule.initial = o.value("lr", c.schedule.initial);
      c.schedule.factor = o.value("decay_factor", c.schedule.factor);
      c.schedule.period = o.value("decay_period", c.schedule.period);
    }
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      c.seeds.data = s.value("data", c.seeds.data);
      c.seeds.init = s.value("init", c.seeds.init);
      c.seeds.shuffle = s.value("shuffle", c.seeds.shuffle);
    }
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.random_fps_seed = j.value("random_fps_seed", c.random_fps_seed);
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      c.paths.dataset = resolve(base_dir, p.value("dataset", std::string{}));
      c.paths.checkpoint = resolve(base_dir, p.value("checkpoint", std::string{}));
      c.paths.report = resolve(base_dir, p.value("report", std::string{}));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("run config: malformed JSON: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) { return run_config_from_json(slurp(path), path.parent_path()); }

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["task"] = to_string(c.network.task);
  j["network"] = json::parse(network_spec_to_json(c.network));
  if (!c.network_source.empty()) j["network_source"] = c.network_source;
  j["optimizer"] = {{"lr", c.schedule.initial}, {"decay_factor", c.schedule.factor}, {"decay_period", c.schedule.period}};
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["seeds"] = seeds_json(c.seeds);
  j["validation_fraction"] = c.validation_fraction;
  j["random_fps_seed"] = c.random_fps_seed;
  j["paths"] = {{"dataset", c.paths.dataset.string()},
                {"checkpoint", c.paths.checkpoint.string()},
                {"report", c.paths.report.string()}};
  return j.dump(2);
}

EvalMetrics evaluate(Model& model, std::span<const PointCloudSequence> sequences) {
  const NetworkSpec& spec = model.spec();
  if (sequences.empty()) throw std::invalid_argument("cannot evaluate an empty split");
  EvalMetrics m;
  m.task = spec.task;
  m.samples = sequences.size();
  std::vector<int> predictions, labels;
  double loss_sum = 0.0;
  for (const auto& seq : sequences) {
    const PointCloudSequence* one[] = {&seq};
    const Tensor logits = model.forward(one, {});
    const auto target = batch_labels(spec, one);
    const auto pred = argmax_rows(logits);
    loss_sum += cross_entropy_loss(logits, target).item() * static_cast<double>(target.size());
    predictions.insert(predictions.end(), pred.begin(), pred.end());
    labels.insert(labels.end(), target.begin(), target.end());
  }
  m.loss = loss_sum / static_cast<double>(labels.size());
  m.accuracy = accuracy(predictions, labels);
  if (spec.task == Task::segmentation) m.segmentation = segmentation_metrics(predictions, labels, spec.class_count);
  return m;
}

namespace {

json metrics_json(const EvalMetrics& m) {
  json j;
  j["samples"] = m.samples;
  j["loss"] = m.loss;
  j["accuracy"] = m.accuracy;
  if (m.task == Task::segmentation) {
    j["mean_iou"] = m.segmentation.mean_iou;
    json per_class = json::array();
    for (const auto& c : m.segmentation.per_class) {
      per_class.push_back({{"class", c.class_id},
                           {"present", c.present},
                           {"iou", c.iou},
                           {"tp", c.counts.true_positive},
                           {"fp", c.counts.false_positive},
                           {"fn", c.counts.false_negative}});
    }
    j["per_class"] = std::move(per_class);
  }
  return j;
}

}  // namespace

std::string metrics_to_json(const EvalMetrics& metrics) { return metrics_json(metrics).dump(2); }

void check_compatibility(const NetworkSpec& spec, const Dataset& dataset) {
  if (dataset.task != spec.task) {
    throw std::invalid_argument("dataset task " + to_string(dataset.task) + " does not match network task " +
                                to_string(spec.task));
  }
  auto check_split = [&](const std::vector<PointCloudSequence>& items, const char* split) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& s = items[i];
      const std::string where = std::string(split) + "[" + std::to_string(i) + "]: ";
      s.validate();
      if (s.feature_dim != spec.input_feature_dim) {
        throw std::invalid_argument(where + "feature dim " + std::to_string(s.feature_dim) + ", network expects " +
                                    std::to_string(spec.input_feature_dim));
      }
      if (s.frame_count != spec.frame_count) {
        throw std::invalid_argument(where + std::to_string(s.frame_count) + " frames, network expects " +
                                    std::to_string(spec.frame_count));
      }
      if (s.size() < spec.stages.front().cores) {
        throw std::invalid_argument(where + std::to_string(s.size()) + " points, first stage samples " +
                                    std::to_string(spec.stages.front().cores) + " cores");
      }
      if (!s.has_labels()) throw std::invalid_argument(where + "sequence carries no labels");
      for (int label : s.labels) {
        if (static_cast<std::size_t>(label) >= spec.class_count) {
          throw std::invalid_argument(where + "label " + std::to_string(label) + " outside " +
                                      std::to_string(spec.class_count) + " classes");
        }
      }
      if (spec.task == Task::classification) s.sequence_label();
    }
  };
  check_split(dataset.train, "train");
  check_split(dataset.test, "test");
  if (dataset.train.empty()) throw std::invalid_argument("dataset has no training sequences");
}

TrainResult train_model(const RunConfig& config, const Dataset& dataset, const EpochCallback& on_epoch) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  check_compatibility(config.network, dataset);
  const NetworkSpec& spec = config.network;

  const IndexSplit split = split_indices(dataset.train.size(), config.validation_fraction, config.seeds.data);
  std::vector<PointCloudSequence> validation_set;
  for (std::size_t i : split.validation) validation_set.push_back(dataset.train[i]);

  TrainResult result;
  result.model = make_model(spec, config.seeds.init);
  Model& model = *result.model;
  auto params = model.registry().parameters();
  AdamOptions adam_options;
  adam_options.schedule = config.schedule;
  AdamState adam = make_adam_state(params, adam_options);
  std::mt19937_64 augment(config.seeds.shuffle ^ 0x9e3779b97f4a7c15ull);

  std::vector<std::vector<double>> best = model.registry().snapshot();
  std::optional<double> best_score;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto batches = make_batches(split.train.size(), config.batch_size, config.seeds.shuffle + epoch);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (const auto& batch_idx : batches) {
      std::vector<const PointCloudSequence*> batch;
      std::vector<std::size_t> fps_seeds;
      for (std::size_t k : batch_idx) {
        const auto& seq = dataset.train[split.train[k]];
        batch.push_back(&seq);
        if (config.random_fps_seed) {
          fps_seeds.push_back(std::uniform_int_distribution<std::size_t>(0, seq.size() - 1)(augment));
        }
      }
      ForwardOptions options;
      options.training = true;
      options.fps_seeds = fps_seeds;
      model.registry().zero_grad();
      Tensor logits = model.forward(batch, options);
      Tensor loss = cross_entropy_loss(logits, batch_labels(spec, batch));
      loss.backward();
      adam_step(params, adam);
      loss_sum += loss.item() * static_cast<double>(batch.size());
      seen += batch.size();
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(seen);
    if (!validation_set.empty()) {
      record.validation_score = evaluate(model, validation_set).score();
      if (!best_score || *record.validation_score > *best_score) {
        best_score = record.validation_score;
        best = model.registry().snapshot();
        result.best_epoch = epoch;
      }
    } else {
      best = model.registry().snapshot();
      result.best_epoch = epoch;
    }
    if (!std::isfinite(record.train_loss)) throw std::runtime_error("training diverged: non-finite loss");
    result.curve.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  model.registry().restore(best);
  model.registry().zero_grad();

  result.train = evaluate(model, dataset.train);
  if (!validation_set.empty()) result.validation = evaluate(model, validation_set);
  if (!dataset.test.empty()) result.test = evaluate(model, dataset.test);

  json metadata;
  metadata["best_epoch"] = result.best_epoch;
  metadata["seeds"] = seeds_json(config.seeds);
  if (!config.paths.checkpoint.empty()) {
    if (config.paths.checkpoint.has_parent_path()) fs::create_directories(config.paths.checkpoint.parent_path());
    write_checkpoint(capture_checkpoint(model.registry(), network_spec_to_json(spec), metadata.dump()),
                     config.paths.checkpoint);
    result.checkpoint_hash = content_hash(config.paths.checkpoint);
  }

  json report;
  report["schema_version"] = kReportSchemaVersion;
  report["kind"] = "train";
  report["task"] = to_string(spec.task);
  report["config"] = json::parse(run_config_to_json(config));
  report["seeds"] = seeds_json(config.seeds);
  json curve = json::array();
  for (const auto& r : result.curve) {
    curve.push_back({{"epoch", r.epoch},
                     {"train_loss", r.train_loss},
                     {"validation_score", r.validation_score ? json(*r.validation_score) : json(nullptr)}});
  }
  report["loss_curve"] = std::move(curve);
  report["best_epoch"] = result.best_epoch;
  json final_metrics;
  final_metrics["train"] = metrics_json(result.train);
  final_metrics["validation"] = result.validation ? metrics_json(*result.validation) : json(nullptr);
  final_metrics["test"] = dataset.test.empty() ? json(nullptr) : metrics_json(result.test);
  report["final_metrics"] = std::move(final_metrics);
  report["checkpoint"] = {{"path", config.paths.checkpoint.string()}, {"hash", result.checkpoint_hash}};
  report["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  result.report_json = report.dump(2);
  if (!config.paths.report.empty()) write_text(config.paths.report, result.report_json);
  return result;
}

LoadedModel load_model(const fs::path& checkpoint) {
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  LoadedModel loaded;
  loaded.model = make_model(network_spec_from_json(ckpt.network_json), 0);
  load_into(ckpt, loaded.model->registry());
  loaded.checkpoint_hash = content_hash(checkpoint);
  loaded.metadata_json = ckpt.metadata_json;
  return loaded;
}

std::string eval_report(const LoadedModel& loaded, const fs::path& checkpoint, const Dataset& dataset,
                        const std::string& split, EvalMetrics* metrics_out) {
  const auto started = std::chrono::steady_clock::now();
  Model& model = *loaded.model;
  check_compatibility(model.spec(), dataset);
  if (split != "train" && split != "test") throw std::invalid_argument("unknown split '" + split + "'");
  const auto& items = split == "train" ? dataset.train : dataset.test;
  const EvalMetrics metrics = evaluate(model, items);
  if (metrics_out != nullptr) *metrics_out = metrics;
  json report;
  report["schema_version"] = kReportSchemaVersion;
  report["kind"] = "eval";
  report["task"] = to_string(model.spec().task);
  report["split"] = split;
  report["final_metrics"] = metrics_json(metrics);
  report["checkpoint"] = {{"path", checkpoint.string()}, {"hash", loaded.checkpoint_hash}};
  report["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report.dump(2);
}

std::string infer_json(Model& model, const PointCloudSequence& seq) {
  json out;
  if (model.spec().task == Task::classification) {
    const Tensor logits = classify(model, seq);
    const auto values = logits.data();
    std::size_t best = 0;
    for (std::size_t c = 1; c < values.size(); ++c) {
      if (values[c] > values[best]) best = c;
    }
    out["task"] = "classification";
    out["class"] = best;
    out["logits"] = std::vector<double>(values.begin(), values.end());
  } else {
    const auto classes = argmax_rows(segment(model, seq));
    out["task"] = "segmentation";
    out["points"] = classes.size();
    out["classes"] = classes;
  }
  return out.dump(2);
}

}  // namespace asta3d
