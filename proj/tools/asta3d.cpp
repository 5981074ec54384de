#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "asta3d/allocator.hpp"
#include "asta3d/dataset.hpp"
#include "asta3d/sequence_io.hpp"
#include "asta3d/trainer.hpp"

namespace fs = std::filesystem;
using namespace asta3d;

namespace {

struct GenerateArgs {
  std::string config;
  std::string task = "motion-classification";
  std::optional<std::uint64_t> seed;
  std::size_t train = 200;
  std::size_t test = 40;
  std::string out;
  bool force = false;
};

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string data;
  std::string checkpoint;
  std::string out;
  std::optional<std::size_t> epochs;
  bool random_fps_seed = false;
  bool quiet = false;
};

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  std::string out;
};

struct InferArgs {
  std::string checkpoint;
  std::string input;
  std::string out;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text << '\n';
    return;
  }
  const fs::path path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write " + out);
  file << text << '\n';
}

void run_generate(const GenerateArgs& a) {
  SyntheticTaskSpec spec;
  std::size_t train = a.train, test = a.test;
  if (!a.config.empty()) {
    const std::string text = read_file(a.config);
    spec = synthetic_spec_from_json(text);
    const auto j = nlohmann::json::parse(text);
    train = j.value("train_sequences", train);
    test = j.value("test_sequences", test);
  } else {
    spec.task = parse_synthetic_task(a.task);
    if (spec.task == SyntheticTask::blob_segmentation) {
      spec.classes = 2;
      spec.frames = 3;
      spec.points_per_frame = 256;
    }
  }
  if (a.seed) spec.seed = *a.seed;
  const Dataset dataset = generate_dataset(spec, train, test);
  write_dataset(dataset, a.out, a.force, synthetic_spec_to_json(spec));
  std::cerr << "wrote " << dataset.train.size() << " train / " << dataset.test.size() << " test sequences to "
            << a.out << '\n';
}

void run_train(const TrainArgs& a) {
  RunConfig config = load_run_config(a.config);
  if (a.seed) config.seeds = {*a.seed, *a.seed, *a.seed};
  if (!a.data.empty()) config.paths.dataset = a.data;
  if (!a.checkpoint.empty()) config.paths.checkpoint = a.checkpoint;
  if (!a.out.empty()) config.paths.report = a.out;
  if (a.epochs) config.epochs = *a.epochs;
  if (a.random_fps_seed) config.random_fps_seed = true;
  config.validate();
  if (config.paths.dataset.empty()) throw std::invalid_argument("no dataset path (set paths.dataset or --data)");
  const Dataset dataset = read_dataset(config.paths.dataset);
  check_compatibility(config.network, dataset);
  EpochCallback progress;
  if (!a.quiet) {
    progress = [&](const EpochRecord& r) {
      std::cerr << "epoch " << r.epoch << "/" << config.epochs << "  loss " << r.train_loss;
      if (r.validation_score) std::cerr << "  val " << *r.validation_score;
      std::cerr << '\n';
    };
  }
  const TrainResult result = train_model(config, dataset, progress);
  if (config.paths.report.empty()) std::cout << result.report_json << '\n';
  std::cerr << "train score " << result.train.score();
  if (!dataset.test.empty()) std::cerr << ", test score " << result.test.score();
  std::cerr << '\n';
}

void run_eval(const EvalArgs& a) {
  const LoadedModel loaded = load_model(a.checkpoint);
  const Dataset dataset = read_dataset(a.data);
  emit(eval_report(loaded, a.checkpoint, dataset, a.split), a.out);
}

void run_infer(const InferArgs& a) {
  const LoadedModel loaded = load_model(a.checkpoint);
  const PointCloudSequence seq = read_sequence(a.input);
  emit(infer_json(*loaded.model, seq), a.out);
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Spatio-temporal point cloud sequence networks"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset directory");
  generate->add_option("--config", gen.config, "Generator JSON (task fields plus train_sequences/test_sequences)");
  generate->add_option("--task", gen.task, "motion-classification or blob-segmentation (without --config)");
  generate->add_option("--seed", gen.seed, "Generator seed");
  generate->add_option("--train", gen.train, "Training sequences (without --config)");
  generate->add_option("--test", gen.test, "Test sequences (without --config)");
  generate->add_option("--out", gen.out, "Output directory")->required();
  generate->add_flag("--force", gen.force, "Overwrite an existing dataset");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train a network from a run config");
  train->add_option("--config", tr.config, "Run config JSON")->required();
  train->add_option("--seed", tr.seed, "Use N for the data, init and shuffle seeds");
  train->add_option("--data", tr.data, "Dataset directory (overrides paths.dataset)");
  train->add_option("--checkpoint", tr.checkpoint, "Checkpoint output (overrides paths.checkpoint)");
  train->add_option("--out", tr.out, "Report output (overrides paths.report)");
  train->add_option("--epochs", tr.epochs, "Override the epoch count");
  train->add_flag("--random-fps-seed", tr.random_fps_seed, "Random first FPS pick per training sample");
  train->add_flag("--quiet", tr.quiet, "No per-epoch progress");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  eval->add_option("--data", ev.data, "Dataset directory")->required();
  eval->add_option("--split", ev.split, "train or test")->check(CLI::IsMember({"train", "test"}));
  eval->add_option("--out", ev.out, "Report output (stdout when absent)");

  InferArgs in;
  auto* infer = app.add_subcommand("infer", "Predict for one sequence file");
  infer->add_option("--checkpoint", in.checkpoint, "Checkpoint file")->required();
  infer->add_option("--input", in.input, "Sequence file")->required();
  infer->add_option("--out", in.out, "Prediction output (stdout when absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (generate->parsed()) run_generate(gen);
    if (train->parsed()) run_train(tr);
    if (eval->parsed()) run_eval(ev);
    if (infer->parsed()) run_infer(in);
  } catch (const std::exception& e) {
    std::cerr << "asta3d: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
