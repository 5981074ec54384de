#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "asta3d/asta_conv.hpp"
#include "asta3d/networks.hpp"
#include "asta3d/neighbors.hpp"
#include "asta3d/ops.hpp"
#include "asta3d/sampling.hpp"
#include "asta3d/synthetic.hpp"

using namespace asta3d;

namespace {

struct Cloud {
  std::vector<Vec3> positions;
  std::vector<int> timestamps;
};

Cloud random_cloud(std::size_t per_frame, int frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Cloud c;
  for (int t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < per_frame; ++i) {
      c.positions.push_back({u(rng), u(rng), u(rng)});
      c.timestamps.push_back(t);
    }
  }
  return c;
}

BatchedCloud batched(const Cloud& c, std::size_t count, std::size_t frames) {
  BatchedCloud b;
  b.positions.assign(c.positions.begin(), c.positions.begin() + static_cast<std::ptrdiff_t>(count));
  b.timestamps.assign(c.timestamps.begin(), c.timestamps.begin() + static_cast<std::ptrdiff_t>(count));
  b.offsets = {0, count};
  b.frame_count = frames;
  return b;
}

const double kRadii[] = {0.2, 0.25, 0.3};

}  // namespace

static void BM_FarthestPointSample(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Cloud c = random_cloud(n, 1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(farthest_point_sample(c.positions, n / 4));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FarthestPointSample)->RangeMultiplier(4)->Range(256, 4096)->Complexity(benchmark::oNSquared);

static void BM_RadiusQueryNaive(benchmark::State& state) {
  const Cloud c = random_cloud(static_cast<std::size_t>(state.range(0)), 3, 2);
  std::size_t q = 0;
  for (auto _ : state) {
    const Vec3& a = c.positions[q++ % c.positions.size()];
    benchmark::DoNotOptimize(radius_query(a, 1, c.positions, c.timestamps, kRadii));
  }
}
BENCHMARK(BM_RadiusQueryNaive)->RangeMultiplier(4)->Range(256, 16384);

static void BM_RadiusQueryGrid(benchmark::State& state) {
  const Cloud c = random_cloud(static_cast<std::size_t>(state.range(0)), 3, 2);
  const GridIndex grid(c.positions, 0.3);
  std::size_t q = 0;
  for (auto _ : state) {
    const Vec3& a = c.positions[q++ % c.positions.size()];
    benchmark::DoNotOptimize(grid.radius_query(a, 1, c.positions, c.timestamps, kRadii));
  }
}
BENCHMARK(BM_RadiusQueryGrid)->RangeMultiplier(4)->Range(256, 16384);

static void BM_AstaConvForwardBackward(benchmark::State& state) {
  const auto points = static_cast<std::size_t>(state.range(0));
  const Cloud c = random_cloud(points / 2, 2, 3);
  const BatchedCloud candidates = batched(c, points, 2);
  const BatchedCloud cores = batched(c, points / 4, 2);
  AstaConvConfig cfg;
  cfg.in_channels = 16;
  cfg.embed_dim = 16;
  cfg.out_channels = 32;
  cfg.anchor_scale = 0.1;
  cfg.radius = RadiusSchedule{0.5, 0.5, 0.6, 2, 0, 0.0};
  ParameterRegistry reg;
  Rng rng(4);
  AstaConvLayer layer(reg, "conv", cfg, rng);
  std::mt19937_64 gen(5);
  std::normal_distribution<double> normal;
  std::vector<double> values(points * 16);
  for (double& v : values) v = normal(gen);
  const Tensor features = Tensor::from({points, 16}, values);
  for (auto _ : state) {
    reg.zero_grad();
    const Tensor loss = sum(layer.forward(features, candidates, cores, true));
    loss.backward();
    benchmark::DoNotOptimize(loss.data().data());
  }
}
BENCHMARK(BM_AstaConvForwardBackward)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_ClassifierInference(benchmark::State& state) {
  NetworkSpec spec;
  spec.task = Task::classification;
  spec.class_count = 4;
  spec.input_feature_dim = 1;
  spec.frame_count = 8;
  spec.radius_adjustment = 0.8;
  spec.stages = {{128, 16, 8, {8}, {8}, std::nullopt},
                 {32, 32, 16, {16}, {16}, std::nullopt},
                 {8, 64, 32, {32}, {32}, std::nullopt}};
  spec.head_hidden = 32;
  auto model = make_model(spec, 1);
  SyntheticTaskSpec data;
  data.classes = 4;
  data.frames = 8;
  data.points_per_frame = 64;
  data.sequences = 1;
  const auto seq = generate(data)[0];
  for (auto _ : state) benchmark::DoNotOptimize(classify(*model, seq));
}
BENCHMARK(BM_ClassifierInference)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
