#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "asta3d/asta_conv.hpp"
#include "asta3d/ops.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "suites.hpp"

using namespace asta3d;
using namespace asta3d::testing;

namespace {

AstaConvConfig small_config(std::size_t c, std::size_t d, std::size_t out, bool batch_norm = false) {
  AstaConvConfig cfg;
  cfg.in_channels = c;
  cfg.embed_dim = d;
  cfg.out_channels = out;
  cfg.encode_hidden = {d};
  cfg.attend_hidden = {d};
  cfg.mlp_batch_norm = batch_norm;
  cfg.anchor_scale = 0.2;
  cfg.radius = RadiusSchedule{0.5, 0.5, 0.6, 2, 0, 0.0};
  return cfg;
}

BatchedCloud cloud_of(std::vector<Vec3> positions, std::vector<int> timestamps, std::size_t frames) {
  BatchedCloud c;
  c.positions = std::move(positions);
  c.timestamps = std::move(timestamps);
  c.offsets = {0, c.positions.size()};
  c.frame_count = frames;
  return c;
}

// Random two-frame cloud in [-0.5, 0.5]^3 with the first `cores` points as cores.
struct Instance {
  BatchedCloud points;
  BatchedCloud cores;
  Tensor features;
};

Instance random_instance(std::mt19937_64& rng, std::size_t per_frame, std::size_t cores, std::size_t c) {
  std::vector<Vec3> pos;
  std::vector<int> ts;
  for (int f = 0; f < 2; ++f) {
    for (std::size_t i = 0; i < per_frame; ++i) {
      pos.push_back(random_point(rng, 0.5));
      ts.push_back(f);
    }
  }
  Instance inst;
  inst.points = cloud_of(pos, ts, 2);
  inst.cores = cloud_of({pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(cores)},
                        {ts.begin(), ts.begin() + static_cast<std::ptrdiff_t>(cores)}, 2);
  inst.features = random_tensor(rng, {pos.size(), c});
  return inst;
}

void set_values(Tensor& t, const std::vector<double>& values) {
  ASSERT_EQ(t.numel(), values.size());
  std::copy(values.begin(), values.end(), t.mutable_data().begin());
}

std::vector<double> identity(std::size_t rows, std::size_t cols) {
  std::vector<double> m(rows * cols, 0.0);
  for (std::size_t i = 0; i < std::min(rows, cols); ++i) m[i * cols + i] = 1.0;
  return m;
}

}  // namespace

TEST(AttentiveEmbed, TwoNeighborHandOracle) {
  // c = 0 and d = 4 with no hidden layers: encode is ReLU(I phi) = phi for
  // positive phi, and attend returns h itself, so per channel
  // e = (h1 exp(h1) + h2 exp(h2)) / (exp(h1) + exp(h2)).
  AstaConvConfig cfg = small_config(0, 4, 2);
  cfg.encode_hidden = {};
  cfg.attend_hidden = {};
  ParameterRegistry reg;
  Rng rng(1);
  AstaConvLayer layer(reg, "conv", cfg, rng);
  set_values(layer.encoder().linears()[0].weight(), identity(4, 4));
  set_values(layer.encoder().linears()[0].bias(), std::vector<double>(4, 0.0));
  std::vector<double> attend(8 * 4, 0.0);  // rows 0..3 read phi, rows 4..7 read h
  for (std::size_t i = 0; i < 4; ++i) attend[(4 + i) * 4 + i] = 1.0;
  set_values(layer.attention().linears()[0].weight(), attend);
  set_values(layer.attention().linears()[0].bias(), std::vector<double>(4, 0.0));

  const std::vector<double> h1{0.1, 0.7, 0.3, 1.0};
  const std::vector<double> h2{0.4, 0.2, 0.3, 2.5};
  std::vector<double> phi(h1);
  phi.insert(phi.end(), h2.begin(), h2.end());
  Tensor weights;
  Tensor e = layer.embed_encodings(Tensor::from({2, 4}, phi), 2, false, &weights);
  ASSERT_EQ(e.shape(), (Shape{1, 4}));
  for (std::size_t ch = 0; ch < 4; ++ch) {
    const double a = std::exp(h1[ch]), b = std::exp(h2[ch]);
    EXPECT_NEAR(e[ch], (h1[ch] * a + h2[ch] * b) / (a + b), 1e-9) << "channel " << ch;
    EXPECT_NEAR(weights[ch], a / (a + b), 1e-9);
  }
  // Equal encodings in channel 2 split the weight evenly.
  EXPECT_NEAR(weights[2], 0.5, 1e-12);
  EXPECT_NEAR(e[2], 0.3, 1e-12);
}

TEST(AttentiveEmbed, IdenticalNeighborsGiveUniformWeights) {
  ParameterRegistry reg;
  Rng rng(2);
  AstaConvLayer layer(reg, "conv", small_config(3, 6, 4), rng);
  std::mt19937_64 gen(3);
  const auto row = uniform_values(gen, 7);
  std::vector<double> phi;
  for (std::size_t k = 0; k < kNeighborSlots; ++k) phi.insert(phi.end(), row.begin(), row.end());
  Tensor weights;
  Tensor e = layer.embed_encodings(Tensor::from({kNeighborSlots, 7}, phi), kNeighborSlots, false, &weights);
  Tensor h = layer.encoder().forward(Tensor::from({1, 7}, row), false);
  for (double w : weights.data()) EXPECT_NEAR(w, 1.0 / kNeighborSlots, 1e-15);
  EXPECT_LT(max_abs_diff(e.data(), h.data()), 1e-12);
}

TEST(AttentiveEmbed, RejectsWrongFeatureWidth) {
  ParameterRegistry reg;
  Rng rng(4);
  AstaConvLayer layer(reg, "conv", small_config(3, 4, 4), rng);
  EXPECT_THROW(layer.embed_encodings(Tensor::zeros({8, 6}), 8, false), DimensionError);
  std::mt19937_64 gen(5);
  auto inst = random_instance(gen, 10, 2, 2);
  EXPECT_THROW(layer.attentive_embed(inst.features, layer.geometry(inst.points, inst.cores), false), DimensionError);
}

TEST(AnchorConv, MatchesContractionOracle) {
  const auto r = anchor_conv_oracle_suite(100, 6);
  EXPECT_LT(r.worst, 1e-12) << r.where;
}

TEST(AnchorConv, ZeroInputAndAveragingKernel) {
  ParameterRegistry reg;
  Rng rng(7);
  AstaConvLayer layer(reg, "conv", small_config(1, 3, 3), rng);
  const Tensor zero_out = layer.anchor_conv(Tensor::zeros({8, 3}));
  for (double v : zero_out.data()) EXPECT_EQ(v, 0.0);

  std::vector<double> kernel;
  for (std::size_t j = 0; j < kAnchorCount; ++j) {
    for (double v : identity(3, 3)) kernel.push_back(v / 4.0);
  }
  set_values(layer.kernel(), kernel);
  std::mt19937_64 gen(8);
  Tensor e = random_tensor(gen, {kAnchorCount, 3});
  Tensor y = layer.anchor_conv(e);
  for (std::size_t ch = 0; ch < 3; ++ch) {
    double mean = 0.0;
    for (std::size_t j = 0; j < kAnchorCount; ++j) mean += e[j * 3 + ch] / 4.0;
    EXPECT_NEAR(y[ch], std::max(0.0, mean), 1e-15);
  }
  EXPECT_THROW(layer.anchor_conv(Tensor::zeros({6, 3})), DimensionError);
  EXPECT_THROW(layer.anchor_conv(Tensor::zeros({4, 2})), DimensionError);
}

TEST(AstaConv, SingleNeighborMatchesComposedOracle) {
  // One core with one candidate at the core: every anchor sees the candidate
  // in all eight slots, so e_j = encode(phi_j).
  AstaConvConfig cfg = small_config(2, 3, 2);
  cfg.encode_hidden = {};
  ParameterRegistry reg;
  Rng rng(9);
  AstaConvLayer layer(reg, "conv", cfg, rng);
  std::mt19937_64 gen(10);
  set_values(layer.bias(), uniform_values(gen, 2));
  const Vec3 core{0.3, -0.1, 0.2};
  auto pts = cloud_of({core}, {0}, 1);
  const std::vector<double> f{0.4, -0.6};
  Tensor y = layer.forward(Tensor::from({1, 2}, f), pts, pts, false);

  const auto anchors = make_anchors(std::vector<Vec3>{core}, std::vector<int>{0}, cfg.anchor_scale);
  const auto w = layer.encoder().linears()[0].weight().data();
  const auto b = layer.encoder().linears()[0].bias().data();
  std::vector<double> e;
  for (std::size_t j = 0; j < kAnchorCount; ++j) {
    const Vec3 rel = core - anchors.positions[0][j];
    const double phi[6] = {rel.x, rel.y, rel.z, 0.0, f[0], f[1]};
    for (std::size_t o = 0; o < 3; ++o) {
      double s = b[o];
      for (std::size_t i = 0; i < 6; ++i) s += phi[i] * w[i * 3 + o];
      e.push_back(std::max(0.0, s));
    }
  }
  const auto expected = anchor_conv_oracle(e, layer.kernel().data(), layer.bias().data(), 1, 3, 2);
  EXPECT_LT(max_abs_diff(y.data(), expected), 1e-12);
}

TEST(AstaConv, AllEmptyAnchorsGiveReluOfBias) {
  ParameterRegistry reg;
  Rng rng(11);
  AstaConvLayer layer(reg, "conv", small_config(1, 4, 3), rng);
  set_values(layer.bias(), {0.5, -0.25, 0.0});
  auto cores = cloud_of({{0, 0, 0}, {1, 1, 1}}, {0, 0}, 1);
  auto far = cloud_of({{50, 50, 50}}, {0}, 1);
  Tensor y = layer.forward(Tensor::from({1, 1}, {1.0}), far, cores, false);
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()),
            (std::vector<double>{0.5, 0.0, 0.0, 0.5, 0.0, 0.0}));
}

TEST(AstaConv, PointOrderDoesNotMatterWithFullTightClusters) {
  // Eight points hug each anchor, far from the other anchors; any input order
  // yields the same qualifying set per anchor.
  AstaConvConfig cfg = small_config(2, 4, 3);
  cfg.anchor_scale = 0.5;
  cfg.radius = RadiusSchedule{0.5, 1.0, 1.0, 1, 0, 0.0};
  ParameterRegistry reg;
  Rng rng(12);
  AstaConvLayer layer(reg, "conv", cfg, rng);
  std::mt19937_64 gen(13);
  const Vec3 core{0.1, 0.2, -0.3};
  const auto anchors = make_anchors(std::vector<Vec3>{core}, std::vector<int>{0}, cfg.anchor_scale);
  std::vector<Vec3> pos;
  for (std::size_t j = 0; j < kAnchorCount; ++j) {
    for (std::size_t k = 0; k < kNeighborSlots; ++k) pos.push_back(anchors.positions[0][j] + random_point(gen, 0.01));
  }
  const auto feats = uniform_values(gen, pos.size() * 2);
  const auto cores = cloud_of({core}, {0}, 1);
  Tensor base = layer.forward(Tensor::from({pos.size(), 2}, feats), cloud_of(pos, std::vector<int>(pos.size(), 0), 1),
                              cores, false);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::size_t> perm(pos.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<Vec3> p2;
    std::vector<double> f2;
    for (auto i : perm) {
      p2.push_back(pos[i]);
      f2.insert(f2.end(), feats.begin() + static_cast<std::ptrdiff_t>(2 * i),
                feats.begin() + static_cast<std::ptrdiff_t>(2 * i + 2));
    }
    Tensor y = layer.forward(Tensor::from({pos.size(), 2}, f2), cloud_of(p2, std::vector<int>(p2.size(), 0), 1),
                             cores, false);
    EXPECT_LT(max_abs_diff(y.data(), base.data()), 1e-9);
  }
}

TEST(AstaConvInvariance, AttentionWeightsNormalizePerChannel) {
  const auto r = attention_normalization_suite(100, 14);
  EXPECT_LE(r.worst, 1e-6) << r.where;
}

TEST(AstaConvInvariance, RigidTranslation) {
  const auto r = translation_invariance_suite(100, 15);
  EXPECT_LE(r.worst, 1e-9) << r.where;
}

TEST(AstaConvInvariance, TimeShift) {
  const auto r = time_shift_invariance_suite(100, 16);
  EXPECT_LE(r.worst, 1e-9) << r.where;
}

TEST(AstaConvInvariance, NeighborSlotPermutation) {
  const auto r = slot_permutation_suite(100, 17);
  EXPECT_LE(r.worst, 1e-9) << r.where;
}

TEST(AstaConvInvariance, EmptyAnchorsAreZeroWithoutParameterGradient) {
  const auto r = zero_trick_suite(100, 18);
  EXPECT_EQ(r.worst, 0.0) << r.where;
}

TEST(AstaConvGradients, FiniteDifferencesOverLayerParameters) {
  const auto r = conv_gradient_suite(100, 19);
  EXPECT_EQ(r.instances, 100u);
  EXPECT_LT(r.worst, 1e-4) << r.where;
}

TEST(AttentiveEmbed, TwoNeighborClosedFormOverRandomInputs) {
  const auto r = two_neighbor_embed_suite(200, 20);
  EXPECT_LT(r.worst, 1e-9) << r.where;
}
