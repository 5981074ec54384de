#include "asta3d/asta_conv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <stdexcept>

#include "asta3d/ops.hpp"
#include "asta3d/parallel.hpp"

namespace asta3d {

ConvGeometry build_conv_geometry(const BatchedCloud& candidates, const BatchedCloud& cores, double anchor_scale,
                                 const RadiusSchedule& schedule, bool normalize_time, bool use_grid) {
  if (candidates.batch_size() != cores.batch_size()) {
    throw std::invalid_argument("candidate and core clouds hold different batch sizes");
  }
  ConvGeometry geo;
  geo.core_count = cores.size();
  geo.anchors = make_anchors(cores.positions, cores.timestamps, anchor_scale);
  geo.groups.resize(geo.core_count * kAnchorCount);

  RadiusSchedule sched = schedule;
  sched.clamp_floor = anchor_scale;
  const std::vector<double> radius = sched.table();
  const double reach = *std::max_element(radius.begin(), radius.end());

  parallel_for(cores.batch_size(), [&](std::size_t b) {
    const std::size_t begin = candidates.offsets[b];
    const std::size_t count = candidates.sample_size(b);
    const std::span<const Vec3> pos(candidates.positions.data() + begin, count);
    const std::span<const int> ts(candidates.timestamps.data() + begin, count);
    std::optional<GridIndex> grid;
    if (use_grid) grid.emplace(pos, reach);
    for (std::size_t i = cores.offsets[b]; i < cores.offsets[b + 1]; ++i) {
      for (std::size_t j = 0; j < kAnchorCount; ++j) {
        const Vec3& a = geo.anchors.positions[i][j];
        const int t = geo.anchors.timestamps[i];
        NeighborGroup g = grid ? grid->radius_query(a, t, pos, ts, radius) : radius_query(a, t, pos, ts, radius);
        for (auto& slot : g.slots) slot.index += begin;
        geo.groups[i * kAnchorCount + j] = g;
      }
    }
  });

  const double time_scale =
      normalize_time && candidates.frame_count > 1 ? 1.0 / static_cast<double>(candidates.frame_count - 1) : 1.0;
  for (std::size_t a = 0; a < geo.groups.size(); ++a) {
    const auto& g = geo.groups[a];
    if (g.valid_count == 0) continue;
    geo.valid_anchors.push_back(a);
    const Vec3& anchor = geo.anchors.positions[a / kAnchorCount][a % kAnchorCount];
    const int t = geo.anchors.timestamps[a / kAnchorCount];
    for (const auto& slot : g.slots) {
      const Vec3 d = slot.position - anchor;
      geo.relative.insert(geo.relative.end(),
                          {d.x, d.y, d.z, time_scale * static_cast<double>(std::abs(slot.timestamp - t))});
      geo.sources.push_back(slot.index);
    }
  }
  return geo;
}

Tensor attentive_pool(const Tensor& encodings, const Tensor& logits, std::size_t group, Tensor* weights_out) {
  if (encodings.shape() != logits.shape() || encodings.rank() != 2 || group == 0 ||
      encodings.dim(0) % group != 0) {
    throw DimensionError("attentive_pool: encodings " + to_string(encodings.shape()) + " and logits " +
                         to_string(logits.shape()) + " do not split into groups of " + std::to_string(group));
  }
  const std::size_t groups = encodings.dim(0) / group, d = encodings.dim(1);
  Tensor w = softmax(reshape(logits, {groups, group, d}), 1);
  if (weights_out != nullptr) *weights_out = w;
  return sum_axis(mul(reshape(encodings, {groups, group, d}), w), 1);
}

Tensor max_pool_groups(const Tensor& encodings, std::size_t group) {
  if (encodings.rank() != 2 || group == 0 || encodings.dim(0) % group != 0) {
    throw DimensionError("max_pool_groups: " + to_string(encodings.shape()) + " does not split into groups of " +
                         std::to_string(group));
  }
  const std::size_t groups = encodings.dim(0) / group, d = encodings.dim(1);
  return max_axis(reshape(encodings, {groups, group, d}), 1);
}

AstaConvLayer::AstaConvLayer(ParameterRegistry& registry, const std::string& name, const AstaConvConfig& config,
                             Rng& rng)
    : config_(config) {
  if (!(config.anchor_scale > 0.0)) throw std::invalid_argument(name + ": anchor scale must be positive");
  config_.radius.clamp_floor = config.anchor_scale;
  const std::size_t phi_dim = 4 + config.in_channels;

  MlpConfig enc{config.encode_hidden, config.mlp_batch_norm, true};
  enc.widths.push_back(config.embed_dim);
  encode_ = Mlp(registry, name + ".encode", phi_dim, enc, rng);

  MlpConfig att{config.attend_hidden, config.mlp_batch_norm, false};
  att.widths.push_back(config.embed_dim);
  if (config.attention_enabled) attend_ = Mlp(registry, name + ".attend", phi_dim + config.embed_dim, att, rng);

  const std::size_t fan_in = kAnchorCount * config.embed_dim;
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> w(fan_in * config.out_channels);
  for (auto& v : w) v = dist(rng);
  kernel_ = registry.add_parameter(name + ".kernel", {kAnchorCount, config.embed_dim, config.out_channels}, std::move(w));
  bias_ = registry.add_parameter(name + ".bias", {config.out_channels}, std::vector<double>(config.out_channels, 0.0));
}

ConvGeometry AstaConvLayer::geometry(const BatchedCloud& candidates, const BatchedCloud& cores) const {
  return build_conv_geometry(candidates, cores, config_.anchor_scale, config_.radius, config_.normalize_time);
}

Tensor AstaConvLayer::embed_encodings(const Tensor& phi, std::size_t group, bool training, Tensor* weights_out) {
  if (phi.rank() != 2 || phi.dim(1) != 4 + config_.in_channels) {
    throw DimensionError("relative encoding " + to_string(phi.shape()) + " does not have 4 + " +
                         std::to_string(config_.in_channels) + " columns");
  }
  Tensor h = encode_.forward(phi, training);
  if (!config_.attention_enabled) return max_pool_groups(h, group);
  Tensor logits = attend_.forward(concat_cols(phi, h), training);
  return attentive_pool(h, logits, group, weights_out);
}

Tensor AstaConvLayer::attentive_embed(const Tensor& features, const ConvGeometry& geometry, bool training,
                                      AttentionWeights* weights_out) {
  if (features.rank() != 2 || features.dim(1) != config_.in_channels) {
    throw DimensionError("input features " + to_string(features.shape()) + " do not have " +
                         std::to_string(config_.in_channels) + " channels");
  }
  const std::size_t anchors = geometry.core_count * kAnchorCount;
  const std::size_t valid = geometry.valid_anchors.size();
  if (valid == 0) {
    if (weights_out != nullptr) *weights_out = {};
    return Tensor::zeros({anchors, config_.embed_dim});
  }
  const std::size_t rows = valid * kNeighborSlots;
  Tensor rel = Tensor::from({rows, 4}, geometry.relative);
  Tensor phi = concat_cols(rel, gather_rows(features, geometry.sources));
  Tensor w;
  Tensor pooled = embed_encodings(phi, kNeighborSlots, training, weights_out != nullptr ? &w : nullptr);
  if (weights_out != nullptr) *weights_out = {w, geometry.valid_anchors};
  return scatter_rows(pooled, geometry.valid_anchors, anchors);
}

Tensor AstaConvLayer::anchor_conv(const Tensor& anchor_features) const {
  const std::size_t d = config_.embed_dim;
  if (anchor_features.rank() != 2 || anchor_features.dim(1) != d || anchor_features.dim(0) % kAnchorCount != 0) {
    throw DimensionError("anchor features " + to_string(anchor_features.shape()) + " are not [cores*4 x " +
                         std::to_string(d) + "]");
  }
  const std::size_t cores = anchor_features.dim(0) / kAnchorCount;
  Tensor flat = reshape(anchor_features, {cores, kAnchorCount * d});
  Tensor w = reshape(kernel_, {kAnchorCount * d, config_.out_channels});
  return relu(add_row_bias(matmul(flat, w), bias_));
}

Tensor AstaConvLayer::forward(const Tensor& features, const BatchedCloud& candidates, const BatchedCloud& cores,
                              bool training) {
  if (features.rank() != 2 || features.dim(0) != candidates.size()) {
    throw DimensionError("features " + to_string(features.shape()) + " do not match " +
                         std::to_string(candidates.size()) + " candidate points");
  }
  return anchor_conv(attentive_embed(features, geometry(candidates, cores), training));
}

}  // namespace asta3d
