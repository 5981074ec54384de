#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "asta3d/anchors.hpp"
#include "asta3d/neighbors.hpp"
#include "asta3d/nn.hpp"
#include "asta3d/point_cloud.hpp"
#include "asta3d/tensor.hpp"

namespace asta3d {

struct AstaConvConfig {
  std::size_t in_channels = 1;    // c, feature width of the candidate points
  std::size_t embed_dim = 16;     // d, anchor feature width
  std::size_t out_channels = 16;  // c'
  std::vector<std::size_t> encode_hidden{16};
  std::vector<std::size_t> attend_hidden{16};
  bool mlp_batch_norm = true;
  bool attention_enabled = true;  // false swaps the softmax pooling for a channel max
  bool normalize_time = false;    // feed |dt| / (T - 1) instead of the raw frame gap
  double anchor_scale = 0.05;     // distance from core to each anchor
  RadiusSchedule radius;          // clamp_floor is forced to anchor_scale
};

/// Everything about one convolution that depends only on point positions:
/// anchors, their neighbor groups and the relative encodings of non-empty anchors.
struct ConvGeometry {
  std::size_t core_count = 0;
  AnchorSet anchors;
  std::vector<NeighborGroup> groups;        // core-major, kAnchorCount per core
  std::vector<std::size_t> valid_anchors;   // flat anchor ids (core * 4 + j) with neighbors
  std::vector<double> relative;             // [valid * 8 x 4]: dx, dy, dz, |dt|
  std::vector<std::size_t> sources;         // [valid * 8] global candidate rows
};

/// Per-channel softmax over the neighbor slots of every non-empty anchor.
struct AttentionWeights {
  Tensor weights;                          // [valid x 8 x d]
  std::vector<std::size_t> valid_anchors;  // same order as the first axis
};

ConvGeometry build_conv_geometry(const BatchedCloud& candidates, const BatchedCloud& cores, double anchor_scale,
                                 const RadiusSchedule& schedule, bool normalize_time, bool use_grid = true);

/// sum_k h[k] * softmax_k(logits)[k] over consecutive groups of `group` rows.
Tensor attentive_pool(const Tensor& encodings, const Tensor& logits, std::size_t group,
                      Tensor* weights_out = nullptr);
/// Channel-wise max over consecutive groups of `group` rows.
Tensor max_pool_groups(const Tensor& encodings, std::size_t group);

/// Anchor-based spatio-temporal attention convolution.
///
/// Neighbors found around four tetrahedral anchors per core are encoded by a
/// shared MLP, weighted by a second MLP with a softmax over the neighbor slots,
/// summed into one feature per anchor, and the four anchor features are mixed
/// by a 1x4 kernel into the core feature, followed by ReLU. Anchors without
/// neighbors contribute an exact zero and no parameter gradient.
class AstaConvLayer {
 public:
  AstaConvLayer() = default;
  AstaConvLayer(ParameterRegistry& registry, const std::string& name, const AstaConvConfig& config, Rng& rng);

  const AstaConvConfig& config() const { return config_; }

  ConvGeometry geometry(const BatchedCloud& candidates, const BatchedCloud& cores) const;

  /// Encodes relative geometry plus gathered features; returns [cores * 4 x d].
  Tensor attentive_embed(const Tensor& features, const ConvGeometry& geometry, bool training,
                         AttentionWeights* weights_out = nullptr);

  /// Runs both MLPs on explicit encodings [groups * group x (4 + c)] and pools
  /// each run of `group` rows into one [groups x d] row.
  Tensor embed_encodings(const Tensor& phi, std::size_t group, bool training, Tensor* weights_out = nullptr);

  /// ReLU(sum_j e_j W_j + b) for e of shape [cores * 4 x d]; returns [cores x c'].
  Tensor anchor_conv(const Tensor& anchor_features) const;

  Tensor forward(const Tensor& features, const BatchedCloud& candidates, const BatchedCloud& cores, bool training);

  Mlp& encoder() { return encode_; }
  Mlp& attention() { return attend_; }
  Tensor& kernel() { return kernel_; }
  Tensor& bias() { return bias_; }

 private:
  AstaConvConfig config_;
  Mlp encode_;
  Mlp attend_;
  Tensor kernel_;  // [4 x d x c']
  Tensor bias_;    // [c']
};

}  // namespace asta3d
