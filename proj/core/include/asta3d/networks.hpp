#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "asta3d/asta_conv.hpp"
#include "asta3d/interpolation.hpp"
#include "asta3d/network_spec.hpp"
#include "asta3d/nn.hpp"
#include "asta3d/point_cloud.hpp"

namespace asta3d {

struct ForwardOptions {
  bool training = false;
  /// Optional per-sample FPS seed indices (augmentation); empty means index 0.
  std::span<const std::size_t> fps_seeds;
};

/// A network built from a NetworkSpec. All parameters and BatchNorm buffers
/// live in registry(); parameter names and order depend only on the NetworkSpec.
class Model {
 public:
  virtual ~Model() = default;

  /// Classification: [batch x classes]. Segmentation: [total points x classes],
  /// rows in input order, samples concatenated.
  virtual Tensor forward(std::span<const PointCloudSequence* const> batch, const ForwardOptions& options) = 0;

  const NetworkSpec& spec() const { return spec_; }
  ParameterRegistry& registry() { return registry_; }
  const ParameterRegistry& registry() const { return registry_; }

 protected:
  explicit Model(NetworkSpec spec) : spec_(std::move(spec)) {}
  Tensor input_features(std::span<const PointCloudSequence* const> batch) const;

  NetworkSpec spec_;
  ParameterRegistry registry_;
};

class ClassificationNet final : public Model {
 public:
  ClassificationNet(const NetworkSpec& spec, std::uint64_t init_seed);
  Tensor forward(std::span<const PointCloudSequence* const> batch, const ForwardOptions& options) override;

  Linear& output_layer() { return fc_out_; }

 private:
  std::vector<AstaConvLayer> convs_;
  std::vector<BatchNorm> norms_;
  Linear fc_hidden_;
  Linear fc_out_;
};

class SegmentationNet final : public Model {
 public:
  SegmentationNet(const NetworkSpec& spec, std::uint64_t init_seed);
  Tensor forward(std::span<const PointCloudSequence* const> batch, const ForwardOptions& options) override;

 private:
  std::vector<AstaConvLayer> convs_;
  std::vector<BatchNorm> norms_;
  std::vector<AstaConvLayer> up_convs_;
  std::vector<BatchNorm> up_norms_;
  std::vector<Mlp> up_mlps_;
  Linear head_;
};

std::unique_ptr<Model> make_model(const NetworkSpec& spec, std::uint64_t init_seed);

/// Inference-mode logits for one sequence: [class_count].
Tensor classify(Model& model, const PointCloudSequence& seq);
/// Inference-mode per-point logits: [points x class_count].
Tensor segment(Model& model, const PointCloudSequence& seq);

/// Row-wise argmax of a [rows x classes] tensor (first maximum wins).
std::vector<int> argmax_rows(const Tensor& logits);

}  // namespace asta3d
