#include "asta3d/networks.hpp"

#include <stdexcept>
#include <string>

#include "asta3d/ops.hpp"
#include "asta3d/sampling.hpp"

namespace asta3d {

namespace {

AstaConvConfig stage_conv_config(const NetworkSpec& spec, std::size_t level, std::size_t in_channels,
                                 std::size_t out_channels, std::size_t embed_dim,
                                 const std::vector<std::size_t>& encode_hidden,
                                 const std::vector<std::size_t>& attend_hidden,
                                 const std::optional<double>& anchor_scale) {
  AstaConvConfig c;
  c.in_channels = in_channels;
  c.embed_dim = embed_dim;
  c.out_channels = out_channels;
  c.encode_hidden = encode_hidden;
  c.attend_hidden = attend_hidden;
  c.mlp_batch_norm = spec.mlp_batch_norm;
  c.attention_enabled = spec.attention_enabled;
  c.normalize_time = spec.normalize_time;
  c.anchor_scale = spec.anchor_scale_for(level, anchor_scale);
  c.radius = RadiusSchedule{spec.radius_adjustment, spec.band_low, spec.band_high, spec.frame_count, level,
                            c.anchor_scale};
  return c;
}

void check_batch(const NetworkSpec& spec, std::span<const PointCloudSequence* const> batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  for (const auto* s : batch) {
    if (s->feature_dim != spec.input_feature_dim) {
      throw DimensionError("sequence feature dim " + std::to_string(s->feature_dim) + " does not match network input " +
                           std::to_string(spec.input_feature_dim));
    }
    if (s->frame_count != spec.frame_count) {
      throw DimensionError("sequence has " + std::to_string(s->frame_count) + " frames, network expects " +
                           std::to_string(spec.frame_count));
    }
    if (s->size() < spec.stages.front().cores) {
      throw std::invalid_argument("sequence has " + std::to_string(s->size()) + " points, fewer than the " +
                                  std::to_string(spec.stages.front().cores) + " cores of the first stage");
    }
  }
}

}  // namespace

Tensor Model::input_features(std::span<const PointCloudSequence* const> batch) const {
  std::vector<double> values;
  std::size_t rows = 0;
  for (const auto* s : batch) {
    values.insert(values.end(), s->features.begin(), s->features.end());
    rows += s->size();
  }
  return Tensor::from({rows, spec_.input_feature_dim}, std::move(values));
}

ClassificationNet::ClassificationNet(const NetworkSpec& spec, std::uint64_t init_seed) : Model(spec) {
  spec_.validate();
  if (spec_.task != Task::classification) throw std::invalid_argument("ClassificationNet needs a classification spec");
  Rng rng(init_seed);
  std::size_t width = spec_.input_feature_dim;
  for (std::size_t i = 0; i < spec_.stages.size(); ++i) {
    const auto& s = spec_.stages[i];
    const std::string name = "stage" + std::to_string(i);
    convs_.emplace_back(registry_, name + ".conv",
                        stage_conv_config(spec_, i, width, s.channels, s.embed_dim, s.encode_hidden, s.attend_hidden,
                                          s.anchor_scale),
                        rng);
    norms_.emplace_back(registry_, name + ".bn", s.channels);
    width = s.channels;
  }
  fc_hidden_ = Linear(registry_, "head.fc1", width, spec_.head_hidden, rng);
  fc_out_ = Linear(registry_, "head.fc2", spec_.head_hidden, spec_.class_count, rng);
}

Tensor ClassificationNet::forward(std::span<const PointCloudSequence* const> batch, const ForwardOptions& options) {
  check_batch(spec_, batch);
  BatchedCloud cloud = batch_geometry(batch);
  Tensor features = input_features(batch);
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    BatchedCores cores = sample_cores(cloud, spec_.stages[i].cores, options.fps_seeds);
    features = norms_[i].forward(convs_[i].forward(features, cloud, cores.cloud, options.training), options.training);
    cloud = std::move(cores.cloud);
  }
  const std::size_t per_sample = spec_.stages.back().cores;
  const std::size_t channels = spec_.stages.back().channels;
  Tensor pooled = max_axis(reshape(features, {batch.size(), per_sample, channels}), 1);
  return fc_out_.forward(relu(fc_hidden_.forward(pooled)));
}

SegmentationNet::SegmentationNet(const NetworkSpec& spec, std::uint64_t init_seed) : Model(spec) {
  spec_.validate();
  if (spec_.task != Task::segmentation) throw std::invalid_argument("SegmentationNet needs a segmentation spec");
  Rng rng(init_seed);
  std::vector<std::size_t> level_width{spec_.input_feature_dim};
  for (std::size_t i = 0; i < spec_.stages.size(); ++i) {
    const auto& s = spec_.stages[i];
    const std::string name = "encoder" + std::to_string(i);
    convs_.emplace_back(registry_, name + ".conv",
                        stage_conv_config(spec_, i, level_width.back(), s.channels, s.embed_dim, s.encode_hidden,
                                          s.attend_hidden, s.anchor_scale),
                        rng);
    norms_.emplace_back(registry_, name + ".bn", s.channels);
    level_width.push_back(s.channels);
  }
  std::size_t width = level_width.back();
  for (std::size_t i = 0; i < spec_.decoder.size(); ++i) {
    const auto& d = spec_.decoder[i];
    const std::size_t target_level = spec_.stages.size() - 1 - i;  // raw input is level 0
    const std::string name = "decoder" + std::to_string(i);
    if (spec_.decoder_conv) {
      up_convs_.emplace_back(registry_, name + ".conv",
                             stage_conv_config(spec_, target_level, width, d.channels, d.embed_dim, d.encode_hidden,
                                               d.attend_hidden, d.anchor_scale),
                             rng);
      up_norms_.emplace_back(registry_, name + ".bn", d.channels);
      width = d.channels;
    }
    MlpConfig mlp{d.mlp, true, true};
    up_mlps_.emplace_back(registry_, name + ".mlp", width + level_width[target_level], mlp, rng);
    width = up_mlps_.back().out_features();
  }
  head_ = Linear(registry_, "head.out", width, spec_.class_count, rng);
}

Tensor SegmentationNet::forward(std::span<const PointCloudSequence* const> batch, const ForwardOptions& options) {
  check_batch(spec_, batch);
  std::vector<BatchedCloud> clouds{batch_geometry(batch)};
  std::vector<Tensor> skips{input_features(batch)};
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    BatchedCores cores = sample_cores(clouds.back(), spec_.stages[i].cores, options.fps_seeds);
    skips.push_back(norms_[i].forward(convs_[i].forward(skips.back(), clouds.back(), cores.cloud, options.training),
                                      options.training));
    clouds.push_back(std::move(cores.cloud));
  }
  Tensor x = skips.back();
  for (std::size_t i = 0; i < up_mlps_.size(); ++i) {
    const std::size_t source = clouds.size() - 1 - i;
    const std::size_t target = source - 1;
    Tensor up = interpolate(x, three_nn_plan(clouds[source], clouds[target]));
    if (spec_.decoder_conv) {
      up = up_norms_[i].forward(up_convs_[i].forward(up, clouds[target], clouds[target], options.training),
                                options.training);
    }
    x = up_mlps_[i].forward(concat_cols(up, skips[target]), options.training);
  }
  return head_.forward(x);
}

std::unique_ptr<Model> make_model(const NetworkSpec& spec, std::uint64_t init_seed) {
  if (spec.task == Task::classification) return std::make_unique<ClassificationNet>(spec, init_seed);
  return std::make_unique<SegmentationNet>(spec, init_seed);
}

Tensor classify(Model& model, const PointCloudSequence& seq) {
  if (model.spec().task != Task::classification) throw std::invalid_argument("classify needs a classification model");
  const PointCloudSequence* one[] = {&seq};
  Tensor logits = model.forward(one, {});
  return reshape(logits, {model.spec().class_count}).detach();
}

Tensor segment(Model& model, const PointCloudSequence& seq) {
  if (model.spec().task != Task::segmentation) throw std::invalid_argument("segment needs a segmentation model");
  const PointCloudSequence* one[] = {&seq};
  return model.forward(one, {}).detach();
}

std::vector<int> argmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) throw DimensionError("argmax_rows: expected a matrix, got " + to_string(logits.shape()));
  const std::size_t rows = logits.dim(0), cols = logits.dim(1);
  auto v = logits.data();
  std::vector<int> out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < cols; ++c) {
      if (v[i * cols + c] > v[i * cols + best]) best = c;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

}  // namespace asta3d
