#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "asta3d/tensor.hpp"

namespace asta3d {

using Rng = std::mt19937_64;

/// A named trainable tensor (requires_grad is always true).
struct Parameter {
  std::string name;
  Tensor tensor;
};

/// Owns every named tensor of a model: trainable parameters plus
/// non-trainable buffers such as BatchNorm running statistics.
class ParameterRegistry {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
    bool trainable = true;
  };

  /// Registers a trainable tensor. Throws if the name is already taken.
  Tensor add_parameter(const std::string& name, Shape shape, std::vector<double> init);
  Tensor add_buffer(const std::string& name, Shape shape, std::vector<double> init);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Parameter> parameters() const;
  const Entry* find(const std::string& name) const;

  std::size_t parameter_scalar_count() const;
  void zero_grad();

  /// Deep copy of all values, in entry order; used for best-model snapshots.
  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);

 private:
  std::vector<Entry> entries_;
};

struct BatchNormOptions {
  double momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch
  double epsilon = 1e-5;
};

/// Per-channel batch normalization over the rows of a [batch x channels] matrix.
///
/// Training mode normalizes by the (biased) batch moments and folds them into the
/// running statistics (unbiased variance); inference mode uses the running
/// statistics. A training batch of one row is rejected.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                  Tensor& running_var, bool training, const BatchNormOptions& options = {});

class Linear {
 public:
  Linear() = default;
  Linear(ParameterRegistry& registry, const std::string& name, std::size_t in, std::size_t out, Rng& rng);

  Tensor forward(const Tensor& x) const;

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  Tensor weight_;  // [in x out]
  Tensor bias_;    // [out]
};

class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(ParameterRegistry& registry, const std::string& name, std::size_t channels,
            BatchNormOptions options = {});

  Tensor forward(const Tensor& x, bool training);

 private:
  Tensor gamma_;
  Tensor beta_;
  Tensor running_mean_;
  Tensor running_var_;
  BatchNormOptions options_;
};

struct MlpConfig {
  std::vector<std::size_t> widths;  // output width of each layer
  bool batch_norm = true;
  bool final_activation = true;  // false leaves the last layer linear
};

/// Shared (pointwise) MLP: Linear -> [BatchNorm] -> ReLU per layer.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterRegistry& registry, const std::string& name, std::size_t in, const MlpConfig& config, Rng& rng);

  Tensor forward(const Tensor& x, bool training);

  std::size_t out_features() const { return out_; }
  std::vector<Linear>& linears() { return linears_; }

 private:
  struct Layer {
    bool norm = false;
    bool activate = false;
  };
  std::vector<Linear> linears_;
  std::vector<BatchNorm> norms_;
  std::vector<Layer> layers_;
  std::size_t out_ = 0;
};

}  // namespace asta3d
