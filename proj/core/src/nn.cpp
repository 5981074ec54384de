#include "asta3d/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "asta3d/ops.hpp"

namespace asta3d {

Tensor ParameterRegistry::add_parameter(const std::string& name, Shape shape, std::vector<double> init) {
  if (find(name) != nullptr) throw std::invalid_argument("duplicate parameter name: " + name);
  entries_.push_back({name, Tensor::from(std::move(shape), std::move(init), true), true});
  return entries_.back().tensor;
}

Tensor ParameterRegistry::add_buffer(const std::string& name, Shape shape, std::vector<double> init) {
  if (find(name) != nullptr) throw std::invalid_argument("duplicate parameter name: " + name);
  entries_.push_back({name, Tensor::from(std::move(shape), std::move(init), false), false});
  return entries_.back().tensor;
}

std::vector<Parameter> ParameterRegistry::parameters() const {
  std::vector<Parameter> out;
  for (const auto& e : entries_) {
    if (e.trainable) out.push_back({e.name, e.tensor});
  }
  return out;
}

const ParameterRegistry::Entry* ParameterRegistry::find(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::size_t ParameterRegistry::parameter_scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (e.trainable) n += e.tensor.numel();
  }
  return n;
}

void ParameterRegistry::zero_grad() {
  for (auto& e : entries_) {
    if (e.trainable) e.tensor.zero_grad();
  }
}

std::vector<std::vector<double>> ParameterRegistry::snapshot() const {
  std::vector<std::vector<double>> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.emplace_back(e.tensor.data().begin(), e.tensor.data().end());
  return out;
}

void ParameterRegistry::restore(const std::vector<std::vector<double>>& values) {
  if (values.size() != entries_.size()) throw std::invalid_argument("snapshot does not match registry");
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto dst = entries_[i].tensor.mutable_data();
    if (dst.size() != values[i].size()) {
      throw std::invalid_argument("snapshot size mismatch for " + entries_[i].name);
    }
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                  Tensor& running_var, bool training, const BatchNormOptions& options) {
  if (x.rank() != 2) throw DimensionError("batch_norm: expected [batch x channels], got " + to_string(x.shape()));
  const std::size_t rows = x.dim(0), channels = x.dim(1);
  for (const Tensor* t : {&gamma, &beta, static_cast<const Tensor*>(&running_mean), static_cast<const Tensor*>(&running_var)}) {
    if (t->numel() != channels) {
      throw DimensionError("batch_norm: per-channel tensor " + to_string(t->shape()) + " does not match " +
                           to_string(x.shape()));
    }
  }
  if (training && rows < 2) {
    throw std::invalid_argument("batch_norm: training mode needs a batch of at least 2 rows");
  }

  auto in = x.data();
  std::vector<double> mu(channels, 0.0);
  std::vector<double> inv_std(channels);
  if (training) {
    std::vector<double> var(channels, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t c = 0; c < channels; ++c) mu[c] += in[i * channels + c];
    }
    for (auto& m : mu) m /= static_cast<double>(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double d = in[i * channels + c] - mu[c];
        var[c] += d * d;
      }
    }
    auto rm = running_mean.mutable_data();
    auto rv = running_var.mutable_data();
    const double n = static_cast<double>(rows);
    for (std::size_t c = 0; c < channels; ++c) {
      const double biased = var[c] / n;
      inv_std[c] = 1.0 / std::sqrt(biased + options.epsilon);
      rm[c] = options.momentum * rm[c] + (1.0 - options.momentum) * mu[c];
      rv[c] = options.momentum * rv[c] + (1.0 - options.momentum) * var[c] / (n - 1.0);
    }
  } else {
    auto rm = running_mean.data();
    auto rv = running_var.data();
    for (std::size_t c = 0; c < channels; ++c) {
      mu[c] = rm[c];
      inv_std[c] = 1.0 / std::sqrt(rv[c] + options.epsilon);
    }
  }

  auto g = gamma.data();
  auto b = beta.data();
  std::vector<double> xhat(rows * channels);
  std::vector<double> out(rows * channels);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t at = i * channels + c;
      xhat[at] = (in[at] - mu[c]) * inv_std[c];
      out[at] = g[c] * xhat[at] + b[c];
    }
  }

  return Tensor::make_result(
      x.shape(), std::move(out), {x, gamma, beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), rows, channels, training](detail::Node& self) {
        const auto& dy = self.grad;
        const auto& gam = self.parents[1]->data;
        if (self.parents[1]->requires_grad || self.parents[2]->requires_grad) {
          std::vector<double> dgamma(channels, 0.0), dbeta(channels, 0.0);
          for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t c = 0; c < channels; ++c) {
              dgamma[c] += dy[i * channels + c] * xhat[i * channels + c];
              dbeta[c] += dy[i * channels + c];
            }
          }
          if (self.parents[1]->requires_grad) {
            auto& gg = self.parents[1]->ensure_grad();
            for (std::size_t c = 0; c < channels; ++c) gg[c] += dgamma[c];
          }
          if (self.parents[2]->requires_grad) {
            auto& gb = self.parents[2]->ensure_grad();
            for (std::size_t c = 0; c < channels; ++c) gb[c] += dbeta[c];
          }
        }
        if (!self.parents[0]->requires_grad) return;
        auto& gx = self.parents[0]->ensure_grad();
        if (!training) {
          for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t c = 0; c < channels; ++c) {
              gx[i * channels + c] += dy[i * channels + c] * gam[c] * inv_std[c];
            }
          }
          return;
        }
        std::vector<double> sum_dxhat(channels, 0.0), sum_dxhat_xhat(channels, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
          for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t at = i * channels + c;
            const double dxhat = dy[at] * gam[c];
            sum_dxhat[c] += dxhat;
            sum_dxhat_xhat[c] += dxhat * xhat[at];
          }
        }
        const double n = static_cast<double>(rows);
        for (std::size_t i = 0; i < rows; ++i) {
          for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t at = i * channels + c;
            const double dxhat = dy[at] * gam[c];
            gx[at] += inv_std[c] / n * (n * dxhat - sum_dxhat[c] - xhat[at] * sum_dxhat_xhat[c]);
          }
        }
      });
}

Linear::Linear(ParameterRegistry& registry, const std::string& name, std::size_t in, std::size_t out, Rng& rng)
    : in_(in), out_(out) {
  if (in == 0 || out == 0) throw std::invalid_argument("Linear " + name + ": zero width");
  // He-uniform for ReLU networks.
  const double bound = std::sqrt(6.0 / static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> w(in * out);
  for (auto& v : w) v = dist(rng);
  weight_ = registry.add_parameter(name + ".weight", {in, out}, std::move(w));
  bias_ = registry.add_parameter(name + ".bias", {out}, std::vector<double>(out, 0.0));
}

Tensor Linear::forward(const Tensor& x) const { return add_row_bias(matmul(x, weight_), bias_); }

BatchNorm::BatchNorm(ParameterRegistry& registry, const std::string& name, std::size_t channels,
                     BatchNormOptions options)
    : options_(options) {
  gamma_ = registry.add_parameter(name + ".gamma", {channels}, std::vector<double>(channels, 1.0));
  beta_ = registry.add_parameter(name + ".beta", {channels}, std::vector<double>(channels, 0.0));
  running_mean_ = registry.add_buffer(name + ".running_mean", {channels}, std::vector<double>(channels, 0.0));
  running_var_ = registry.add_buffer(name + ".running_var", {channels}, std::vector<double>(channels, 1.0));
}

Tensor BatchNorm::forward(const Tensor& x, bool training) {
  return batch_norm(x, gamma_, beta_, running_mean_, running_var_, training, options_);
}

Mlp::Mlp(ParameterRegistry& registry, const std::string& name, std::size_t in, const MlpConfig& config, Rng& rng) {
  if (config.widths.empty()) throw std::invalid_argument("Mlp " + name + ": no layers");
  std::size_t width = in;
  for (std::size_t i = 0; i < config.widths.size(); ++i) {
    const bool last = i + 1 == config.widths.size();
    Layer layer;
    layer.activate = !last || config.final_activation;
    layer.norm = layer.activate && config.batch_norm;
    const std::string prefix = name + "." + std::to_string(i);
    linears_.emplace_back(registry, prefix + ".linear", width, config.widths[i], rng);
    norms_.emplace_back();
    if (layer.norm) norms_.back() = BatchNorm(registry, prefix + ".bn", config.widths[i]);
    layers_.push_back(layer);
    width = config.widths[i];
  }
  out_ = width;
}

Tensor Mlp::forward(const Tensor& x, bool training) {
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = linears_[i].forward(h);
    if (layers_[i].norm) h = norms_[i].forward(h, training);
    if (layers_[i].activate) h = relu(h);
  }
  return h;
}

}  // namespace asta3d
