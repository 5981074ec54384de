#include "asta3d/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>

namespace asta3d {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

void require_rank(const Tensor& x, std::size_t rank, const char* op) {
  if (x.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         to_string(x.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

bool wants_grad(const detail::Node& self, std::size_t i) { return self.parents[i]->requires_grad; }

// Splits a shape around `axis` into (outer, length, inner) strides.
struct AxisView {
  std::size_t outer = 1;
  std::size_t length = 1;
  std::size_t inner = 1;
};

AxisView axis_view(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " +
                         to_string(shape));
  }
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= shape[i];
  v.length = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
  return v;
}

Shape drop_axis(const Shape& shape, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != axis) out.push_back(shape[i]);
  }
  if (out.empty()) out.push_back(1);
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions differ, " + to_string(a.shape()) + " x " +
                         to_string(b.shape()));
  }
  std::vector<double> out(m * n);
  Map(out.data(), m, n).noalias() = ConstMap(a.data().data(), m, k) * ConstMap(b.data().data(), k, n);
  return Tensor::make_result({m, n}, std::move(out), {a, b}, [m, k, n](detail::Node& self) {
    ConstMap dc(self.grad.data(), m, n);
    if (wants_grad(self, 0)) {
      auto& pa = *self.parents[0];
      Map(pa.ensure_grad().data(), m, k).noalias() += dc * ConstMap(self.parents[1]->data.data(), k, n).transpose();
    }
    if (wants_grad(self, 1)) {
      auto& pb = *self.parents[1];
      Map(pb.ensure_grad().data(), k, n).noalias() += ConstMap(self.parents[0]->data.data(), m, k).transpose() * dc;
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (!wants_grad(self, p)) continue;
      auto& g = self.parents[p]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    if (wants_grad(self, 0)) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants_grad(self, 1)) {
      auto& g = self.parents[1]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    const auto& x = self.parents[0]->data;
    const auto& y = self.parents[1]->data;
    if (wants_grad(self, 0)) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * y[i];
    }
    if (wants_grad(self, 1)) {
      auto& g = self.parents[1]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * x[i];
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (auto& v : out) v *= factor;
  return Tensor::make_result(x.shape(), std::move(out), {x}, [factor](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  require_rank(x, 2, "add_row_bias");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (bias.numel() != n) {
    throw DimensionError("add_row_bias: bias " + to_string(bias.shape()) + " does not match columns of " +
                         to_string(x.shape()));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  auto b = bias.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += b[j];
  }
  return Tensor::make_result(x.shape(), std::move(out), {x, bias}, [m, n](detail::Node& self) {
    if (wants_grad(self, 0)) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants_grad(self, 1)) {
      auto& g = self.parents[1]->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
      }
    }
  });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return Tensor::make_result(x.shape(), std::move(out), {x}, [](detail::Node& self) {
    const auto& in = self.parents[0]->data;
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (in[i] > 0.0) g[i] += self.grad[i];
    }
  });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return Tensor::make_result({1}, {total}, {x}, [](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor sum_axis(const Tensor& x, std::size_t axis) {
  const auto v = axis_view(x.shape(), axis, "sum_axis");
  std::vector<double> out(v.outer * v.inner, 0.0);
  auto in = x.data();
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t l = 0; l < v.length; ++l) {
      const double* row = in.data() + (o * v.length + l) * v.inner;
      double* dst = out.data() + o * v.inner;
      for (std::size_t i = 0; i < v.inner; ++i) dst[i] += row[i];
    }
  }
  return Tensor::make_result(drop_axis(x.shape(), axis), std::move(out), {x}, [v](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t o = 0; o < v.outer; ++o) {
      for (std::size_t l = 0; l < v.length; ++l) {
        double* dst = g.data() + (o * v.length + l) * v.inner;
        const double* src = self.grad.data() + o * v.inner;
        for (std::size_t i = 0; i < v.inner; ++i) dst[i] += src[i];
      }
    }
  });
}

Tensor max_axis(const Tensor& x, std::size_t axis) {
  const auto v = axis_view(x.shape(), axis, "max_axis");
  std::vector<double> out(v.outer * v.inner, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> arg(v.outer * v.inner, 0);
  auto in = x.data();
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t l = 0; l < v.length; ++l) {
      for (std::size_t i = 0; i < v.inner; ++i) {
        const std::size_t src = (o * v.length + l) * v.inner + i;
        const std::size_t dst = o * v.inner + i;
        if (in[src] > out[dst]) {
          out[dst] = in[src];
          arg[dst] = src;
        }
      }
    }
  }
  return Tensor::make_result(drop_axis(x.shape(), axis), std::move(out), {x},
                             [arg = std::move(arg)](detail::Node& self) {
                               auto& g = self.parents[0]->ensure_grad();
                               for (std::size_t i = 0; i < arg.size(); ++i) g[arg[i]] += self.grad[i];
                             });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  const auto v = axis_view(x.shape(), axis, "softmax");
  std::vector<double> out(x.numel());
  auto in = x.data();
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t i = 0; i < v.inner; ++i) {
      const std::size_t base = o * v.length * v.inner + i;
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < v.length; ++l) peak = std::max(peak, in[base + l * v.inner]);
      double total = 0.0;
      for (std::size_t l = 0; l < v.length; ++l) {
        const double e = std::exp(in[base + l * v.inner] - peak);
        out[base + l * v.inner] = e;
        total += e;
      }
      for (std::size_t l = 0; l < v.length; ++l) out[base + l * v.inner] /= total;
    }
  }
  return Tensor::make_result(x.shape(), std::move(out), {x}, [v](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    const auto& y = self.data;
    for (std::size_t o = 0; o < v.outer; ++o) {
      for (std::size_t i = 0; i < v.inner; ++i) {
        const std::size_t base = o * v.length * v.inner + i;
        double dot = 0.0;
        for (std::size_t l = 0; l < v.length; ++l) {
          const std::size_t at = base + l * v.inner;
          dot += self.grad[at] * y[at];
        }
        for (std::size_t l = 0; l < v.length; ++l) {
          const std::size_t at = base + l * v.inner;
          g[at] += y[at] * (self.grad[at] - dot);
        }
      }
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  return Tensor::make_result(std::move(shape), std::move(out), {x}, [](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "concat_cols");
  require_rank(b, 2, "concat_cols");
  const std::size_t m = a.dim(0), p = a.dim(1), q = b.dim(1);
  if (b.dim(0) != m) {
    throw DimensionError("concat_cols: row counts differ, " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
  const std::size_t w = p + q;
  std::vector<double> out(m * w);
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(x.data() + i * p, p, out.data() + i * w);
    std::copy_n(y.data() + i * q, q, out.data() + i * w + p);
  }
  return Tensor::make_result({m, w}, std::move(out), {a, b}, [m, p, q, w](detail::Node& self) {
    if (wants_grad(self, 0)) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < p; ++j) g[i * p + j] += self.grad[i * w + j];
      }
    }
    if (wants_grad(self, 1)) {
      auto& g = self.parents[1]->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < q; ++j) g[i * q + j] += self.grad[i * w + p + j];
      }
    }
  });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices) {
  require_rank(x, 2, "gather_rows");
  const std::size_t rows = x.dim(0), n = x.dim(1);
  if (indices.empty()) throw DimensionError("gather_rows: empty index list");
  std::vector<double> out(indices.size() * n);
  auto in = x.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows) {
      throw DimensionError("gather_rows: index " + std::to_string(indices[i]) + " out of range for " +
                           to_string(x.shape()));
    }
    std::copy_n(in.data() + indices[i] * n, n, out.data() + i * n);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return Tensor::make_result({indices.size(), n}, std::move(out), {x},
                             [idx = std::move(idx), n](detail::Node& self) {
                               auto& g = self.parents[0]->ensure_grad();
                               for (std::size_t i = 0; i < idx.size(); ++i) {
                                 double* dst = g.data() + idx[i] * n;
                                 const double* src = self.grad.data() + i * n;
                                 for (std::size_t j = 0; j < n; ++j) dst[j] += src[j];
                               }
                             });
}

Tensor scatter_rows(const Tensor& x, std::span<const std::size_t> indices, std::size_t rows) {
  require_rank(x, 2, "scatter_rows");
  const std::size_t n = x.dim(1);
  if (indices.size() != x.dim(0)) {
    throw DimensionError("scatter_rows: " + std::to_string(indices.size()) + " indices for " +
                         to_string(x.shape()));
  }
  std::vector<double> out(rows * n, 0.0);
  auto in = x.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows) {
      throw DimensionError("scatter_rows: index " + std::to_string(indices[i]) + " out of range for " +
                           std::to_string(rows) + " rows");
    }
    for (std::size_t j = 0; j < n; ++j) out[indices[i] * n + j] += in[i * n + j];
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return Tensor::make_result({rows, n}, std::move(out), {x}, [idx = std::move(idx), n](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[idx[i] * n + j];
    }
  });
}

Tensor weighted_gather_rows(const Tensor& x, std::span<const std::size_t> indices,
                            std::span<const double> weights, std::size_t width) {
  require_rank(x, 2, "weighted_gather_rows");
  if (width == 0 || indices.size() != weights.size() || indices.size() % width != 0 || indices.empty()) {
    throw DimensionError("weighted_gather_rows: inconsistent index/weight layout");
  }
  const std::size_t rows = x.dim(0), n = x.dim(1), m = indices.size() / width;
  std::vector<double> out(m * n, 0.0);
  auto in = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < width; ++k) {
      const std::size_t src = indices[i * width + k];
      if (src >= rows) {
        throw DimensionError("weighted_gather_rows: index " + std::to_string(src) + " out of range for " +
                             to_string(x.shape()));
      }
      const double w = weights[i * width + k];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += w * in[src * n + j];
    }
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  std::vector<double> wts(weights.begin(), weights.end());
  return Tensor::make_result(
      {m, n}, std::move(out), {x},
      [idx = std::move(idx), wts = std::move(wts), width, m, n](detail::Node& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t k = 0; k < width; ++k) {
            const std::size_t src = idx[i * width + k];
            const double w = wts[i * width + k];
            for (std::size_t j = 0; j < n; ++j) g[src * n + j] += w * self.grad[i * n + j];
          }
        }
      });
}

Tensor cross_entropy_loss(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "cross_entropy_loss");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != batch) {
    throw DimensionError("cross_entropy_loss: " + std::to_string(labels.size()) + " labels for logits " +
                         to_string(logits.shape()));
  }
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw std::out_of_range("cross_entropy_loss: label " + std::to_string(label) + " outside [0, " +
                              std::to_string(classes) + ")");
    }
  }
  auto z = logits.data();
  std::vector<double> probs(batch * classes);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const double* row = z.data() + i * classes;
    const double peak = *std::max_element(row, row + classes);
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) total += std::exp(row[c] - peak);
    const double log_norm = peak + std::log(total);
    for (std::size_t c = 0; c < classes; ++c) probs[i * classes + c] = std::exp(row[c] - log_norm);
    loss += log_norm - row[labels[i]];
  }
  loss /= static_cast<double>(batch);
  std::vector<int> target(labels.begin(), labels.end());
  return Tensor::make_result(
      {1}, {loss}, {logits},
      [probs = std::move(probs), target = std::move(target), batch, classes](detail::Node& self) {
        auto& g = self.parents[0]->ensure_grad();
        const double scale = self.grad[0] / static_cast<double>(batch);
        for (std::size_t i = 0; i < batch; ++i) {
          for (std::size_t c = 0; c < classes; ++c) {
            const double indicator = static_cast<std::size_t>(target[i]) == c ? 1.0 : 0.0;
            g[i * classes + c] += scale * (probs[i * classes + c] - indicator);
          }
        }
      });
}

}  // namespace asta3d
