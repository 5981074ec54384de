#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "asta3d/tensor.hpp"

namespace asta3d {

// Linear algebra ------------------------------------------------------------

/// [m x k] times [k x n]. Throws DimensionError naming both shapes.
Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise ----------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
/// [m x n] + [n], bias broadcast over rows.
Tensor add_row_bias(const Tensor& x, const Tensor& bias);
/// max(0, x); the subgradient at 0 is 0.
Tensor relu(const Tensor& x);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

// Reductions and normalization ----------------------------------------------

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Sum over one axis; the axis is removed (rank-1 input gives shape [1]).
Tensor sum_axis(const Tensor& x, std::size_t axis);
/// Max over one axis; gradient flows to the first maximal element.
Tensor max_axis(const Tensor& x, std::size_t axis);
/// Numerically stable softmax along `axis` (max-subtraction).
Tensor softmax(const Tensor& x, std::size_t axis);

// Shape and indexing ---------------------------------------------------------

Tensor reshape(const Tensor& x, Shape shape);
/// Concatenate two matrices with equal row counts along columns.
Tensor concat_cols(const Tensor& a, const Tensor& b);
/// out[i] = x[indices[i]] for a matrix x; backward scatters with accumulation.
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices);
/// out has `rows` rows, zero except out[indices[i]] += x[i].
Tensor scatter_rows(const Tensor& x, std::span<const std::size_t> indices, std::size_t rows);
/// out[i] = sum_j weights[i*width + j] * x[indices[i*width + j]]; weights are constants.
Tensor weighted_gather_rows(const Tensor& x, std::span<const std::size_t> indices,
                            std::span<const double> weights, std::size_t width);

// Losses ----------------------------------------------------------------------

/// Mean over rows of -log softmax(logits)[label]. Labels must lie in [0, classes).
Tensor cross_entropy_loss(const Tensor& logits, std::span<const int> labels);

}  // namespace asta3d
