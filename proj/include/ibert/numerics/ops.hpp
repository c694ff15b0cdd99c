#pragma once

#include <cstdint>
#include <span>

#include "ibert/numerics/tensor.hpp"
#include "ibert/rng.hpp"

namespace ibert::num {

// Differentiable operations. Every op checks its output for NaN/Inf and throws
// NumericError naming the op. Broadcasting is limited to leading batch
// dimensions (matmul) and suffix-shaped operands (add/mul) plus scalars.

// a[..., m, k] x b[..., k, n]. Batch dims broadcast numpy-style from size 1.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// b must have the same shape as a or match a trailing suffix of it (bias,
// position table). A single-element b is treated as a scalar.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

template <typename T>
Tensor<T> sum(const Tensor<T>& a);
template <typename T>
Tensor<T> mean(const Tensor<T>& a);

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape);
// out.shape[i] = a.shape[axes[i]]
template <typename T>
Tensor<T> permute(const Tensor<T>& a, const std::vector<std::size_t>& axes);
// Swaps the last two axes.
template <typename T>
Tensor<T> transpose_last(const Tensor<T>& a);

template <typename T>
Tensor<T> concat_last(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> slice_last(const Tensor<T>& a, std::size_t start, std::size_t length);

// Max-subtracted softmax along `axis` (negative counts from the end).
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis);

// Softmax over the last axis of x[B, ..., K] where key k of batch b takes part
// only if key_valid[b*K + k] != 0. Excluded keys get weight exactly 0. A row
// without any valid key is an error.
template <typename T>
Tensor<T> masked_softmax(const Tensor<T>& x, std::span<const std::uint8_t> key_valid);

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     double eps = 1e-5);

enum class Pointwise { Gelu, Sigmoid, Tanh, Relu };

template <typename T>
Tensor<T> pointwise(const Tensor<T>& x, Pointwise fn);

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) { return pointwise(x, Pointwise::Gelu); }
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) { return pointwise(x, Pointwise::Sigmoid); }
template <typename T>
Tensor<T> tanh(const Tensor<T>& x) { return pointwise(x, Pointwise::Tanh); }
template <typename T>
Tensor<T> relu(const Tensor<T>& x) { return pointwise(x, Pointwise::Relu); }

// table[V, d] gathered at ids (row-major over `index_shape`) -> [index_shape..., d].
template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const std::int32_t> ids, const Shape& index_shape);

// Inverted dropout. Identity when rate == 0.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Rng& rng);

// Mean over masked positions of -log softmax(logits)[target], in nats.
// logits[B, T, V]; targets and mask are row-major [B, T].
template <typename T>
Tensor<T> masked_cross_entropy(const Tensor<T>& logits, std::span<const std::int32_t> targets,
                               std::span<const std::uint8_t> mask);

// Zeroes rows [b, t, :] with t >= lengths[b] on x[B, T, d].
template <typename T>
Tensor<T> mask_rows(const Tensor<T>& x, std::span<const std::size_t> lengths);

}  // namespace ibert::num
