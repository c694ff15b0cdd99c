#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "ibert/numerics/lstm.hpp"
#include "ibert/numerics/tensor.hpp"

namespace ibert::model {

using num::LstmWeights;
using num::Tensor;

template <typename T>
struct AttentionWeights {
    Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
};

template <typename T>
struct BiLstmWeights {
    LstmWeights<T> forward;
    LstmWeights<T> backward;
};

// softmax(q k^T / sqrt(d_k)) v over q, k, v [B, H, T, d_k]. key_valid is
// row-major [B, T]; invalid keys get attention weight exactly 0.
template <typename T>
Tensor<T> scaled_dot_product_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                       std::span<const std::uint8_t> key_valid);

// x[B, T, d_model] -> [B, T, d_model]; projections, head split, attention,
// head merge and output projection. No residual or normalization.
template <typename T>
Tensor<T> multi_head_attention(const Tensor<T>& x, const AttentionWeights<T>& w, std::size_t n_heads,
                               std::span<const std::uint8_t> key_valid);

// One LSTM step composed from primitive ops (gates i, f, g, o).
// Returns (h_t, c_t).
template <typename T>
std::pair<Tensor<T>, Tensor<T>> lstm_cell_step(const Tensor<T>& x_t, const Tensor<T>& h_prev,
                                               const Tensor<T>& c_prev, const LstmWeights<T>& w);

// Concatenation of a left-to-right and a right-to-left scan, each of width
// hidden, over positions [0, lengths[b]). Zero beyond each length.
template <typename T>
Tensor<T> bi_lstm_forward(const Tensor<T>& x, std::span<const std::size_t> lengths, const BiLstmWeights<T>& w);

// PE[pos, 2i] = sin(pos / 10000^(2i/d)), PE[pos, 2i+1] = cos(same).
template <typename T>
Tensor<T> sinusoidal_pe(std::size_t steps, std::size_t d_model);

// gelu(x w1 + b1) w2 + b2
template <typename T>
Tensor<T> feed_forward(const Tensor<T>& x, const Tensor<T>& w1, const Tensor<T>& b1, const Tensor<T>& w2,
                       const Tensor<T>& b2);

}  // namespace ibert::model
