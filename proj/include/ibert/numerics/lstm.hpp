#pragma once

#include <span>

#include "ibert/numerics/tensor.hpp"

namespace ibert::num {

// Gate blocks along the 4h axis are ordered input, forget, candidate, output.
template <typename T>
struct LstmWeights {
    Tensor<T> w_ih;  // [d_in, 4h]
    Tensor<T> w_hh;  // [h, 4h]
    Tensor<T> bias;  // [4h]

    std::size_t hidden() const { return w_hh.dim(0); }
};

// One direction of an LSTM over x[B, T, d_in] with a hand-written
// backpropagation-through-time rule. Sequence b is scanned over positions
// [0, lengths[b]) (right to left when `reverse`), starting from zero h and c.
// Output is [B, T, h], zero at positions >= lengths[b].
template <typename T>
Tensor<T> lstm_scan(const Tensor<T>& x, std::span<const std::size_t> lengths,
                    const LstmWeights<T>& weights, bool reverse);

}  // namespace ibert::num
