#include "ibert/model/layers.hpp"

#include <cmath>

#include "ibert/numerics/ops.hpp"

namespace ibert::model {

using namespace ibert::num;

template <typename T>
Tensor<T> scaled_dot_product_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                       std::span<const std::uint8_t> key_valid) {
    if (q.ndim() != 4 || k.shape() != q.shape() || v.shape() != q.shape())
        throw ShapeError("attention expects q, k, v of equal shape [B,H,T,d_k], got " + to_string(q.shape()) +
                         ", " + to_string(k.shape()) + ", " + to_string(v.shape()));
    const T inv_sqrt_dk = static_cast<T>(1.0 / std::sqrt(static_cast<double>(q.dim(-1))));
    auto scores = scale(matmul(q, transpose_last(k)), inv_sqrt_dk);
    return matmul(masked_softmax(scores, key_valid), v);
}

template <typename T>
Tensor<T> multi_head_attention(const Tensor<T>& x, const AttentionWeights<T>& w, std::size_t n_heads,
                               std::span<const std::uint8_t> key_valid) {
    if (x.ndim() != 3) throw ShapeError("multi_head_attention expects x[B,T,d], got " + to_string(x.shape()));
    const std::size_t batch = x.dim(0);
    const std::size_t steps = x.dim(1);
    const std::size_t d = x.dim(2);
    if (n_heads == 0 || d % n_heads != 0)
        throw ShapeError("d_model " + std::to_string(d) + " not divisible by " + std::to_string(n_heads) + " heads");
    const std::size_t dk = d / n_heads;
    auto heads = [&](const Tensor<T>& weight, const Tensor<T>& bias) {
        auto proj = add(matmul(x, weight), bias);
        return permute(reshape(proj, {batch, steps, n_heads, dk}), {0, 2, 1, 3});
    };
    auto ctx = scaled_dot_product_attention(heads(w.wq, w.bq), heads(w.wk, w.bk), heads(w.wv, w.bv), key_valid);
    auto merged = reshape(permute(ctx, {0, 2, 1, 3}), {batch, steps, d});
    return add(matmul(merged, w.wo), w.bo);
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> lstm_cell_step(const Tensor<T>& x_t, const Tensor<T>& h_prev,
                                               const Tensor<T>& c_prev, const LstmWeights<T>& w) {
    const std::size_t h = w.hidden();
    if (h_prev.shape() != c_prev.shape() || h_prev.dim(-1) != h)
        throw ShapeError("lstm_cell_step: state shapes " + to_string(h_prev.shape()) + ", " +
                         to_string(c_prev.shape()) + " do not match hidden size " + std::to_string(h));
    auto z = add(add(matmul(x_t, w.w_ih), matmul(h_prev, w.w_hh)), w.bias);
    auto i = sigmoid(slice_last(z, 0, h));
    auto f = sigmoid(slice_last(z, h, h));
    auto g = tanh(slice_last(z, 2 * h, h));
    auto o = sigmoid(slice_last(z, 3 * h, h));
    auto c = add(mul(f, c_prev), mul(i, g));
    auto h_t = mul(o, tanh(c));
    return {h_t, c};
}

template <typename T>
Tensor<T> bi_lstm_forward(const Tensor<T>& x, std::span<const std::size_t> lengths, const BiLstmWeights<T>& w) {
    return concat_last(lstm_scan(x, lengths, w.forward, false), lstm_scan(x, lengths, w.backward, true));
}

template <typename T>
Tensor<T> sinusoidal_pe(std::size_t steps, std::size_t d_model) {
    if (d_model == 0 || d_model % 2 != 0) throw ShapeError("sinusoidal_pe needs an even d_model");
    std::vector<T> table(steps * d_model);
    for (std::size_t pos = 0; pos < steps; ++pos)
        for (std::size_t i = 0; i < d_model / 2; ++i) {
            const double angle =
                static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d_model));
            table[pos * d_model + 2 * i] = static_cast<T>(std::sin(angle));
            table[pos * d_model + 2 * i + 1] = static_cast<T>(std::cos(angle));
        }
    return Tensor<T>::from({steps, d_model}, std::move(table));
}

template <typename T>
Tensor<T> feed_forward(const Tensor<T>& x, const Tensor<T>& w1, const Tensor<T>& b1, const Tensor<T>& w2,
                       const Tensor<T>& b2) {
    return add(matmul(gelu(add(matmul(x, w1), b1)), w2), b2);
}

#define IBERT_INSTANTIATE_LAYERS(T)                                                                           \
    template Tensor<T> scaled_dot_product_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                                                    std::span<const std::uint8_t>);                           \
    template Tensor<T> multi_head_attention(const Tensor<T>&, const AttentionWeights<T>&, std::size_t,        \
                                            std::span<const std::uint8_t>);                                   \
    template std::pair<Tensor<T>, Tensor<T>> lstm_cell_step(const Tensor<T>&, const Tensor<T>&,               \
                                                            const Tensor<T>&, const LstmWeights<T>&);         \
    template Tensor<T> bi_lstm_forward(const Tensor<T>&, std::span<const std::size_t>, const BiLstmWeights<T>&); \
    template Tensor<T> sinusoidal_pe<T>(std::size_t, std::size_t);                                            \
    template Tensor<T> feed_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                    const Tensor<T>&);

IBERT_INSTANTIATE_LAYERS(float)
IBERT_INSTANTIATE_LAYERS(double)

#undef IBERT_INSTANTIATE_LAYERS

}  // namespace ibert::model
