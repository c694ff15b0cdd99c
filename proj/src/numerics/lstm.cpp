#include "ibert/numerics/lstm.hpp"

#include <cmath>

#include "op_support.hpp"

namespace ibert::num {

using detail::ConstMat;
using detail::MutMat;

namespace {

template <typename T>
T sigmoid_of(T x) {
    if (x >= 0) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

}  // namespace

template <typename T>
Tensor<T> lstm_scan(const Tensor<T>& x, std::span<const std::size_t> lengths,
                    const LstmWeights<T>& weights, bool reverse) {
    if (x.ndim() != 3) throw ShapeError("lstm_scan expects x[B,T,d], got " + to_string(x.shape()));
    const std::size_t batch = x.dim(0);
    const std::size_t steps = x.dim(1);
    const std::size_t d_in = x.dim(2);
    const std::size_t hidden = weights.hidden();
    const std::size_t gates = 4 * hidden;
    if (weights.w_ih.shape() != Shape{d_in, gates} || weights.w_hh.shape() != Shape{hidden, gates} ||
        weights.bias.shape() != Shape{gates})
        throw ShapeError("lstm_scan: weights " + to_string(weights.w_ih.shape()) + ", " +
                         to_string(weights.w_hh.shape()) + ", " + to_string(weights.bias.shape()) +
                         " do not fit input " + to_string(x.shape()));
    if (lengths.size() != batch)
        throw ShapeError("lstm_scan: " + std::to_string(lengths.size()) + " lengths for batch of " +
                         std::to_string(batch));
    for (auto len : lengths)
        if (len == 0 || len > steps)
            throw std::invalid_argument("lstm_scan: sequence length " + std::to_string(len) +
                                        " outside [1, " + std::to_string(steps) + "]");

    const std::size_t rows = batch * steps;
    const T* w_hh = weights.w_hh.data().data();

    // Activated gates per position, later reused by the backward rule.
    std::vector<T> act(rows * gates);
    MutMat<T>(act.data(), rows, gates).noalias() =
        ConstMat<T>(x.data().data(), rows, d_in) * ConstMat<T>(weights.w_ih.data().data(), d_in, gates);
    std::vector<T> cell(rows * hidden, T(0));
    std::vector<T> tanh_cell(rows * hidden, T(0));
    std::vector<T> out(rows * hidden, T(0));
    std::vector<T> h_state(batch * hidden, T(0));
    std::vector<T> c_state(batch * hidden, T(0));
    std::vector<T> recur(batch * gates);
    const auto& bias = weights.bias.data();

    auto time_of = [&](std::size_t b, std::size_t s) { return reverse ? lengths[b] - 1 - s : s; };

    for (std::size_t s = 0; s < steps; ++s) {
        MutMat<T>(recur.data(), batch, gates).noalias() =
            ConstMat<T>(h_state.data(), batch, hidden) * ConstMat<T>(w_hh, hidden, gates);
        for (std::size_t b = 0; b < batch; ++b) {
            if (s >= lengths[b]) continue;
            const std::size_t row = b * steps + time_of(b, s);
            T* a = act.data() + row * gates;
            const T* r = recur.data() + b * gates;
            for (std::size_t j = 0; j < gates; ++j) {
                const T z = a[j] + r[j] + bias[j];
                const std::size_t block = j / hidden;
                a[j] = block == 2 ? std::tanh(z) : sigmoid_of(z);
            }
            for (std::size_t j = 0; j < hidden; ++j) {
                const T i = a[j];
                const T f = a[hidden + j];
                const T g = a[2 * hidden + j];
                const T o = a[3 * hidden + j];
                const T c = f * c_state[b * hidden + j] + i * g;
                const T tc = std::tanh(c);
                cell[row * hidden + j] = c;
                tanh_cell[row * hidden + j] = tc;
                c_state[b * hidden + j] = c;
                h_state[b * hidden + j] = o * tc;
                out[row * hidden + j] = o * tc;
            }
        }
    }

    Shape shape{batch, steps, hidden};
    auto* xn = x.node();
    auto* wih = weights.w_ih.node();
    auto* whh = weights.w_hh.node();
    auto* bn = weights.bias.node();
    return detail::make_result<T>(
        "lstm_scan", std::move(shape), std::move(out), {x, weights.w_ih, weights.w_hh, weights.bias},
        [=, lengths = std::vector<std::size_t>(lengths.begin(), lengths.end()), act = std::move(act),
         cell = std::move(cell), tanh_cell = std::move(tanh_cell)](Node<T>& self) {
            auto time_at = [&](std::size_t b, std::size_t s) { return reverse ? lengths[b] - 1 - s : s; };
            std::vector<T> dpre(rows * gates, T(0));
            std::vector<T> dh_next(batch * hidden, T(0));
            std::vector<T> dc_next(batch * hidden, T(0));
            std::vector<T> dstep(batch * gates);
            std::vector<T> h_prev(batch * hidden);
            T* g_whh = whh->requires_grad ? whh->grad_buffer().data() : nullptr;
            const T* dout = self.grad.data();

            for (std::size_t s = steps; s-- > 0;) {
                std::fill(dstep.begin(), dstep.end(), T(0));
                std::fill(h_prev.begin(), h_prev.end(), T(0));
                for (std::size_t b = 0; b < batch; ++b) {
                    if (s >= lengths[b]) continue;
                    const std::size_t row = b * steps + time_at(b, s);
                    const bool first = s == 0;
                    const std::size_t prev_row = first ? 0 : b * steps + time_at(b, s - 1);
                    const T* a = act.data() + row * gates;
                    T* dz = dstep.data() + b * gates;
                    for (std::size_t j = 0; j < hidden; ++j) {
                        const T i = a[j];
                        const T f = a[hidden + j];
                        const T g = a[2 * hidden + j];
                        const T o = a[3 * hidden + j];
                        const T tc = tanh_cell[row * hidden + j];
                        const T c_prev = first ? T(0) : cell[prev_row * hidden + j];
                        const T dh = dout[row * hidden + j] + dh_next[b * hidden + j];
                        const T dc = dc_next[b * hidden + j] + dh * o * (T(1) - tc * tc);
                        dz[j] = dc * g * i * (T(1) - i);
                        dz[hidden + j] = dc * c_prev * f * (T(1) - f);
                        dz[2 * hidden + j] = dc * i * (T(1) - g * g);
                        dz[3 * hidden + j] = dh * tc * o * (T(1) - o);
                        dc_next[b * hidden + j] = dc * f;
                        if (!first) h_prev[b * hidden + j] = self.value[prev_row * hidden + j];
                    }
                    std::copy_n(dz, gates, dpre.data() + row * gates);
                }
                ConstMat<T> dz_mat(dstep.data(), batch, gates);
                if (g_whh)
                    MutMat<T>(g_whh, hidden, gates).noalias() +=
                        ConstMat<T>(h_prev.data(), batch, hidden).transpose() * dz_mat;
                MutMat<T>(dh_next.data(), batch, hidden).noalias() =
                    dz_mat * ConstMat<T>(whh->value.data(), hidden, gates).transpose();
            }

            ConstMat<T> dpre_mat(dpre.data(), rows, gates);
            if (wih->requires_grad)
                MutMat<T>(wih->grad_buffer().data(), d_in, gates).noalias() +=
                    ConstMat<T>(xn->value.data(), rows, d_in).transpose() * dpre_mat;
            if (xn->requires_grad)
                MutMat<T>(xn->grad_buffer().data(), rows, d_in).noalias() +=
                    dpre_mat * ConstMat<T>(wih->value.data(), d_in, gates).transpose();
            if (bn->requires_grad) {
                auto& gb = bn->grad_buffer();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < gates; ++j) gb[j] += dpre[r * gates + j];
            }
        });
}

template Tensor<float> lstm_scan(const Tensor<float>&, std::span<const std::size_t>,
                                 const LstmWeights<float>&, bool);
template Tensor<double> lstm_scan(const Tensor<double>&, std::span<const std::size_t>,
                                  const LstmWeights<double>&, bool);

}  // namespace ibert::num
