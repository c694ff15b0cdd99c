#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ibert/model/layers.hpp"
#include "ibert/numerics/gradcheck.hpp"
#include "ibert/numerics/lstm.hpp"
#include "ibert/numerics/ops.hpp"

using namespace ibert;
using namespace ibert::num;
using model::AttentionWeights;
using model::BiLstmWeights;
using testing::random_tensor;

namespace {

LstmWeights<double> random_lstm(std::size_t d_in, std::size_t h, std::uint64_t seed, double scale = 0.5) {
    return {random_tensor({d_in, 4 * h}, seed, scale, true), random_tensor({h, 4 * h}, seed + 1, scale, true),
            random_tensor({4 * h}, seed + 2, scale, true)};
}

LstmWeights<double> zero_lstm(std::size_t d_in, std::size_t h) {
    return {Tensor<double>::zeros({d_in, 4 * h}), Tensor<double>::zeros({h, 4 * h}), Tensor<double>::zeros({4 * h})};
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar LSTM step, gate blocks ordered i, f, g, o.
void scalar_step(const LstmWeights<double>& w, std::span<const double> x, std::vector<double>& h,
                 std::vector<double>& c) {
    const std::size_t d = w.w_ih.dim(0), n = w.hidden();
    std::vector<double> z(4 * n);
    for (std::size_t j = 0; j < 4 * n; ++j) {
        z[j] = w.bias.data()[j];
        for (std::size_t k = 0; k < d; ++k) z[j] += x[k] * w.w_ih.data()[k * 4 * n + j];
        for (std::size_t k = 0; k < n; ++k) z[j] += h[k] * w.w_hh.data()[k * 4 * n + j];
    }
    for (std::size_t u = 0; u < n; ++u) {
        const double i = sig(z[u]), f = sig(z[n + u]), g = std::tanh(z[2 * n + u]), o = sig(z[3 * n + u]);
        c[u] = f * c[u] + i * g;
        h[u] = o * std::tanh(c[u]);
    }
}

// Scalar attention for one (b, h) slice.
std::vector<double> scalar_attention(std::span<const double> q, std::span<const double> k, std::span<const double> v,
                                     std::size_t t, std::size_t dk, std::span<const std::uint8_t> valid) {
    std::vector<double> out(t * dk, 0.0);
    for (std::size_t i = 0; i < t; ++i) {
        std::vector<double> s(t, -INFINITY);
        double mx = -INFINITY;
        for (std::size_t j = 0; j < t; ++j) {
            if (!valid[j]) continue;
            s[j] = 0;
            for (std::size_t a = 0; a < dk; ++a) s[j] += q[i * dk + a] * k[j * dk + a];
            s[j] /= std::sqrt(static_cast<double>(dk));
            mx = std::max(mx, s[j]);
        }
        double z = 0;
        for (std::size_t j = 0; j < t; ++j) z += valid[j] ? std::exp(s[j] - mx) : 0.0;
        for (std::size_t j = 0; j < t; ++j) {
            if (!valid[j]) continue;
            const double p = std::exp(s[j] - mx) / z;
            for (std::size_t a = 0; a < dk; ++a) out[i * dk + a] += p * v[j * dk + a];
        }
    }
    return out;
}

AttentionWeights<double> random_attention(std::size_t d, std::uint64_t seed) {
    return {random_tensor({d, d}, seed, 0.5, true),     random_tensor({d}, seed + 1, 0.5, true),
            random_tensor({d, d}, seed + 2, 0.5, true), random_tensor({d}, seed + 3, 0.5, true),
            random_tensor({d, d}, seed + 4, 0.5, true), random_tensor({d}, seed + 5, 0.5, true),
            random_tensor({d, d}, seed + 6, 0.5, true), random_tensor({d}, seed + 7, 0.5, true)};
}

}  // namespace

TEST_CASE("attention with a single key returns v") {
    auto q = random_tensor({1, 2, 1, 3}, 1), k = random_tensor({1, 2, 1, 3}, 2), v = random_tensor({1, 2, 1, 3}, 3);
    const std::vector<std::uint8_t> valid = {1};
    auto out = model::scaled_dot_product_attention(q, k, v, valid);
    CHECK(testing::max_abs_diff(out.data(), v.data()) == 0.0);
}

TEST_CASE("equal scores average the valid value rows") {
    auto q = Tensor<double>::zeros({1, 1, 3, 2});
    auto k = random_tensor({1, 1, 3, 2}, 4);
    auto v = random_tensor({1, 1, 3, 2}, 5);
    const std::vector<std::uint8_t> valid = {1, 0, 1};
    auto out = model::scaled_dot_product_attention(q, k, v, valid);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t a = 0; a < 2; ++a)
            CHECK(out.data()[i * 2 + a] == doctest::Approx((v.data()[a] + v.data()[4 + a]) / 2).epsilon(1e-14));
}

TEST_CASE("attention matches a scalar loop") {
    auto q = random_tensor({1, 2, 3, 4}, 6), k = random_tensor({1, 2, 3, 4}, 7), v = random_tensor({1, 2, 3, 4}, 8);
    const std::vector<std::uint8_t> valid = {1, 1, 0};
    auto out = model::scaled_dot_product_attention(q, k, v, valid);
    for (std::size_t h = 0; h < 2; ++h) {
        auto ref = scalar_attention(q.data().subspan(h * 12, 12), k.data().subspan(h * 12, 12),
                                    v.data().subspan(h * 12, 12), 3, 4, valid);
        CHECK(testing::max_abs_diff(out.data().subspan(h * 12, 12), ref) <= 1e-9);
    }
    const std::vector<std::uint8_t> none = {0, 0, 0};
    CHECK_THROWS(model::scaled_dot_product_attention(q, k, v, none));
}

TEST_CASE("multi-head attention") {
    const std::size_t d = 8, heads = 2, t = 4;
    AttentionWeights<double> zero{Tensor<double>::zeros({d, d}), Tensor<double>::zeros({d}),
                                  Tensor<double>::zeros({d, d}), Tensor<double>::zeros({d}),
                                  Tensor<double>::zeros({d, d}), Tensor<double>::zeros({d}),
                                  Tensor<double>::zeros({d, d}), Tensor<double>::zeros({d})};
    const std::vector<std::uint8_t> valid(t, 1);
    auto z = model::multi_head_attention(Tensor<double>::zeros({1, t, d}), zero, heads, valid);
    for (double v : z.data()) CHECK(v == 0.0);

    // Head-by-head oracle: explicit projections, scalar attention, merge, output projection.
    auto w = random_attention(d, 10);
    auto x = random_tensor({1, t, d}, 20);
    auto out = model::multi_head_attention(x, w, heads, valid);
    auto project = [&](const Tensor<double>& wm, const Tensor<double>& b) {
        std::vector<double> r(t * d);
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                r[i * d + j] = b.data()[j];
                for (std::size_t k = 0; k < d; ++k) r[i * d + j] += x.data()[i * d + k] * wm.data()[k * d + j];
            }
        return r;
    };
    const auto q = project(w.wq, w.bq), k = project(w.wk, w.bk), v = project(w.wv, w.bv);
    const std::size_t dk = d / heads;
    std::vector<double> merged(t * d);
    for (std::size_t h = 0; h < heads; ++h) {
        std::vector<double> qh(t * dk), kh(t * dk), vh(t * dk);
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t a = 0; a < dk; ++a) {
                qh[i * dk + a] = q[i * d + h * dk + a];
                kh[i * dk + a] = k[i * d + h * dk + a];
                vh[i * dk + a] = v[i * d + h * dk + a];
            }
        auto oh = scalar_attention(qh, kh, vh, t, dk, valid);
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t a = 0; a < dk; ++a) merged[i * d + h * dk + a] = oh[i * dk + a];
    }
    std::vector<double> ref(t * d);
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            ref[i * d + j] = w.bo.data()[j];
            for (std::size_t k2 = 0; k2 < d; ++k2) ref[i * d + j] += merged[i * d + k2] * w.wo.data()[k2 * d + j];
        }
    CHECK(testing::max_abs_diff(out.data(), ref) <= 1e-9);
}

TEST_CASE("multi-head attention is permutation equivariant") {
    const std::size_t d = 8, t = 5;
    auto w = random_attention(d, 30);
    auto x = random_tensor({1, t, d}, 40);
    const std::vector<std::uint8_t> valid(t, 1);
    auto out = model::multi_head_attention(x, w, 2, valid);
    const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
    std::vector<double> px(t * d);
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < d; ++j) px[i * d + j] = x.data()[perm[i] * d + j];
    auto pout = model::multi_head_attention(Tensor<double>::from({1, t, d}, px), w, 2, valid);
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < d; ++j)
            CHECK(std::abs(pout.data()[i * d + j] - out.data()[perm[i] * d + j]) <= 1e-9);
}

TEST_CASE("lstm cell step") {
    auto zx = Tensor<double>::zeros({2, 3}), zh = Tensor<double>::zeros({2, 4});
    auto [h0, c0] = model::lstm_cell_step(zx, zh, zh, zero_lstm(3, 4));
    for (double v : h0.data()) CHECK(v == 0.0);
    for (double v : c0.data()) CHECK(v == 0.0);

    // Saturated gates carry the cell state through.
    auto w = zero_lstm(3, 4);
    for (std::size_t u = 0; u < 4; ++u) {
        w.bias.mutable_data()[u] = -800.0;     // input gate closed
        w.bias.mutable_data()[4 + u] = 800.0;  // forget gate open
    }
    auto c_prev = random_tensor({2, 4}, 50);
    auto [h1, c1] = model::lstm_cell_step(random_tensor({2, 3}, 51), random_tensor({2, 4}, 52), c_prev, w);
    CHECK(testing::max_abs_diff(c1.data(), c_prev.data()) <= 1e-12);

    auto rw = random_lstm(3, 4, 60);
    auto x = random_tensor({2, 3}, 61), h = random_tensor({2, 4}, 62), c = random_tensor({2, 4}, 63);
    auto [h2, c2] = model::lstm_cell_step(x, h, c, rw);
    for (std::size_t b = 0; b < 2; ++b) {
        std::vector<double> hs(h.data().begin() + b * 4, h.data().begin() + b * 4 + 4);
        std::vector<double> cs(c.data().begin() + b * 4, c.data().begin() + b * 4 + 4);
        scalar_step(rw, x.data().subspan(b * 3, 3), hs, cs);
        CHECK(testing::max_abs_diff(h2.data().subspan(b * 4, 4), hs) <= 1e-9);
        CHECK(testing::max_abs_diff(c2.data().subspan(b * 4, 4), cs) <= 1e-9);
    }

    const auto errs = finite_diff_check(
        [&] {
            auto [hn, cn] = model::lstm_cell_step(x, h, c, rw);
            return add(sum(mul(hn, hn)), sum(cn));
        },
        {x, h, c, rw.w_ih, rw.w_hh, rw.bias});
    for (double e : errs) CHECK(e <= 1e-4);

    CHECK_THROWS_AS(model::lstm_cell_step(random_tensor({2, 5}, 64), h, c, rw), ShapeError);
}

TEST_CASE("bi-lstm forward") {
    const std::size_t d = 4, h = 2;
    BiLstmWeights<double> zero{zero_lstm(d, h), zero_lstm(d, h)};
    const std::vector<std::size_t> len = {3};
    auto zout = model::bi_lstm_forward(random_tensor({1, 3, d}, 70), len, zero);
    for (double v : zout.data()) CHECK(v == 0.0);

    // B=1, T=2 unrolled with explicit steps per direction.
    BiLstmWeights<double> w{random_lstm(d, h, 80), random_lstm(d, h, 90)};
    auto x = random_tensor({1, 2, d}, 100);
    const std::vector<std::size_t> two = {2};
    auto out = model::bi_lstm_forward(x, two, w);
    std::vector<double> hf(h, 0.0), cf(h, 0.0), hb(h, 0.0), cb(h, 0.0);
    std::vector<std::vector<double>> fwd, bwd(2);
    for (std::size_t t = 0; t < 2; ++t) {
        scalar_step(w.forward, x.data().subspan(t * d, d), hf, cf);
        fwd.push_back(hf);
    }
    for (std::size_t t = 2; t-- > 0;) {
        scalar_step(w.backward, x.data().subspan(t * d, d), hb, cb);
        bwd[t] = hb;
    }
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t u = 0; u < h; ++u) {
            CHECK(std::abs(out.data()[t * 2 * h + u] - fwd[t][u]) <= 1e-9);
            CHECK(std::abs(out.data()[t * 2 * h + h + u] - bwd[t][u]) <= 1e-9);
        }
}

TEST_CASE("bi-lstm ignores trailing padding and zeroes it") {
    const std::size_t d = 4, h = 3;
    BiLstmWeights<double> w{random_lstm(d, h, 110), random_lstm(d, h, 120)};
    auto x = random_tensor({2, 3, d}, 130);
    const std::vector<std::size_t> len = {2, 3};
    auto out = model::bi_lstm_forward(x, len, w);

    std::vector<double> wide(2 * 6 * d, 0.0);
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t t = 0; t < 3; ++t)
            for (std::size_t k = 0; k < d; ++k) wide[(b * 6 + t) * d + k] = x.data()[(b * 3 + t) * d + k];
    for (std::size_t k = 0; k < d; ++k) wide[(0 * 6 + 2) * d + k] = 9.0;  // junk beyond length
    auto out_wide = model::bi_lstm_forward(Tensor<double>::from({2, 6, d}, wide), len, w);
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t t = 0; t < len[b]; ++t)
            for (std::size_t k = 0; k < 2 * h; ++k)
                CHECK(std::abs(out.data()[(b * 3 + t) * 2 * h + k] - out_wide.data()[(b * 6 + t) * 2 * h + k]) <=
                      1e-12);
    for (std::size_t t = 2; t < 6; ++t)
        for (std::size_t k = 0; k < 2 * h; ++k) CHECK(out_wide.data()[t * 2 * h + k] == 0.0);

    const std::vector<std::size_t> bad = {0, 3};
    CHECK_THROWS(model::bi_lstm_forward(x, bad, w));
}

TEST_CASE("lstm scan gradients") {
    auto w = random_lstm(3, 2, 140);
    auto x = random_tensor({2, 4, 3}, 150, 1.0, true);
    auto proj = random_tensor({2, 4, 2}, 160);
    const std::vector<std::size_t> len = {4, 2};
    for (bool reverse : {false, true}) {
        const auto errs = finite_diff_check([&] { return sum(mul(lstm_scan(x, len, w, reverse), proj)); },
                                            {x, w.w_ih, w.w_hh, w.bias});
        for (double e : errs) CHECK(e <= 1e-6);
    }
}

TEST_CASE("sinusoidal encoding") {
    auto pe = model::sinusoidal_pe<double>(8, 4);
    CHECK(pe.shape() == Shape{8, 4});
    CHECK(pe.data()[0] == 0.0);
    CHECK(pe.data()[1] == 1.0);
    CHECK(pe.data()[2] == 0.0);
    CHECK(pe.data()[3] == 1.0);
    for (std::size_t p = 0; p < 8; ++p) {
        CHECK(std::abs(pe.data()[p * 4 + 1] - std::cos(static_cast<double>(p))) <= 1e-12);
        for (std::size_t i = 0; i < 2; ++i) {
            const double angle = static_cast<double>(p) / std::pow(10000.0, 2.0 * i / 4.0);
            CHECK(std::abs(pe.data()[p * 4 + 2 * i] - std::sin(angle)) <= 1e-12);
            CHECK(std::abs(pe.data()[p * 4 + 2 * i + 1] - std::cos(angle)) <= 1e-12);
        }
    }
}
