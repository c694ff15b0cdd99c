#include "ibert/numerics/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "op_support.hpp"

namespace ibert::num {

using detail::ConstMat;
using detail::make_result;
using detail::MutMat;

namespace {

struct BatchPair {
    std::size_t a;
    std::size_t b;
};

// Right-aligned broadcast of leading batch dims; returns the output batch
// shape and, for every output batch index, the source index into a and b.
std::pair<Shape, std::vector<BatchPair>> broadcast_batches(const Shape& ba, const Shape& bb,
                                                           const Shape& full_a, const Shape& full_b) {
    const std::size_t rank = std::max(ba.size(), bb.size());
    Shape out(rank, 1);
    auto dim_of = [rank](const Shape& s, std::size_t i) -> std::size_t {
        const std::size_t offset = rank - s.size();
        return i < offset ? 1 : s[i - offset];
    };
    for (std::size_t i = 0; i < rank; ++i) {
        const auto da = dim_of(ba, i);
        const auto db = dim_of(bb, i);
        if (da != db && da != 1 && db != 1)
            throw ShapeError("matmul batch dimensions do not broadcast: " + to_string(full_a) +
                             " x " + to_string(full_b));
        out[i] = std::max(da, db);
    }
    const std::size_t count = numel(out);
    std::vector<BatchPair> pairs(count);
    std::vector<std::size_t> idx(rank, 0);
    for (std::size_t n = 0; n < count; ++n) {
        std::size_t ia = 0;
        std::size_t ib = 0;
        for (std::size_t i = 0; i < rank; ++i) {
            const auto da = dim_of(ba, i);
            const auto db = dim_of(bb, i);
            ia = ia * da + (da == 1 ? 0 : idx[i]);
            ib = ib * db + (db == 1 ? 0 : idx[i]);
        }
        pairs[n] = {ia, ib};
        for (std::size_t i = rank; i-- > 0;) {
            if (++idx[i] < out[i]) break;
            idx[i] = 0;
        }
    }
    return {out, pairs};
}

// How a right-hand operand maps onto the left one: repeated `outer` times.
template <typename T>
std::size_t suffix_repeats(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (b.numel() == 1) return a.numel();
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    if (sb.size() > sa.size() || !std::equal(sb.rbegin(), sb.rend(), sa.rbegin()))
        throw ShapeError(std::string(op) + ": shape " + to_string(sb) +
                         " does not broadcast onto " + to_string(sa));
    return a.numel() / b.numel();
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.ndim() < 2 || b.ndim() < 2)
        throw ShapeError("matmul needs rank >= 2 operands, got " + to_string(a.shape()) + " x " +
                         to_string(b.shape()));
    const std::size_t m = a.dim(-2);
    const std::size_t k = a.dim(-1);
    const std::size_t n = b.dim(-1);
    if (b.dim(-2) != k)
        throw ShapeError("matmul inner dimensions differ: " + to_string(a.shape()) + " x " +
                         to_string(b.shape()));

    const Shape batch_a(a.shape().begin(), a.shape().end() - 2);
    const Shape batch_b(b.shape().begin(), b.shape().end() - 2);
    auto* an = a.node();
    auto* bn = b.node();

    // Right operand without batch dims: fold all of a's rows into one product.
    if (numel(batch_b) == 1 && batch_b.size() <= batch_a.size()) {
        const std::size_t rows = a.numel() / k;
        std::vector<T> out(rows * n);
        MutMat<T>(out.data(), rows, n).noalias() =
            ConstMat<T>(an->value.data(), rows, k) * ConstMat<T>(bn->value.data(), k, n);
        Shape shape = a.shape();
        shape.back() = n;
        return make_result<T>("matmul", std::move(shape), std::move(out), {a, b},
                              [an, bn, rows, k, n](Node<T>& self) {
                                  ConstMat<T> dc(self.grad.data(), rows, n);
                                  if (an->requires_grad)
                                      MutMat<T>(an->grad_buffer().data(), rows, k).noalias() +=
                                          dc * ConstMat<T>(bn->value.data(), k, n).transpose();
                                  if (bn->requires_grad)
                                      MutMat<T>(bn->grad_buffer().data(), k, n).noalias() +=
                                          ConstMat<T>(an->value.data(), rows, k).transpose() * dc;
                              });
    }

    auto [batch_out, pairs] = broadcast_batches(batch_a, batch_b, a.shape(), b.shape());
    std::vector<T> out(pairs.size() * m * n);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        MutMat<T>(out.data() + i * m * n, m, n).noalias() =
            ConstMat<T>(an->value.data() + pairs[i].a * m * k, m, k) *
            ConstMat<T>(bn->value.data() + pairs[i].b * k * n, k, n);
    }
    Shape shape = batch_out;
    shape.push_back(m);
    shape.push_back(n);
    return make_result<T>(
        "matmul", std::move(shape), std::move(out), {a, b},
        [an, bn, pairs = std::move(pairs), m, k, n](Node<T>& self) {
            T* ga = an->requires_grad ? an->grad_buffer().data() : nullptr;
            T* gb = bn->requires_grad ? bn->grad_buffer().data() : nullptr;
            for (std::size_t i = 0; i < pairs.size(); ++i) {
                ConstMat<T> dc(self.grad.data() + i * m * n, m, n);
                if (ga)
                    MutMat<T>(ga + pairs[i].a * m * k, m, k).noalias() +=
                        dc * ConstMat<T>(bn->value.data() + pairs[i].b * k * n, k, n).transpose();
                if (gb)
                    MutMat<T>(gb + pairs[i].b * k * n, k, n).noalias() +=
                        ConstMat<T>(an->value.data() + pairs[i].a * m * k, m, k).transpose() * dc;
            }
        });
}

namespace {

enum class Binary { Add, Sub, Mul };

template <typename T>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, Binary kind, const char* name) {
    const std::size_t repeats = suffix_repeats(a, b, name);
    const std::size_t inner = b.numel() == 1 ? 1 : b.numel();
    const auto& av = a.data();
    const auto& bv = b.data();
    std::vector<T> out(a.numel());
    for (std::size_t r = 0; r < repeats; ++r) {
        for (std::size_t j = 0; j < inner; ++j) {
            const std::size_t i = r * inner + j;
            switch (kind) {
                case Binary::Add: out[i] = av[i] + bv[j]; break;
                case Binary::Sub: out[i] = av[i] - bv[j]; break;
                case Binary::Mul: out[i] = av[i] * bv[j]; break;
            }
        }
    }
    auto* an = a.node();
    auto* bn = b.node();
    return make_result<T>(name, a.shape(), std::move(out), {a, b},
                          [an, bn, repeats, inner, kind](Node<T>& self) {
                              const T* g = self.grad.data();
                              if (an->requires_grad) {
                                  T* ga = an->grad_buffer().data();
                                  for (std::size_t r = 0; r < repeats; ++r)
                                      for (std::size_t j = 0; j < inner; ++j) {
                                          const std::size_t i = r * inner + j;
                                          ga[i] += kind == Binary::Mul ? g[i] * bn->value[j] : g[i];
                                      }
                              }
                              if (bn->requires_grad) {
                                  T* gb = bn->grad_buffer().data();
                                  for (std::size_t r = 0; r < repeats; ++r)
                                      for (std::size_t j = 0; j < inner; ++j) {
                                          const std::size_t i = r * inner + j;
                                          switch (kind) {
                                              case Binary::Add: gb[j] += g[i]; break;
                                              case Binary::Sub: gb[j] -= g[i]; break;
                                              case Binary::Mul: gb[j] += g[i] * an->value[i]; break;
                                          }
                                      }
                              }
                          });
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    return binary(a, b, Binary::Add, "add");
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    return binary(a, b, Binary::Sub, "sub");
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    return binary(a, b, Binary::Mul, "mul");
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
    std::vector<T> out(a.data().begin(), a.data().end());
    for (auto& v : out) v *= factor;
    auto* an = a.node();
    return make_result<T>("scale", a.shape(), std::move(out), {a}, [an, factor](Node<T>& self) {
        auto& ga = an->grad_buffer();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * factor;
    });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
    T total = 0;
    for (auto v : a.data()) total += v;
    auto* an = a.node();
    return make_result<T>("sum", Shape{1}, {total}, {a}, [an](Node<T>& self) {
        for (auto& g : an->grad_buffer()) g += self.grad[0];
    });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
    return scale(sum(a), T(1) / static_cast<T>(a.numel()));
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
    if (numel(shape) != a.numel())
        throw ShapeError("reshape " + to_string(a.shape()) + " -> " + to_string(shape));
    std::vector<T> out(a.data().begin(), a.data().end());
    auto* an = a.node();
    return make_result<T>("reshape", std::move(shape), std::move(out), {a}, [an](Node<T>& self) {
        auto& ga = an->grad_buffer();
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
    });
}

template <typename T>
Tensor<T> permute(const Tensor<T>& a, const std::vector<std::size_t>& axes) {
    const auto& in_shape = a.shape();
    const std::size_t rank = in_shape.size();
    if (axes.size() != rank)
        throw ShapeError("permute: axis list does not match shape " + to_string(in_shape));
    std::vector<bool> used(rank, false);
    Shape out_shape(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        if (axes[i] >= rank || used[axes[i]])
            throw ShapeError("permute: invalid axis list for shape " + to_string(in_shape));
        used[axes[i]] = true;
        out_shape[i] = in_shape[axes[i]];
    }
    std::vector<std::size_t> in_strides(rank, 1);
    for (std::size_t i = rank - 1; i-- > 0;) in_strides[i] = in_strides[i + 1] * in_shape[i + 1];
    // src[i] = flat input index of output element i.
    const std::size_t count = a.numel();
    std::vector<std::size_t> src(count);
    std::vector<std::size_t> idx(rank, 0);
    for (std::size_t n = 0; n < count; ++n) {
        std::size_t flat = 0;
        for (std::size_t i = 0; i < rank; ++i) flat += idx[i] * in_strides[axes[i]];
        src[n] = flat;
        for (std::size_t i = rank; i-- > 0;) {
            if (++idx[i] < out_shape[i]) break;
            idx[i] = 0;
        }
    }
    std::vector<T> out(count);
    const auto& av = a.data();
    for (std::size_t n = 0; n < count; ++n) out[n] = av[src[n]];
    auto* an = a.node();
    return make_result<T>("permute", std::move(out_shape), std::move(out), {a},
                          [an, src = std::move(src)](Node<T>& self) {
                              auto& ga = an->grad_buffer();
                              for (std::size_t n = 0; n < src.size(); ++n) ga[src[n]] += self.grad[n];
                          });
}

template <typename T>
Tensor<T> transpose_last(const Tensor<T>& a) {
    std::vector<std::size_t> axes(a.ndim());
    for (std::size_t i = 0; i < axes.size(); ++i) axes[i] = i;
    std::swap(axes[axes.size() - 1], axes[axes.size() - 2]);
    return permute(a, axes);
}

template <typename T>
Tensor<T> concat_last(const Tensor<T>& a, const Tensor<T>& b) {
    const Shape lead_a(a.shape().begin(), a.shape().end() - 1);
    const Shape lead_b(b.shape().begin(), b.shape().end() - 1);
    if (lead_a != lead_b)
        throw ShapeError("concat_last: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    const std::size_t da = a.dim(-1);
    const std::size_t db = b.dim(-1);
    const std::size_t rows = numel(lead_a);
    std::vector<T> out(rows * (da + db));
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(a.data().begin() + r * da, da, out.begin() + r * (da + db));
        std::copy_n(b.data().begin() + r * db, db, out.begin() + r * (da + db) + da);
    }
    Shape shape = lead_a;
    shape.push_back(da + db);
    auto* an = a.node();
    auto* bn = b.node();
    return make_result<T>("concat_last", std::move(shape), std::move(out), {a, b},
                          [an, bn, rows, da, db](Node<T>& self) {
                              for (std::size_t r = 0; r < rows; ++r) {
                                  const T* g = self.grad.data() + r * (da + db);
                                  if (an->requires_grad) {
                                      T* ga = an->grad_buffer().data() + r * da;
                                      for (std::size_t j = 0; j < da; ++j) ga[j] += g[j];
                                  }
                                  if (bn->requires_grad) {
                                      T* gb = bn->grad_buffer().data() + r * db;
                                      for (std::size_t j = 0; j < db; ++j) gb[j] += g[da + j];
                                  }
                              }
                          });
}

template <typename T>
Tensor<T> slice_last(const Tensor<T>& a, std::size_t start, std::size_t length) {
    const std::size_t d = a.dim(-1);
    if (length == 0 || start + length > d)
        throw ShapeError("slice_last [" + std::to_string(start) + ", +" + std::to_string(length) +
                         ") out of range for " + to_string(a.shape()));
    const std::size_t rows = a.numel() / d;
    std::vector<T> out(rows * length);
    for (std::size_t r = 0; r < rows; ++r)
        std::copy_n(a.data().begin() + r * d + start, length, out.begin() + r * length);
    Shape shape = a.shape();
    shape.back() = length;
    auto* an = a.node();
    return make_result<T>("slice_last", std::move(shape), std::move(out), {a},
                          [an, rows, d, start, length](Node<T>& self) {
                              auto& ga = an->grad_buffer();
                              for (std::size_t r = 0; r < rows; ++r)
                                  for (std::size_t j = 0; j < length; ++j)
                                      ga[r * d + start + j] += self.grad[r * length + j];
                          });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis) {
    const std::size_t len = x.dim(axis);
    const int rank = static_cast<int>(x.ndim());
    const std::size_t ax = static_cast<std::size_t>(axis < 0 ? axis + rank : axis);
    std::size_t inner = 1;
    for (std::size_t i = ax + 1; i < x.ndim(); ++i) inner *= x.shape()[i];
    const std::size_t outer = x.numel() / (len * inner);
    const auto& xv = x.data();
    std::vector<T> out(x.numel());
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * len * inner + in;
            T mx = xv[base];
            for (std::size_t j = 1; j < len; ++j) mx = std::max(mx, xv[base + j * inner]);
            T total = 0;
            for (std::size_t j = 0; j < len; ++j) {
                const T e = std::exp(xv[base + j * inner] - mx);
                out[base + j * inner] = e;
                total += e;
            }
            for (std::size_t j = 0; j < len; ++j) out[base + j * inner] /= total;
        }
    }
    auto* xn = x.node();
    Tensor<T> result = make_result<T>("softmax", x.shape(), std::move(out), {x}, nullptr);
    if (result.requires_grad()) {
        result.node()->backward = [xn, outer, inner, len](Node<T>& self) {
            auto& gx = xn->grad_buffer();
            const auto& y = self.value;
            const auto& gy = self.grad;
            for (std::size_t o = 0; o < outer; ++o)
                for (std::size_t in = 0; in < inner; ++in) {
                    const std::size_t base = o * len * inner + in;
                    T dot = 0;
                    for (std::size_t j = 0; j < len; ++j) dot += gy[base + j * inner] * y[base + j * inner];
                    for (std::size_t j = 0; j < len; ++j) {
                        const std::size_t i = base + j * inner;
                        gx[i] += y[i] * (gy[i] - dot);
                    }
                }
        };
    }
    return result;
}

template <typename T>
Tensor<T> masked_softmax(const Tensor<T>& x, std::span<const std::uint8_t> key_valid) {
    const std::size_t keys = x.dim(-1);
    const std::size_t batch = x.dim(0);
    if (x.ndim() < 2 || key_valid.size() != batch * keys)
        throw ShapeError("masked_softmax: mask of size " + std::to_string(key_valid.size()) +
                         " does not match " + to_string(x.shape()));
    const std::size_t rows = x.numel() / keys;
    const std::size_t rows_per_batch = rows / batch;
    const auto& xv = x.data();
    std::vector<T> out(x.numel(), T(0));
    for (std::size_t r = 0; r < rows; ++r) {
        const std::uint8_t* valid = key_valid.data() + (r / rows_per_batch) * keys;
        const T* in = xv.data() + r * keys;
        T* o = out.data() + r * keys;
        bool any = false;
        T mx = 0;
        for (std::size_t j = 0; j < keys; ++j) {
            if (!valid[j]) continue;
            mx = any ? std::max(mx, in[j]) : in[j];
            any = true;
        }
        if (!any) throw NumericError("masked_softmax: row without any valid key");
        T total = 0;
        for (std::size_t j = 0; j < keys; ++j) {
            if (!valid[j]) continue;
            o[j] = std::exp(in[j] - mx);
            total += o[j];
        }
        for (std::size_t j = 0; j < keys; ++j) o[j] /= total;
    }
    auto* xn = x.node();
    Tensor<T> result = make_result<T>("masked_softmax", x.shape(), std::move(out), {x}, nullptr);
    if (result.requires_grad()) {
        result.node()->backward = [xn, rows, keys](Node<T>& self) {
            auto& gx = xn->grad_buffer();
            for (std::size_t r = 0; r < rows; ++r) {
                const T* y = self.value.data() + r * keys;
                const T* gy = self.grad.data() + r * keys;
                T dot = 0;
                for (std::size_t j = 0; j < keys; ++j) dot += gy[j] * y[j];
                for (std::size_t j = 0; j < keys; ++j) gx[r * keys + j] += y[j] * (gy[j] - dot);
            }
        };
    }
    return result;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, double eps) {
    const std::size_t d = x.dim(-1);
    if (gain.numel() != d || bias.numel() != d || gain.ndim() != 1 || bias.ndim() != 1)
        throw ShapeError("layer_norm: input " + to_string(x.shape()) + " with gain " +
                         to_string(gain.shape()) + " and bias " + to_string(bias.shape()));
    const std::size_t rows = x.numel() / d;
    const auto& xv = x.data();
    const auto& gv = gain.data();
    const auto& bv = bias.data();
    std::vector<T> out(x.numel());
    std::vector<T> xhat(x.numel());
    std::vector<T> inv_std(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const T* in = xv.data() + r * d;
        double mu = 0;
        for (std::size_t j = 0; j < d; ++j) mu += in[j];
        mu /= static_cast<double>(d);
        double var = 0;
        for (std::size_t j = 0; j < d; ++j) var += (in[j] - mu) * (in[j] - mu);
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[r] = static_cast<T>(is);
        for (std::size_t j = 0; j < d; ++j) {
            const T h = static_cast<T>((in[j] - mu) * is);
            xhat[r * d + j] = h;
            out[r * d + j] = gv[j] * h + bv[j];
        }
    }
    auto* xn = x.node();
    auto* gn = gain.node();
    auto* bn = bias.node();
    return make_result<T>(
        "layer_norm", x.shape(), std::move(out), {x, gain, bias},
        [xn, gn, bn, rows, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
            T* gx = xn->requires_grad ? xn->grad_buffer().data() : nullptr;
            T* gg = gn->requires_grad ? gn->grad_buffer().data() : nullptr;
            T* gb = bn->requires_grad ? bn->grad_buffer().data() : nullptr;
            for (std::size_t r = 0; r < rows; ++r) {
                const T* gy = self.grad.data() + r * d;
                const T* h = xhat.data() + r * d;
                if (gg)
                    for (std::size_t j = 0; j < d; ++j) gg[j] += gy[j] * h[j];
                if (gb)
                    for (std::size_t j = 0; j < d; ++j) gb[j] += gy[j];
                if (!gx) continue;
                double mean_dh = 0;
                double mean_dh_h = 0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double dh = static_cast<double>(gy[j]) * gn->value[j];
                    mean_dh += dh;
                    mean_dh_h += dh * h[j];
                }
                mean_dh /= static_cast<double>(d);
                mean_dh_h /= static_cast<double>(d);
                for (std::size_t j = 0; j < d; ++j) {
                    const double dh = static_cast<double>(gy[j]) * gn->value[j];
                    gx[r * d + j] += static_cast<T>(inv_std[r] * (dh - mean_dh - h[j] * mean_dh_h));
                }
            }
        });
}

namespace {

template <typename T>
T stable_sigmoid(T x) {
    if (x >= 0) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

}  // namespace

template <typename T>
Tensor<T> pointwise(const Tensor<T>& x, Pointwise fn) {
    const auto& xv = x.data();
    std::vector<T> out(xv.size());
    const T inv_sqrt2 = static_cast<T>(1.0 / std::numbers::sqrt2);
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const T v = xv[i];
        switch (fn) {
            case Pointwise::Gelu: out[i] = T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2)); break;
            case Pointwise::Sigmoid: out[i] = stable_sigmoid(v); break;
            case Pointwise::Tanh: out[i] = std::tanh(v); break;
            case Pointwise::Relu: out[i] = v > 0 ? v : T(0); break;
        }
    }
    static constexpr const char* names[] = {"gelu", "sigmoid", "tanh", "relu"};
    auto* xn = x.node();
    Tensor<T> result =
        make_result<T>(names[static_cast<int>(fn)], x.shape(), std::move(out), {x}, nullptr);
    if (result.requires_grad()) {
        result.node()->backward = [xn, fn, inv_sqrt2](Node<T>& self) {
            auto& gx = xn->grad_buffer();
            const T inv_sqrt_2pi = static_cast<T>(std::numbers::inv_sqrtpi / std::numbers::sqrt2);
            for (std::size_t i = 0; i < gx.size(); ++i) {
                const T y = self.value[i];
                const T v = xn->value[i];
                T dydx = 0;
                switch (fn) {
                    case Pointwise::Gelu:
                        dydx = T(0.5) * (T(1) + std::erf(v * inv_sqrt2)) +
                               v * inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
                        break;
                    case Pointwise::Sigmoid: dydx = y * (T(1) - y); break;
                    case Pointwise::Tanh: dydx = T(1) - y * y; break;
                    case Pointwise::Relu: dydx = v > 0 ? T(1) : T(0); break;
                }
                gx[i] += self.grad[i] * dydx;
            }
        };
    }
    return result;
}

template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const std::int32_t> ids, const Shape& index_shape) {
    if (table.ndim() != 2) throw ShapeError("embedding table must be 2-D, got " + to_string(table.shape()));
    if (numel(index_shape) != ids.size())
        throw ShapeError("embedding: " + std::to_string(ids.size()) + " ids for index shape " +
                         to_string(index_shape));
    const std::size_t vocab = table.dim(0);
    const std::size_t d = table.dim(1);
    std::vector<T> out(ids.size() * d);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab)
            throw std::invalid_argument("embedding: id " + std::to_string(ids[i]) +
                                        " outside table of " + std::to_string(vocab) + " rows");
        std::copy_n(table.data().begin() + ids[i] * d, d, out.begin() + i * d);
    }
    Shape shape = index_shape;
    shape.push_back(d);
    auto* tn = table.node();
    return make_result<T>("embedding", std::move(shape), std::move(out), {table},
                          [tn, d, ids = std::vector<std::int32_t>(ids.begin(), ids.end())](Node<T>& self) {
                              auto& gt = tn->grad_buffer();
                              for (std::size_t i = 0; i < ids.size(); ++i)
                                  for (std::size_t j = 0; j < d; ++j)
                                      gt[ids[i] * d + j] += self.grad[i * d + j];
                          });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must be in [0, 1)");
    if (rate == 0.0) return x;
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    std::vector<T> factor(x.numel());
    std::vector<T> out(x.numel());
    for (std::size_t i = 0; i < factor.size(); ++i) {
        factor[i] = rng.uniform01() >= rate ? keep_scale : T(0);
        out[i] = x.data()[i] * factor[i];
    }
    auto* xn = x.node();
    return make_result<T>("dropout", x.shape(), std::move(out), {x},
                          [xn, factor = std::move(factor)](Node<T>& self) {
                              auto& gx = xn->grad_buffer();
                              for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * factor[i];
                          });
}

template <typename T>
Tensor<T> masked_cross_entropy(const Tensor<T>& logits, std::span<const std::int32_t> targets,
                               std::span<const std::uint8_t> mask) {
    if (logits.ndim() != 3)
        throw ShapeError("masked_cross_entropy expects logits[B,T,V], got " + to_string(logits.shape()));
    const std::size_t positions = logits.dim(0) * logits.dim(1);
    const std::size_t vocab = logits.dim(2);
    if (targets.size() != positions || mask.size() != positions)
        throw ShapeError("masked_cross_entropy: targets/mask size does not match " +
                         to_string(logits.shape()));
    std::size_t count = 0;
    for (std::size_t p = 0; p < positions; ++p) {
        if (!mask[p]) continue;
        ++count;
        if (targets[p] < 0 || static_cast<std::size_t>(targets[p]) >= vocab)
            throw std::invalid_argument("masked_cross_entropy: target id " + std::to_string(targets[p]) +
                                        " outside vocabulary of " + std::to_string(vocab));
    }
    if (count == 0) throw std::invalid_argument("masked_cross_entropy: mask selects no position");

    const auto& lv = logits.data();
    std::vector<T> probs(count * vocab);
    std::vector<std::size_t> rows;
    std::vector<std::int32_t> picked;
    rows.reserve(count);
    picked.reserve(count);
    double total = 0;
    for (std::size_t p = 0; p < positions; ++p) {
        if (!mask[p]) continue;
        const T* row = lv.data() + p * vocab;
        T mx = row[0];
        for (std::size_t v = 1; v < vocab; ++v) mx = std::max(mx, row[v]);
        double z = 0;
        for (std::size_t v = 0; v < vocab; ++v) z += std::exp(static_cast<double>(row[v] - mx));
        const double log_z = std::log(z) + mx;
        total += log_z - row[targets[p]];
        T* pr = probs.data() + rows.size() * vocab;
        for (std::size_t v = 0; v < vocab; ++v) pr[v] = static_cast<T>(std::exp(row[v] - log_z));
        rows.push_back(p);
        picked.push_back(targets[p]);
    }
    const T loss = static_cast<T>(total / static_cast<double>(count));
    auto* ln = logits.node();
    return make_result<T>(
        "masked_cross_entropy", Shape{1}, {loss}, {logits},
        [ln, vocab, probs = std::move(probs), rows = std::move(rows), picked = std::move(picked)](Node<T>& self) {
            auto& gl = ln->grad_buffer();
            const T g = self.grad[0] / static_cast<T>(rows.size());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                T* out = gl.data() + rows[r] * vocab;
                const T* pr = probs.data() + r * vocab;
                for (std::size_t v = 0; v < vocab; ++v) out[v] += g * pr[v];
                out[picked[r]] -= g;
            }
        });
}

template <typename T>
Tensor<T> mask_rows(const Tensor<T>& x, std::span<const std::size_t> lengths) {
    if (x.ndim() != 3 || lengths.size() != x.dim(0))
        throw ShapeError("mask_rows expects x[B,T,d] with B lengths, got " + to_string(x.shape()));
    const std::size_t steps = x.dim(1);
    const std::size_t d = x.dim(2);
    std::vector<T> out(x.data().begin(), x.data().end());
    for (std::size_t b = 0; b < lengths.size(); ++b)
        for (std::size_t t = std::min(lengths[b], steps); t < steps; ++t)
            std::fill_n(out.begin() + (b * steps + t) * d, d, T(0));
    auto* xn = x.node();
    return make_result<T>("mask_rows", x.shape(), std::move(out), {x},
                          [xn, steps, d, lengths = std::vector<std::size_t>(lengths.begin(), lengths.end())](Node<T>& self) {
                              auto& gx = xn->grad_buffer();
                              for (std::size_t b = 0; b < lengths.size(); ++b)
                                  for (std::size_t t = 0; t < std::min(lengths[b], steps); ++t)
                                      for (std::size_t j = 0; j < d; ++j) {
                                          const std::size_t i = (b * steps + t) * d + j;
                                          gx[i] += self.grad[i];
                                      }
                          });
}

#define IBERT_INSTANTIATE_OPS(T)                                                                   \
    template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                 \
    template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                    \
    template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                    \
    template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                    \
    template Tensor<T> scale(const Tensor<T>&, T);                                                 \
    template Tensor<T> sum(const Tensor<T>&);                                                      \
    template Tensor<T> mean(const Tensor<T>&);                                                     \
    template Tensor<T> reshape(const Tensor<T>&, Shape);                                           \
    template Tensor<T> permute(const Tensor<T>&, const std::vector<std::size_t>&);                 \
    template Tensor<T> transpose_last(const Tensor<T>&);                                           \
    template Tensor<T> concat_last(const Tensor<T>&, const Tensor<T>&);                            \
    template Tensor<T> slice_last(const Tensor<T>&, std::size_t, std::size_t);                     \
    template Tensor<T> softmax(const Tensor<T>&, int);                                             \
    template Tensor<T> masked_softmax(const Tensor<T>&, std::span<const std::uint8_t>);            \
    template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, double);   \
    template Tensor<T> pointwise(const Tensor<T>&, Pointwise);                                     \
    template Tensor<T> embedding(const Tensor<T>&, std::span<const std::int32_t>, const Shape&);   \
    template Tensor<T> dropout(const Tensor<T>&, double, Rng&);                                    \
    template Tensor<T> masked_cross_entropy(const Tensor<T>&, std::span<const std::int32_t>,       \
                                            std::span<const std::uint8_t>);                        \
    template Tensor<T> mask_rows(const Tensor<T>&, std::span<const std::size_t>);

IBERT_INSTANTIATE_OPS(float)
IBERT_INSTANTIATE_OPS(double)

#undef IBERT_INSTANTIATE_OPS

}  // namespace ibert::num
