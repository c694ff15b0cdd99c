#pragma once

#include <Eigen/Core>
#include <cmath>
#include <initializer_list>

#include "ibert/numerics/tensor.hpp"

namespace ibert::num::detail {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMat = Eigen::Map<const RowMat<T>>;
template <typename T>
using MutMat = Eigen::Map<RowMat<T>>;

template <typename T>
void check_finite(const char* op, const std::vector<T>& values) {
    for (const T v : values)
        if (!std::isfinite(v)) throw NumericError(std::string(op) + " produced a non-finite value");
}

// Wraps an op's output into a node. The backward rule and input links are
// kept only when recording is on and some input requires grad.
template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> value,
                      std::initializer_list<Tensor<T>> inputs, typename Node<T>::BackwardFn backward) {
    check_finite(op, value);
    auto node = std::make_shared<Node<T>>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    node->op = op;
    bool any = false;
    if (grad_enabled())
        for (const auto& in : inputs) any = any || in.requires_grad();
    if (any) {
        node->requires_grad = true;
        for (const auto& in : inputs) node->inputs.push_back(in.node_ptr());
        node->backward = std::move(backward);
    }
    return Tensor<T>(std::move(node));
}

}  // namespace ibert::num::detail
