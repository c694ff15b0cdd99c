#pragma once

#include <functional>
#include <vector>

#include "ibert/numerics/tensor.hpp"

namespace ibert::num {

using ScalarFn = std::function<Tensor<double>()>;

// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double a, double b);

// Compares the autodiff gradient of f with respect to each tensor in `inputs`
// against central differences (f(x+h) - f(x-h)) / 2h, element by element.
// f must rebuild its graph from the current contents of `inputs` on every
// call. Returns the maximum relative error for each input tensor. Existing
// gradients of the inputs are overwritten.
std::vector<double> finite_diff_check(const ScalarFn& f, std::vector<Tensor<double>> inputs,
                                      double step = 1e-5);

// Single-tensor form; returns the max relative error over its elements.
double finite_diff_check(const ScalarFn& f, Tensor<double> x, double step = 1e-5);

}  // namespace ibert::num
