#include "ibert/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace ibert::num {

double relative_error(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
    return std::abs(a - b) / denom;
}

std::vector<double> finite_diff_check(const ScalarFn& f, std::vector<Tensor<double>> inputs, double step) {
    for (auto& x : inputs) {
        x.set_requires_grad(true);
        x.zero_grad();
    }
    f().backward();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(inputs.size());
    for (const auto& x : inputs) analytic.emplace_back(x.grad().begin(), x.grad().end());

    std::vector<double> worst(inputs.size(), 0.0);
    NoGradGuard no_grad;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        auto values = inputs[t].mutable_data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + step;
            const double up = f().item();
            values[i] = saved - step;
            const double down = f().item();
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            worst[t] = std::max(worst[t], relative_error(analytic[t][i], numeric));
        }
    }
    return worst;
}

double finite_diff_check(const ScalarFn& f, Tensor<double> x, double step) {
    return finite_diff_check(f, std::vector<Tensor<double>>{std::move(x)}, step).front();
}

}  // namespace ibert::num
