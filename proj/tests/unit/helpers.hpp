#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "ibert/numerics/tensor.hpp"
#include "ibert/rng.hpp"

namespace testing {

using ibert::num::Shape;
using ibert::num::Tensor;

inline Tensor<double> random_tensor(const Shape& shape, std::uint64_t seed, double scale = 1.0,
                                    bool requires_grad = false) {
    ibert::Rng rng(seed);
    std::vector<double> v(ibert::num::numel(shape));
    for (auto& x : v) x = scale * rng.normal();
    return Tensor<double>::from(shape, std::move(v), requires_grad);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("ibert_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing
