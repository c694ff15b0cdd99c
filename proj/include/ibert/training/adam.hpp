#pragma once

#include <cstdint>
#include <vector>

#include "ibert/model/params.hpp"
#include "ibert/training/train_config.hpp"

namespace ibert::training {

// First and second moments per parameter, in ParamStore order.
template <typename T>
struct OptimState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t t = 0;

    static OptimState zeros_like(const model::ParamStore<T>& params);
};

// Rescales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
template <typename T>
double clip_grad_norm(model::ParamStore<T>& params, double max_norm);

// One Adam update from the gradients stored on params. Gradients are
// checked for finiteness before anything is modified, so a throw leaves
// params and state at the last good step.
template <typename T>
void adam_step(model::ParamStore<T>& params, OptimState<T>& state, double lr, const TrainConfig& config);

}  // namespace ibert::training
