#include "ibert/training/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ibert/numerics/tensor.hpp"

namespace ibert::training {

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("train config: " + what); };
    if (epochs < 1) fail("epochs must be >= 1");
    if (!(lr0 >= 0.0) || !std::isfinite(lr0)) fail("lr0 must be finite and >= 0");
    if (!(decay > 0.0 && decay <= 1.0)) fail("decay must be in (0, 1]");
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (eval_batch_size < 1) fail("eval_batch_size must be >= 1");
    if (!(beta1 > 0.0 && beta1 < 1.0)) fail("beta1 must be in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) fail("beta2 must be in (0, 1)");
    if (!(eps > 0.0)) fail("adam_eps must be > 0");
    if (grad_clip_norm && !(*grad_clip_norm > 0.0 && std::isfinite(*grad_clip_norm)))
        fail("grad_clip must be positive");
}

double lr_at(std::size_t epoch, const TrainConfig& config) {
    return config.lr0 * std::pow(config.decay, static_cast<double>(epoch));
}

template <typename T>
OptimState<T> OptimState<T>::zeros_like(const model::ParamStore<T>& params) {
    OptimState s;
    for (const auto& [name, p] : params) {
        s.m.emplace_back(p.numel(), 0.0);
        s.v.emplace_back(p.numel(), 0.0);
    }
    return s;
}

template <typename T>
double clip_grad_norm(model::ParamStore<T>& params, double max_norm) {
    double sq = 0;
    for (auto& [name, p] : params)
        if (p.has_grad())
            for (T g : p.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (auto& [name, p] : params)
            if (p.has_grad())
                for (T& g : p.mutable_grad()) g = static_cast<T>(static_cast<double>(g) * scale);
    }
    return norm;
}

template <typename T>
void adam_step(model::ParamStore<T>& params, OptimState<T>& state, double lr, const TrainConfig& config) {
    if (state.m.size() != params.size()) throw std::invalid_argument("optimizer state does not match parameters");
    std::size_t i = 0;
    for (auto& [name, p] : params) {
        if (state.m[i].size() != p.numel()) throw std::invalid_argument("optimizer state shape mismatch for " + name);
        if (p.has_grad())
            for (T g : p.grad())
                if (!std::isfinite(static_cast<double>(g)))
                    throw num::NumericError("non-finite gradient in parameter '" + name + "'");
        ++i;
    }
    if (config.grad_clip_norm) clip_grad_norm(params, *config.grad_clip_norm);

    state.t += 1;
    const double t = static_cast<double>(state.t);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    i = 0;
    for (auto& [name, p] : params) {
        auto& m = state.m[i];
        auto& v = state.v[i];
        ++i;
        if (!p.has_grad()) continue;
        const auto g = p.grad();
        auto theta = p.mutable_data();
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const double gk = static_cast<double>(g[k]);
            m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * gk;
            v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * gk * gk;
            const double mhat = m[k] / c1;
            const double vhat = v[k] / c2;
            theta[k] = static_cast<T>(static_cast<double>(theta[k]) - lr * mhat / (std::sqrt(vhat) + config.eps));
        }
    }
}

template struct OptimState<float>;
template struct OptimState<double>;
template double clip_grad_norm(model::ParamStore<float>&, double);
template double clip_grad_norm(model::ParamStore<double>&, double);
template void adam_step(model::ParamStore<float>&, OptimState<float>&, double, const TrainConfig&);
template void adam_step(model::ParamStore<double>&, OptimState<double>&, double, const TrainConfig&);

}  // namespace ibert::training
