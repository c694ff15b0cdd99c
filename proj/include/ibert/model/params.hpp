#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ibert/model/config.hpp"
#include "ibert/numerics/tensor.hpp"

namespace ibert::model {

enum class InitKind { Normal, Zero, One, ForgetBias };

struct ParamSpec {
    std::string name;
    num::Shape shape;
    InitKind init;
};

// Every parameter tensor the configuration needs, in a fixed order.
std::vector<ParamSpec> parameter_layout(const ModelConfig& config);

// Named parameter tensors in layout order.
template <typename T>
class ParamStore {
public:
    void add(std::string name, num::Tensor<T> tensor);
    const num::Tensor<T>& get(const std::string& name) const;
    num::Tensor<T>& get(const std::string& name);
    bool contains(const std::string& name) const;

    std::size_t size() const { return entries_.size(); }
    std::size_t total_count() const;
    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    void zero_grad();

    template <typename U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        for (const auto& [name, t] : entries_) {
            std::vector<U> values(t.data().begin(), t.data().end());
            out.add(name, num::Tensor<U>::from(t.shape(), std::move(values), t.requires_grad()));
        }
        return out;
    }

private:
    std::vector<std::pair<std::string, num::Tensor<T>>> entries_;
};

// Weights ~ Normal(0, init_std^2), biases 0, layer-norm gains 1, LSTM forget
// gate bias +1. Deterministic in `seed`.
template <typename T>
ParamStore<T> init_params(const ModelConfig& config, std::uint64_t seed, double init_std = 0.02);

extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace ibert::model
