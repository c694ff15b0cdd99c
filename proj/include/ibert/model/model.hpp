#pragma once

#include <cstdint>
#include <vector>

#include "ibert/model/config.hpp"
#include "ibert/model/layers.hpp"
#include "ibert/model/params.hpp"
#include "ibert/rng.hpp"

namespace ibert::model {

// Token ids row-major [batch, steps]; lengths[b] counts the valid prefix.
struct TokenBatch {
    std::size_t batch = 0;
    std::size_t steps = 0;
    std::vector<std::int32_t> tokens;
    std::vector<std::size_t> lengths;

    std::vector<std::uint8_t> key_valid() const;
};

class PositionCapacityError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

template <typename T>
class Model {
public:
    Model(ModelConfig config, ParamStore<T> params);
    // Fresh parameters drawn with init_params.
    static Model initialize(const ModelConfig& config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    ParamStore<T>& params() { return params_; }
    const ParamStore<T>& params() const { return params_; }

    // Logits [B, T, vocab]. Dropout is active only when train_mode and a
    // dropout stream is supplied.
    num::Tensor<T> forward(const TokenBatch& input, bool train_mode = false, Rng* dropout_rng = nullptr) const;

private:
    BiLstmWeights<T> bi_lstm(const std::string& prefix) const;
    AttentionWeights<T> attention(const std::string& prefix) const;

    ModelConfig config_;
    ParamStore<T> params_;
};

extern template class Model<float>;
extern template class Model<double>;

}  // namespace ibert::model
