#include "ibert/model/model.hpp"

#include <numeric>

#include "ibert/numerics/ops.hpp"

namespace ibert::model {

using namespace ibert::num;

std::vector<std::uint8_t> TokenBatch::key_valid() const {
    std::vector<std::uint8_t> valid(batch * steps, 0);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t t = 0; t < std::min(lengths[b], steps); ++t) valid[b * steps + t] = 1;
    return valid;
}

template <typename T>
Model<T>::Model(ModelConfig config, ParamStore<T> params) : config_(std::move(config)), params_(std::move(params)) {
    config_.validate();
    const auto layout = parameter_layout(config_);
    if (layout.size() != params_.size())
        throw std::invalid_argument("parameter set has " + std::to_string(params_.size()) + " tensors, config needs " +
                                    std::to_string(layout.size()));
    for (const auto& spec : layout) {
        if (!params_.contains(spec.name)) throw std::invalid_argument("missing parameter '" + spec.name + "'");
        if (params_.get(spec.name).shape() != spec.shape)
            throw ShapeError("parameter '" + spec.name + "' has shape " + to_string(params_.get(spec.name).shape()) +
                             ", config needs " + to_string(spec.shape));
    }
}

template <typename T>
Model<T> Model<T>::initialize(const ModelConfig& config, std::uint64_t seed) {
    return Model(config, init_params<T>(config, seed));
}

template <typename T>
BiLstmWeights<T> Model<T>::bi_lstm(const std::string& prefix) const {
    auto dir = [&](const char* d) {
        const std::string p = prefix + "." + d;
        return LstmWeights<T>{params_.get(p + ".w_ih"), params_.get(p + ".w_hh"), params_.get(p + ".bias")};
    };
    return {dir("fwd"), dir("bwd")};
}

template <typename T>
AttentionWeights<T> Model<T>::attention(const std::string& prefix) const {
    auto p = [&](const char* n) { return params_.get(prefix + ".attn." + n); };
    return {p("wq"), p("bq"), p("wk"), p("bk"), p("wv"), p("bv"), p("wo"), p("bo")};
}

template <typename T>
Tensor<T> Model<T>::forward(const TokenBatch& input, bool train_mode, Rng* dropout_rng) const {
    const auto& c = config_;
    if (input.tokens.size() != input.batch * input.steps || input.lengths.size() != input.batch)
        throw ShapeError("token batch is inconsistent with its [" + std::to_string(input.batch) + "," +
                         std::to_string(input.steps) + "] shape");
    if (has_position_table(c.variant) && input.steps > c.max_positions)
        throw PositionCapacityError("sequence width " + std::to_string(input.steps) + " exceeds the " +
                                    std::to_string(c.max_positions) + " learned positions");
    const bool drop = train_mode && dropout_rng != nullptr && c.dropout_rate > 0.0;
    auto maybe_dropout = [&](const Tensor<T>& t) { return drop ? dropout(t, c.dropout_rate, *dropout_rng) : t; };

    const std::span<const std::size_t> lengths(input.lengths);
    const auto key_valid = input.key_valid();

    auto x = embedding(params_.get("tok_emb"), input.tokens, {input.batch, input.steps});
    if (uses_sinusoidal(c.variant)) x = add(x, sinusoidal_pe<T>(input.steps, c.d_model));
    if (has_position_table(c.variant)) {
        std::vector<std::int32_t> positions(input.steps);
        std::iota(positions.begin(), positions.end(), 0);
        x = add(x, embedding(params_.get("pos_emb"), positions, {input.steps}));
    }
    x = maybe_dropout(x);
    if (has_bottom_rnn(c.variant)) x = bi_lstm_forward(x, lengths, bi_lstm("bottom"));

    for (std::size_t l = 0; l < c.n_layers; ++l) {
        const std::string p = "layer" + std::to_string(l);
        auto norm = [&](const Tensor<T>& t, const char* name) {
            return layer_norm(t, params_.get(p + "." + name + ".gain"), params_.get(p + "." + name + ".bias"));
        };
        if (!has_attention(c.variant)) {
            x = norm(add(x, maybe_dropout(bi_lstm_forward(x, lengths, bi_lstm(p + ".rnn")))), "ln");
            continue;
        }
        x = norm(add(x, maybe_dropout(multi_head_attention(x, attention(p), c.n_heads, key_valid))), "ln1");
        Tensor<T> inner = has_feed_forward(c.variant)
                              ? feed_forward(x, params_.get(p + ".ff.w1"), params_.get(p + ".ff.b1"),
                                             params_.get(p + ".ff.w2"), params_.get(p + ".ff.b2"))
                              : bi_lstm_forward(x, lengths, bi_lstm(p + ".rnn"));
        x = norm(add(x, maybe_dropout(inner)), "ln2");
    }
    return add(matmul(x, params_.get("head.w")), params_.get("head.b"));
}

template class Model<float>;
template class Model<double>;

}  // namespace ibert::model
