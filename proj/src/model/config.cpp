#include "ibert/model/config.hpp"

#include <stdexcept>

#include "ibert/util/parse.hpp"

namespace ibert::model {

std::string_view variant_name(Variant v) {
    switch (v) {
        case Variant::Ibert: return "ibert";
        case Variant::IbertPe: return "ibert_pe";
        case Variant::Ibert2: return "ibert2";
        case Variant::BertAbsPe: return "bert_abs_pe";
        case Variant::RnnEncoder: return "rnn_encoder";
    }
    return "?";
}

Variant parse_variant(std::string_view name) {
    if (name == "ibert") return Variant::Ibert;
    if (name == "ibert_pe" || name == "ibert+pe") return Variant::IbertPe;
    if (name == "ibert2") return Variant::Ibert2;
    if (name == "bert_abs_pe" || name == "bert") return Variant::BertAbsPe;
    if (name == "rnn_encoder" || name == "rnn") return Variant::RnnEncoder;
    throw std::invalid_argument("unknown variant '" + std::string(name) + "'");
}

bool has_bottom_rnn(Variant v) {
    return v == Variant::Ibert || v == Variant::IbertPe || v == Variant::Ibert2;
}
bool has_attention(Variant v) { return v != Variant::RnnEncoder; }
bool has_feed_forward(Variant v) { return has_attention(v) && v != Variant::Ibert2; }
bool has_position_table(Variant v) { return v == Variant::BertAbsPe; }
bool uses_sinusoidal(Variant v) { return v == Variant::IbertPe; }

void ModelConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("model config: " + what); };
    if (n_layers == 0) fail("layers must be >= 1");
    if (d_model == 0 || d_model % 2 != 0) fail("d_model must be positive and even");
    if (vocab_size == 0) fail("vocab_size must be >= 1");
    if (has_attention(variant)) {
        if (n_heads == 0 || d_model % n_heads != 0) fail("d_model must be divisible by heads");
    }
    if (has_feed_forward(variant) && d_ff == 0) fail("d_ff must be >= 1");
    if (has_position_table(variant) && max_positions == 0) fail("max_positions must be >= 1 for bert_abs_pe");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout must be in [0, 1)");
}

std::map<std::string, std::string> ModelConfig::to_map() const {
    return {
        {"variant", std::string(variant_name(variant))},
        {"layers", std::to_string(n_layers)},
        {"heads", std::to_string(n_heads)},
        {"d_model", std::to_string(d_model)},
        {"d_ff", std::to_string(d_ff)},
        {"vocab_size", std::to_string(vocab_size)},
        {"max_positions", std::to_string(max_positions)},
        {"dropout", util::format_double(dropout_rate)},
    };
}

ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& kv) {
    ModelConfig c;
    auto get = [&](const char* key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    if (auto* v = get("variant")) c.variant = parse_variant(*v);
    if (auto* v = get("layers")) c.n_layers = util::parse_size(*v, "layers");
    if (auto* v = get("heads")) c.n_heads = util::parse_size(*v, "heads");
    if (auto* v = get("d_model")) c.d_model = util::parse_size(*v, "d_model");
    if (auto* v = get("d_ff")) c.d_ff = util::parse_size(*v, "d_ff");
    if (auto* v = get("vocab_size")) c.vocab_size = util::parse_size(*v, "vocab_size");
    if (auto* v = get("max_positions")) c.max_positions = util::parse_size(*v, "max_positions");
    if (auto* v = get("dropout")) c.dropout_rate = util::parse_double(*v, "dropout");
    return c;
}

std::size_t parameter_count(const ModelConfig& c) {
    const std::size_t d = c.d_model;
    const std::size_t v = c.vocab_size;
    const std::size_t bi_lstm = 6 * d * d + 4 * d;  // two directions of width d/2
    const std::size_t attention = 4 * (d * d + d);
    const std::size_t norm = 2 * d;
    const std::size_t ff = 2 * d * c.d_ff + c.d_ff + d;

    std::size_t total = v * d + d * v + v;
    if (has_position_table(c.variant)) total += c.max_positions * d;
    if (has_bottom_rnn(c.variant)) total += bi_lstm;
    std::size_t layer = 0;
    switch (c.variant) {
        case Variant::Ibert:
        case Variant::IbertPe:
        case Variant::BertAbsPe: layer = attention + ff + 2 * norm; break;
        case Variant::Ibert2: layer = attention + bi_lstm + 2 * norm; break;
        case Variant::RnnEncoder: layer = bi_lstm + norm; break;
    }
    return total + c.n_layers * layer;
}

}  // namespace ibert::model
