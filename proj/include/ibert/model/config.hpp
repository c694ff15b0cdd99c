#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

namespace ibert::model {

enum class Variant {
    Ibert,       // bottom bi-LSTM, no position encoding
    IbertPe,     // sinusoidal positions added before the bottom bi-LSTM
    Ibert2,      // bottom bi-LSTM and a bi-LSTM sublayer in place of every feed-forward
    BertAbsPe,   // learned absolute position table, no recurrence
    RnnEncoder,  // stacked residual bi-LSTM layers, no attention
};

std::string_view variant_name(Variant v);
// Accepts the names above plus "ibert+pe" and "bert".
Variant parse_variant(std::string_view name);

bool has_bottom_rnn(Variant v);
bool has_attention(Variant v);
bool has_feed_forward(Variant v);
bool has_position_table(Variant v);
bool uses_sinusoidal(Variant v);

struct ModelConfig {
    std::size_t n_layers = 2;
    std::size_t n_heads = 4;
    std::size_t d_model = 128;
    std::size_t d_ff = 256;
    std::size_t vocab_size = 14;
    // Learned position rows; only BertAbsPe uses it.
    std::size_t max_positions = 0;
    double dropout_rate = 0.1;
    Variant variant = Variant::Ibert;

    // Throws std::invalid_argument naming the violated constraint.
    void validate() const;

    std::map<std::string, std::string> to_map() const;
    static ModelConfig from_map(const std::map<std::string, std::string>& kv);

    bool operator==(const ModelConfig&) const = default;
};

// Closed-form parameter count for a configuration.
std::size_t parameter_count(const ModelConfig& config);

}  // namespace ibert::model
