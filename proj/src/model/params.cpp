#include "ibert/model/params.hpp"

#include <stdexcept>

#include "ibert/rng.hpp"

namespace ibert::model {

namespace {

void add_bi_lstm(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t d_in, std::size_t hidden) {
    for (const char* dir : {"fwd", "bwd"}) {
        const std::string p = prefix + "." + dir;
        out.push_back({p + ".w_ih", {d_in, 4 * hidden}, InitKind::Normal});
        out.push_back({p + ".w_hh", {hidden, 4 * hidden}, InitKind::Normal});
        out.push_back({p + ".bias", {4 * hidden}, InitKind::ForgetBias});
    }
}

void add_norm(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t d) {
    out.push_back({prefix + ".gain", {d}, InitKind::One});
    out.push_back({prefix + ".bias", {d}, InitKind::Zero});
}

}  // namespace

std::vector<ParamSpec> parameter_layout(const ModelConfig& c) {
    c.validate();
    const std::size_t d = c.d_model;
    std::vector<ParamSpec> out;
    out.push_back({"tok_emb", {c.vocab_size, d}, InitKind::Normal});
    if (has_position_table(c.variant)) out.push_back({"pos_emb", {c.max_positions, d}, InitKind::Normal});
    if (has_bottom_rnn(c.variant)) add_bi_lstm(out, "bottom", d, d / 2);
    for (std::size_t l = 0; l < c.n_layers; ++l) {
        const std::string p = "layer" + std::to_string(l);
        if (has_attention(c.variant)) {
            for (const char* m : {"q", "k", "v", "o"}) {
                out.push_back({p + ".attn.w" + m, {d, d}, InitKind::Normal});
                out.push_back({p + ".attn.b" + m, {d}, InitKind::Zero});
            }
            add_norm(out, p + ".ln1", d);
            if (has_feed_forward(c.variant)) {
                out.push_back({p + ".ff.w1", {d, c.d_ff}, InitKind::Normal});
                out.push_back({p + ".ff.b1", {c.d_ff}, InitKind::Zero});
                out.push_back({p + ".ff.w2", {c.d_ff, d}, InitKind::Normal});
                out.push_back({p + ".ff.b2", {d}, InitKind::Zero});
            } else {
                add_bi_lstm(out, p + ".rnn", d, d / 2);
            }
            add_norm(out, p + ".ln2", d);
        } else {
            add_bi_lstm(out, p + ".rnn", d, d / 2);
            add_norm(out, p + ".ln", d);
        }
    }
    out.push_back({"head.w", {d, c.vocab_size}, InitKind::Normal});
    out.push_back({"head.b", {c.vocab_size}, InitKind::Zero});
    return out;
}

template <typename T>
void ParamStore<T>::add(std::string name, num::Tensor<T> tensor) {
    if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
    entries_.emplace_back(std::move(name), std::move(tensor));
}

template <typename T>
const num::Tensor<T>& ParamStore<T>::get(const std::string& name) const {
    for (const auto& [n, t] : entries_)
        if (n == name) return t;
    throw std::out_of_range("no parameter named '" + name + "'");
}

template <typename T>
num::Tensor<T>& ParamStore<T>::get(const std::string& name) {
    for (auto& [n, t] : entries_)
        if (n == name) return t;
    throw std::out_of_range("no parameter named '" + name + "'");
}

template <typename T>
bool ParamStore<T>::contains(const std::string& name) const {
    for (const auto& [n, t] : entries_)
        if (n == name) return true;
    return false;
}

template <typename T>
std::size_t ParamStore<T>::total_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : entries_) n += t.numel();
    return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
    for (auto& [name, t] : entries_) t.zero_grad();
}

template <typename T>
ParamStore<T> init_params(const ModelConfig& config, std::uint64_t seed, double init_std) {
    ParamStore<T> store;
    const Rng root(seed);
    std::uint64_t index = 0;
    for (const auto& spec : parameter_layout(config)) {
        Rng rng = root.split(index++);
        std::vector<T> values(num::numel(spec.shape), T(0));
        switch (spec.init) {
            case InitKind::Normal:
                for (auto& v : values) v = static_cast<T>(init_std * rng.normal());
                break;
            case InitKind::Zero: break;
            case InitKind::One: std::fill(values.begin(), values.end(), T(1)); break;
            case InitKind::ForgetBias: {
                const std::size_t hidden = values.size() / 4;
                std::fill(values.begin() + hidden, values.begin() + 2 * hidden, T(1));
                break;
            }
        }
        store.add(spec.name, num::Tensor<T>::from(spec.shape, std::move(values), true));
    }
    return store;
}

template class ParamStore<float>;
template class ParamStore<double>;
template ParamStore<float> init_params<float>(const ModelConfig&, std::uint64_t, double);
template ParamStore<double> init_params<double>(const ModelConfig&, std::uint64_t, double);

}  // namespace ibert::model
