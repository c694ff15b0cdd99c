#include "ibert/training/run_config.hpp"

#include <algorithm>
#include <stdexcept>

#include "ibert/tasks/dataset_io.hpp"
#include "ibert/util/fs.hpp"
#include "ibert/util/parse.hpp"

namespace ibert::training {

namespace {

const std::vector<std::string>& model_keys() {
    static const std::vector<std::string> keys = {"variant",    "layers",        "heads",  "d_model",
                                                  "d_ff",       "vocab_size",    "max_positions", "dropout"};
    return keys;
}

const std::vector<std::string>& own_keys() {
    static const std::vector<std::string> keys = {
        "preset", "data",     "epochs",  "lr0",  "decay",           "batch_size", "beta1",       "beta2",
        "adam_eps", "grad_clip", "seed", "eval_batch_size", "init_std", "bucket_width", "record_throughput"};
    return keys;
}

bool parse_bool(const std::string& s, const std::string& what) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw std::invalid_argument(what + ": expected true or false, got '" + s + "'");
}

}  // namespace

model::ModelConfig RunConfig::default_model() {
    model::ModelConfig m;
    m.vocab_size = 0;
    return m;
}

std::vector<std::string> run_config_keys() {
    auto keys = model_keys();
    keys.insert(keys.end(), own_keys().begin(), own_keys().end());
    std::sort(keys.begin(), keys.end());
    return keys;
}

std::vector<std::string> preset_names() { return {"desk", "paper-nsp", "paper-lm", "paper-lm-word"}; }

KeyValues preset_values(const std::string& name) {
    // Full-size presets: 12 layers of width 768; d_ff follows BERT-base.
    const KeyValues full_model = {{"layers", "12"}, {"heads", "12"}, {"d_model", "768"}, {"d_ff", "3072"}};
    KeyValues kv;
    if (name == "desk") return kv;
    if (name == "paper-nsp") {
        kv = full_model;
        kv.insert({{"epochs", "50"}, {"lr0", "3e-05"}, {"decay", "0.97"}, {"batch_size", "32"}});
    } else if (name == "paper-lm" || name == "paper-lm-word") {
        kv = full_model;
        kv.insert({{"epochs", "100"}, {"lr0", "0.0001"}, {"decay", "0.97"},
                   {"batch_size", name == "paper-lm" ? "16" : "32"}});
    } else {
        throw std::invalid_argument("unknown preset '" + name + "'");
    }
    return kv;
}

KeyValues RunConfig::to_map() const {
    KeyValues kv = model.to_map();
    kv["preset"] = preset;
    kv["data"] = data;
    kv["epochs"] = std::to_string(train.epochs);
    kv["lr0"] = util::format_double(train.lr0);
    kv["decay"] = util::format_double(train.decay);
    kv["batch_size"] = std::to_string(train.batch_size);
    kv["beta1"] = util::format_double(train.beta1);
    kv["beta2"] = util::format_double(train.beta2);
    kv["adam_eps"] = util::format_double(train.eps);
    kv["grad_clip"] = train.grad_clip_norm ? util::format_double(*train.grad_clip_norm) : "none";
    kv["seed"] = std::to_string(train.seed);
    kv["eval_batch_size"] = std::to_string(train.eval_batch_size);
    kv["init_std"] = util::format_double(init_std);
    kv["bucket_width"] = std::to_string(bucket_width);
    kv["record_throughput"] = record_throughput ? "true" : "false";
    return kv;
}

RunConfig RunConfig::from_map(const KeyValues& kv) {
    const auto keys = run_config_keys();
    for (const auto& [k, v] : kv)
        if (!std::binary_search(keys.begin(), keys.end(), k))
            throw std::invalid_argument("unknown config key '" + k + "'");

    RunConfig c;
    KeyValues model_kv = c.model.to_map();
    for (const auto& k : model_keys())
        if (auto it = kv.find(k); it != kv.end()) model_kv[k] = it->second;
    c.model = model::ModelConfig::from_map(model_kv);

    auto get = [&](const char* key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    if (auto* v = get("preset")) c.preset = *v;
    if (auto* v = get("data")) c.data = *v;
    auto& t = c.train;
    if (auto* v = get("epochs")) t.epochs = util::parse_size(*v, "epochs");
    if (auto* v = get("lr0")) t.lr0 = util::parse_double(*v, "lr0");
    if (auto* v = get("decay")) t.decay = util::parse_double(*v, "decay");
    if (auto* v = get("batch_size")) t.batch_size = util::parse_size(*v, "batch_size");
    if (auto* v = get("beta1")) t.beta1 = util::parse_double(*v, "beta1");
    if (auto* v = get("beta2")) t.beta2 = util::parse_double(*v, "beta2");
    if (auto* v = get("adam_eps")) t.eps = util::parse_double(*v, "adam_eps");
    if (auto* v = get("grad_clip")) {
        if (*v == "none" || *v == "0")
            t.grad_clip_norm.reset();
        else
            t.grad_clip_norm = util::parse_double(*v, "grad_clip");
    }
    if (auto* v = get("seed")) t.seed = util::parse_u64(*v, "seed");
    if (auto* v = get("eval_batch_size")) t.eval_batch_size = util::parse_size(*v, "eval_batch_size");
    if (auto* v = get("init_std")) c.init_std = util::parse_double(*v, "init_std");
    if (auto* v = get("bucket_width")) c.bucket_width = util::parse_size(*v, "bucket_width");
    if (auto* v = get("record_throughput")) c.record_throughput = parse_bool(*v, "record_throughput");

    t.validate();
    if (!(c.init_std > 0.0)) throw std::invalid_argument("init_std must be > 0");
    if (c.bucket_width == 0) throw std::invalid_argument("bucket_width must be >= 1");
    return c;
}

RunConfig resolve_run_config(const KeyValues& file, const KeyValues& overrides) {
    std::string preset = "desk";
    if (auto it = file.find("preset"); it != file.end()) preset = it->second;
    if (auto it = overrides.find("preset"); it != overrides.end()) preset = it->second;
    KeyValues merged = preset_values(preset);
    for (const auto& [k, v] : file) merged[k] = v;
    for (const auto& [k, v] : overrides) merged[k] = v;
    merged["preset"] = preset;
    return RunConfig::from_map(merged);
}

KeyValues read_run_config_file(const std::filesystem::path& path) {
    return tasks::parse_key_values(util::read_file(path), path.string());
}

std::string format_run_config(const RunConfig& config) { return tasks::format_key_values(config.to_map()); }

}  // namespace ibert::training
