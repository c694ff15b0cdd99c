#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ibert/model/config.hpp"
#include "ibert/training/train_config.hpp"

namespace ibert::training {

using KeyValues = std::map<std::string, std::string>;

// Everything needed to rerun a training job. vocab_size and max_positions
// of 0 are filled in from the dataset.
struct RunConfig {
    std::string preset = "desk";
    std::string data;
    model::ModelConfig model = default_model();
    TrainConfig train;
    double init_std = 0.02;
    std::size_t bucket_width = 1;
    bool record_throughput = false;

    static model::ModelConfig default_model();

    KeyValues to_map() const;
    // Unknown keys and malformed values throw std::invalid_argument.
    static RunConfig from_map(const KeyValues& kv);
};

std::vector<std::string> run_config_keys();
std::vector<std::string> preset_names();
// Throws std::invalid_argument on an unknown preset.
KeyValues preset_values(const std::string& name);

// Defaults < preset < file < overrides. The preset name itself is taken
// from overrides, then the file.
RunConfig resolve_run_config(const KeyValues& file, const KeyValues& overrides);

KeyValues read_run_config_file(const std::filesystem::path& path);
std::string format_run_config(const RunConfig& config);

}  // namespace ibert::training
