#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "ibert/model/config.hpp"
#include "ibert/model/params.hpp"

namespace ibert::model {

// Binary checkpoint, all integers little-endian:
//
//   magic        8 bytes  "IBRTCKPT"
//   version      u32      1
//   header_len   u32      byte length of the header text
//   header       UTF-8    "key=value\n" lines, sorted by key: the ModelConfig
//                         keys followed by any "meta.*" entries
//   count        u32      number of tensors
//   count times:
//     name_len   u32
//     name       UTF-8
//     ndim       u32
//     dims       ndim x u64
//     values     prod(dims) x IEEE-754 binary32, little-endian
//
// Tensors appear in parameter_layout order.
struct Checkpoint {
    ModelConfig config;
    ParamStore<float> params;
    std::map<std::string, std::string> meta;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ibert::model
