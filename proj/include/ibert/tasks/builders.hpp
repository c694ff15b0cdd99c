#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ibert/tasks/dataset_io.hpp"
#include "ibert/tasks/nsp.hpp"
#include "ibert/tasks/split.hpp"
#include "ibert/tasks/text.hpp"

namespace ibert::tasks {

struct NspDatasetSpec {
    NspKind kind = NspKind::Add;
    std::size_t train_lo = 2, train_hi = 12, train_n = 25600;
    std::size_t valid_lo = 13, valid_hi = 16, valid_n = 1536;
    std::uint64_t seed = 0;
};

// The two splits use independent streams derived from seed. The manifest
// records the task, ranges, seed and per-difficulty counts.
Dataset build_nsp_dataset(const NspDatasetSpec& spec);

struct TextDatasetSpec {
    std::filesystem::path corpus;
    TextLevel level = TextLevel::Char;
    SplitBounds bounds = kCharSplit;
    std::uint64_t seed = 0;
    // Keep at most this many sentences per split, in corpus order.
    std::optional<std::size_t> max_train;
    std::optional<std::size_t> max_valid;
};

// Vocabulary from the training sentences only; one masked word per
// sentence. Padded to the split maximum when batched.
Dataset build_text_dataset(const TextDatasetSpec& spec);

}  // namespace ibert::tasks
