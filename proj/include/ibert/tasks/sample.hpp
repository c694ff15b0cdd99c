#pragma once

#include <cstdint>
#include <vector>

#include "ibert/tasks/vocab.hpp"

namespace ibert::tasks {

// One masked sequence. input_ids carries MASK where mask_flags is set;
// target_ids holds the original token at every position.
struct Sample {
    std::vector<TokenId> input_ids;
    std::vector<TokenId> target_ids;
    std::vector<std::uint8_t> mask_flags;
    std::size_t length = 0;
    // NSP difficulty d, or the length measure for text samples.
    std::size_t difficulty = 0;

    std::size_t masked_count() const;
    bool operator==(const Sample&) const = default;
};

// Builds a sample from the original tokens and the positions to mask.
Sample make_sample(std::vector<TokenId> original, const std::vector<std::size_t>& masked_positions,
                   std::size_t difficulty);

// Throws std::logic_error if the mask/input/target invariants do not hold.
void check_sample(const Sample& s);

}  // namespace ibert::tasks
