#pragma once

#include <span>
#include <vector>

#include "ibert/model/model.hpp"
#include "ibert/tasks/sample.hpp"

namespace ibert::tasks {

enum class PadTo { BatchMax, DatasetMax };

struct Batch {
    model::TokenBatch input;
    std::vector<TokenId> targets;      // [B, T], PAD beyond each length
    std::vector<std::uint8_t> mask;    // [B, T], false at PAD
    std::vector<std::size_t> difficulties;
    std::vector<std::size_t> sample_index;  // positions in the source list

    std::size_t size() const { return input.batch; }
};

// Groups samples[order[i]] into consecutive batches of batch_size (the last
// may be smaller) and right-pads with PAD to the widest sample in the batch
// (BatchMax) or in the whole `samples` list (DatasetMax). An empty order
// means 0..n-1.
std::vector<Batch> pad_and_batch(const std::vector<Sample>& samples, std::size_t batch_size, PadTo pad_to,
                                 std::span<const std::size_t> order = {});

}  // namespace ibert::tasks
