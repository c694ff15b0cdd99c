#include "ibert/tasks/batch.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace ibert::tasks {

std::vector<Batch> pad_and_batch(const std::vector<Sample>& samples, std::size_t batch_size, PadTo pad_to,
                                 std::span<const std::size_t> order) {
    if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
    std::vector<std::size_t> identity;
    if (order.empty()) {
        identity.resize(samples.size());
        std::iota(identity.begin(), identity.end(), 0);
        order = identity;
    }
    std::size_t dataset_width = 0;
    for (const auto& s : samples) dataset_width = std::max(dataset_width, s.length);

    std::vector<Batch> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t n = std::min(batch_size, order.size() - start);
        std::size_t width = dataset_width;
        if (pad_to == PadTo::BatchMax) {
            width = 0;
            for (std::size_t i = 0; i < n; ++i) width = std::max(width, samples.at(order[start + i]).length);
        }
        Batch b;
        b.input.batch = n;
        b.input.steps = width;
        b.input.tokens.assign(n * width, Vocab::kPad);
        b.targets.assign(n * width, Vocab::kPad);
        b.mask.assign(n * width, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t idx = order[start + i];
            const Sample& s = samples.at(idx);
            std::copy(s.input_ids.begin(), s.input_ids.end(), b.input.tokens.begin() + i * width);
            std::copy(s.target_ids.begin(), s.target_ids.end(), b.targets.begin() + i * width);
            std::copy(s.mask_flags.begin(), s.mask_flags.end(), b.mask.begin() + i * width);
            b.input.lengths.push_back(s.length);
            b.difficulties.push_back(s.difficulty);
            b.sample_index.push_back(idx);
        }
        batches.push_back(std::move(b));
    }
    return batches;
}

}  // namespace ibert::tasks
