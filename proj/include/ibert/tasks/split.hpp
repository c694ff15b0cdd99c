#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ibert/tasks/sample.hpp"

namespace ibert::tasks {

enum class Measure { Difficulty, CharLen, WordLen };

std::string_view measure_name(Measure m);
Measure parse_measure(std::string_view name);

// train: train_min <= m <= threshold; valid: threshold < m <= valid_max.
struct SplitBounds {
    std::size_t train_min = 0;
    std::size_t threshold = 0;
    std::size_t valid_max = static_cast<std::size_t>(-1);

    void validate() const;
};

// Char-level and word-level partitions used for length-split masked LM.
inline constexpr SplitBounds kCharSplit{16, 192, 224};
inline constexpr SplitBounds kWordSplit{2, 32, 64};

template <typename Item>
struct Split {
    std::vector<Item> train;
    std::vector<Item> valid;
    SplitBounds bounds;
    std::size_t dropped = 0;
};

using SplitDataset = Split<Sample>;

// Order-preserving partition of arbitrary items by a length measure. Throws
// std::invalid_argument when either side ends up empty.
template <typename Item>
Split<Item> split_by(std::vector<Item> items, const SplitBounds& bounds,
                     const std::function<std::size_t(const Item&)>& measure) {
    bounds.validate();
    Split<Item> out;
    out.bounds = bounds;
    for (auto& item : items) {
        const std::size_t m = measure(item);
        if (m >= bounds.train_min && m <= bounds.threshold)
            out.train.push_back(std::move(item));
        else if (m > bounds.threshold && m <= bounds.valid_max)
            out.valid.push_back(std::move(item));
        else
            ++out.dropped;
    }
    if (out.train.empty()) throw std::invalid_argument("inductive split left the training set empty");
    if (out.valid.empty()) throw std::invalid_argument("inductive split left the validation set empty");
    return out;
}

std::size_t sample_measure(const Sample& s, Measure m);

SplitDataset split_inductive(std::vector<Sample> samples, const SplitBounds& bounds, Measure measure);

}  // namespace ibert::tasks
