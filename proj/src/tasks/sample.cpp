#include "ibert/tasks/sample.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ibert::tasks {

std::size_t Sample::masked_count() const {
    return static_cast<std::size_t>(std::count(mask_flags.begin(), mask_flags.end(), std::uint8_t{1}));
}

Sample make_sample(std::vector<TokenId> original, const std::vector<std::size_t>& masked_positions,
                   std::size_t difficulty) {
    Sample s;
    s.length = original.size();
    s.difficulty = difficulty;
    s.input_ids = original;
    s.mask_flags.assign(original.size(), 0);
    for (auto p : masked_positions) {
        if (p >= original.size()) throw std::out_of_range("mask position beyond sequence end");
        s.input_ids[p] = Vocab::kMask;
        s.mask_flags[p] = 1;
    }
    s.target_ids = std::move(original);
    return s;
}

void check_sample(const Sample& s) {
    if (s.input_ids.size() != s.length || s.target_ids.size() != s.length || s.mask_flags.size() != s.length)
        throw std::logic_error("sample fields disagree on length " + std::to_string(s.length));
    for (std::size_t i = 0; i < s.length; ++i) {
        const bool masked = s.mask_flags[i] != 0;
        if (masked != (s.input_ids[i] == Vocab::kMask))
            throw std::logic_error("mask flag and MASK token disagree at position " + std::to_string(i));
        if (!masked && s.input_ids[i] != s.target_ids[i])
            throw std::logic_error("unmasked input differs from target at position " + std::to_string(i));
    }
}

}  // namespace ibert::tasks
