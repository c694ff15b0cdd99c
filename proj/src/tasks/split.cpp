#include "ibert/tasks/split.hpp"

namespace ibert::tasks {

std::string_view measure_name(Measure m) {
    switch (m) {
        case Measure::Difficulty: return "difficulty";
        case Measure::CharLen: return "char_len";
        case Measure::WordLen: return "word_len";
    }
    return "?";
}

Measure parse_measure(std::string_view name) {
    if (name == "difficulty") return Measure::Difficulty;
    if (name == "char_len") return Measure::CharLen;
    if (name == "word_len") return Measure::WordLen;
    throw std::invalid_argument("unknown split measure '" + std::string(name) + "'");
}

void SplitBounds::validate() const {
    if (train_min > threshold) throw std::invalid_argument("split bounds: train minimum exceeds threshold");
    if (valid_max <= threshold) throw std::invalid_argument("split bounds: validation maximum must exceed threshold");
}

std::size_t sample_measure(const Sample& s, Measure m) {
    // Text samples store their length measure as the difficulty as well;
    // for them the token count is authoritative.
    return m == Measure::Difficulty ? s.difficulty : s.length;
}

SplitDataset split_inductive(std::vector<Sample> samples, const SplitBounds& bounds, Measure measure) {
    return split_by<Sample>(std::move(samples), bounds,
                            [measure](const Sample& s) { return sample_measure(s, measure); });
}

}  // namespace ibert::tasks
