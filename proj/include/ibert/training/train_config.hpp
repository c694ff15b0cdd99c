#pragma once

#include <cstdint>
#include <optional>

namespace ibert::training {

struct TrainConfig {
    std::size_t epochs = 30;
    double lr0 = 1e-3;
    double decay = 0.97;
    std::size_t batch_size = 32;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::optional<double> grad_clip_norm = 1.0;
    std::uint64_t seed = 0;
    std::size_t eval_batch_size = 64;

    // Throws std::invalid_argument naming the offending field.
    void validate() const;
};

// lr0 * decay^epoch, epoch counted from 0.
double lr_at(std::size_t epoch, const TrainConfig& config);

}  // namespace ibert::training
