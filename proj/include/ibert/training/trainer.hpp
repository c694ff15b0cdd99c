#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ibert/model/model.hpp"
#include "ibert/tasks/batch.hpp"
#include "ibert/tasks/sample.hpp"
#include "ibert/training/adam.hpp"

namespace ibert::training {

struct EpochStats {
    double loss = 0;       // mean masked NLL, nats, weighted by masked tokens
    double token_acc = 0;  // masked-token accuracy with dropout active
    std::size_t sequences = 0;
    std::size_t steps = 0;
    double seconds = 0;
};

// Raised when a batch fails numerically; parameters and optimizer state
// hold the values after the last completed step.
class TrainingAborted : public std::runtime_error {
public:
    TrainingAborted(std::size_t epoch, std::size_t step, const std::string& what)
        : std::runtime_error("epoch " + std::to_string(epoch) + ", step " + std::to_string(step) + ": " + what),
          epoch_(epoch), step_(step) {}
    std::size_t epoch() const { return epoch_; }
    std::size_t step() const { return step_; }

private:
    std::size_t epoch_;
    std::size_t step_;
};

// Sample order for an epoch: a Fisher-Yates shuffle keyed on (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

template <typename T>
EpochStats train_epoch(model::Model<T>& model, const std::vector<tasks::Sample>& samples, tasks::PadTo pad_to,
                       OptimState<T>& state, std::size_t epoch, const TrainConfig& config);

}  // namespace ibert::training
