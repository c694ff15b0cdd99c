#include "ibert/training/trainer.hpp"

#include <chrono>
#include <numeric>

#include "ibert/numerics/ops.hpp"
#include "ibert/rng.hpp"

namespace ibert::training {

namespace {
constexpr std::uint64_t kShuffleStream = 0x73687566;  // "shuf"
constexpr std::uint64_t kDropoutStream = 0x64726f70;  // "drop"
}  // namespace

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng(seed).split(kShuffleStream).split(epoch);
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, i - 1));
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

template <typename T>
EpochStats train_epoch(model::Model<T>& model, const std::vector<tasks::Sample>& samples, tasks::PadTo pad_to,
                       OptimState<T>& state, std::size_t epoch, const TrainConfig& config) {
    if (samples.empty()) throw std::invalid_argument("train_epoch: no training samples");
    const auto start = std::chrono::steady_clock::now();
    const auto order = epoch_order(samples.size(), config.seed, epoch);
    Rng dropout_rng = Rng(config.seed).split(kDropoutStream).split(epoch);
    const double lr = lr_at(epoch, config);
    const std::size_t vocab = model.config().vocab_size;

    EpochStats stats;
    double nll = 0;
    std::size_t masked = 0, correct = 0;
    for (const auto& batch : tasks::pad_and_batch(samples, config.batch_size, pad_to, order)) {
        try {
            model.params().zero_grad();
            const auto logits = model.forward(batch.input, true, &dropout_rng);
            auto loss = num::masked_cross_entropy(logits, batch.targets, batch.mask);
            loss.backward();
            adam_step(model.params(), state, lr, config);

            std::size_t n = 0;
            const auto values = logits.data();
            for (std::size_t pos = 0; pos < batch.mask.size(); ++pos) {
                if (!batch.mask[pos]) continue;
                ++n;
                const auto row = values.subspan(pos * vocab, vocab);
                std::size_t best = 0;
                for (std::size_t k = 1; k < vocab; ++k)
                    if (row[k] > row[best]) best = k;
                if (static_cast<std::int32_t>(best) == batch.targets[pos]) ++correct;
            }
            nll += static_cast<double>(loss.item()) * static_cast<double>(n);
            masked += n;
        } catch (const num::NumericError& e) {
            throw TrainingAborted(epoch, stats.steps, e.what());
        }
        stats.sequences += batch.size();
        ++stats.steps;
    }
    stats.loss = masked ? nll / static_cast<double>(masked) : 0.0;
    stats.token_acc = masked ? static_cast<double>(correct) / static_cast<double>(masked) : 0.0;
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return stats;
}

template EpochStats train_epoch(model::Model<float>&, const std::vector<tasks::Sample>&, tasks::PadTo,
                                OptimState<float>&, std::size_t, const TrainConfig&);
template EpochStats train_epoch(model::Model<double>&, const std::vector<tasks::Sample>&, tasks::PadTo,
                                OptimState<double>&, std::size_t, const TrainConfig&);

}  // namespace ibert::training
