#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ibert/model/model.hpp"
#include "ibert/tasks/batch.hpp"
#include "ibert/tasks/sample.hpp"

namespace ibert::eval {

using tasks::Sample;
using tasks::TokenId;

// Loss-derived columns are over masked positions only.
struct MetricRecord {
    std::size_t epoch = 0;
    std::string split;
    std::string bucket;  // bucket lower bound, or "all"
    double seq_acc = 0;
    double token_acc = 0;
    double loss_nats = 0;
    double bpc = 0;
    double ppl = 1;
    // Training throughput of the epoch; absent when not recorded.
    std::optional<double> seq_per_s;
    std::size_t sequences = 0;
    std::size_t masked_tokens = 0;
};

double bpc_from_loss(double loss_nats);
double ppl_from_loss(double loss_nats);
// Throws std::invalid_argument when seconds <= 0.
double throughput(std::size_t sequences, double seconds);

// Lowest index among the maxima.
template <typename T>
std::size_t argmax_lowest(std::span<const T> row) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < row.size(); ++i)
        if (row[i] > row[best]) best = i;
    return best;
}

// predictions[i] lists the predicted ids at the masked positions of
// samples[i], in position order.
using Prediction = std::vector<TokenId>;
double sequence_accuracy(const std::vector<Prediction>& predictions, const std::vector<Sample>& samples);

// Per-sample result of running a model over a split.
struct SampleOutcome {
    std::size_t difficulty = 0;
    Prediction prediction;
    std::size_t masked = 0;
    std::size_t correct = 0;
    double nll_sum = 0;  // nats, summed over masked positions

    bool all_correct() const { return correct == masked; }
};

template <typename T>
std::vector<SampleOutcome> evaluate_samples(const model::Model<T>& model, const std::vector<Sample>& samples,
                                            std::size_t batch_size, tasks::PadTo pad_to);

// Groups outcomes into buckets [lo, lo + bucket_width) keyed by difficulty,
// sorted ascending, followed by the aggregate "all" row. Buckets without
// samples are skipped.
std::vector<MetricRecord> summarize(const std::vector<SampleOutcome>& outcomes, const std::string& split,
                                    std::size_t epoch, std::size_t bucket_width = 1);

template <typename T>
std::vector<MetricRecord> per_difficulty_report(const model::Model<T>& model, const std::vector<Sample>& samples,
                                                const std::string& split, tasks::PadTo pad_to,
                                                std::size_t bucket_width = 1, std::size_t batch_size = 64);

// CSV with header epoch,split,bucket,seq_acc,token_acc,loss_nats,bpc,ppl,seq_per_s
// and 6 significant digits; seq_per_s is left empty when absent.
inline constexpr const char* kMetricsHeader = "epoch,split,bucket,seq_acc,token_acc,loss_nats,bpc,ppl,seq_per_s";
std::string format_metrics_row(const MetricRecord& r);
std::string format_metrics_csv(const std::vector<MetricRecord>& rows);
// Throws std::runtime_error naming origin and line on malformed input.
std::vector<MetricRecord> parse_metrics_csv(std::string_view text, const std::string& origin);

std::string format_sig6(double v);

}  // namespace ibert::eval
