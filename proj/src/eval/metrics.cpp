#include "ibert/eval/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <stdexcept>

#include "ibert/numerics/tensor.hpp"
#include "ibert/util/parse.hpp"

namespace ibert::eval {

double bpc_from_loss(double loss_nats) { return loss_nats / std::numbers::ln2; }

double ppl_from_loss(double loss_nats) { return std::exp(loss_nats); }

double throughput(std::size_t sequences, double seconds) {
    if (!(seconds > 0.0)) throw std::invalid_argument("throughput needs a positive elapsed time");
    return static_cast<double>(sequences) / seconds;
}

double sequence_accuracy(const std::vector<Prediction>& predictions, const std::vector<Sample>& samples) {
    if (predictions.size() != samples.size())
        throw std::invalid_argument("sequence_accuracy: " + std::to_string(predictions.size()) + " predictions for " +
                                    std::to_string(samples.size()) + " samples");
    if (samples.empty()) throw std::invalid_argument("sequence_accuracy: no samples");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        std::vector<TokenId> expected;
        for (std::size_t p = 0; p < s.length; ++p)
            if (s.mask_flags[p]) expected.push_back(s.target_ids[p]);
        if (predictions[i].size() != expected.size())
            throw std::invalid_argument("sequence_accuracy: prediction " + std::to_string(i) +
                                        " does not cover the masked positions");
        if (predictions[i] == expected) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

template <typename T>
std::vector<SampleOutcome> evaluate_samples(const model::Model<T>& model, const std::vector<Sample>& samples,
                                            std::size_t batch_size, tasks::PadTo pad_to) {
    num::NoGradGuard no_grad;
    std::vector<SampleOutcome> outcomes(samples.size());
    const std::size_t vocab = model.config().vocab_size;
    for (const auto& batch : tasks::pad_and_batch(samples, batch_size, pad_to)) {
        const auto logits = model.forward(batch.input, false);
        const auto values = logits.data();
        const std::size_t steps = batch.input.steps;
        for (std::size_t b = 0; b < batch.size(); ++b) {
            auto& out = outcomes[batch.sample_index[b]];
            out.difficulty = batch.difficulties[b];
            for (std::size_t t = 0; t < steps; ++t) {
                const std::size_t pos = b * steps + t;
                if (!batch.mask[pos]) continue;
                const auto row = values.subspan(pos * vocab, vocab);
                const auto guess = static_cast<TokenId>(argmax_lowest(row));
                const TokenId target = batch.targets[pos];
                T mx = row[0];
                for (auto v : row) mx = std::max(mx, v);
                double z = 0;
                for (auto v : row) z += std::exp(static_cast<double>(v - mx));
                out.nll_sum += std::log(z) + static_cast<double>(mx) - static_cast<double>(row[target]);
                out.prediction.push_back(guess);
                ++out.masked;
                if (guess == target) ++out.correct;
            }
        }
    }
    return outcomes;
}

namespace {

struct Accumulator {
    std::size_t sequences = 0;
    std::size_t exact = 0;
    std::size_t masked = 0;
    std::size_t correct = 0;
    double nll = 0;

    void add(const SampleOutcome& o) {
        ++sequences;
        exact += o.all_correct() ? 1 : 0;
        masked += o.masked;
        correct += o.correct;
        nll += o.nll_sum;
    }

    MetricRecord record(std::size_t epoch, const std::string& split, std::string bucket) const {
        MetricRecord r;
        r.epoch = epoch;
        r.split = split;
        r.bucket = std::move(bucket);
        r.sequences = sequences;
        r.masked_tokens = masked;
        r.seq_acc = static_cast<double>(exact) / static_cast<double>(sequences);
        r.token_acc = masked ? static_cast<double>(correct) / static_cast<double>(masked) : 0.0;
        r.loss_nats = masked ? nll / static_cast<double>(masked) : 0.0;
        r.bpc = bpc_from_loss(r.loss_nats);
        r.ppl = ppl_from_loss(r.loss_nats);
        return r;
    }
};

}  // namespace

std::vector<MetricRecord> summarize(const std::vector<SampleOutcome>& outcomes, const std::string& split,
                                    std::size_t epoch, std::size_t bucket_width) {
    if (bucket_width == 0) throw std::invalid_argument("bucket width must be >= 1");
    std::map<std::size_t, Accumulator> buckets;
    Accumulator total;
    for (const auto& o : outcomes) {
        buckets[(o.difficulty / bucket_width) * bucket_width].add(o);
        total.add(o);
    }
    std::vector<MetricRecord> rows;
    for (const auto& [lo, acc] : buckets) rows.push_back(acc.record(epoch, split, std::to_string(lo)));
    if (total.sequences) rows.push_back(total.record(epoch, split, "all"));
    return rows;
}

template <typename T>
std::vector<MetricRecord> per_difficulty_report(const model::Model<T>& model, const std::vector<Sample>& samples,
                                                const std::string& split, tasks::PadTo pad_to,
                                                std::size_t bucket_width, std::size_t batch_size) {
    return summarize(evaluate_samples(model, samples, batch_size, pad_to), split, 0, bucket_width);
}

std::string format_sig6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string format_metrics_row(const MetricRecord& r) {
    std::string line = std::to_string(r.epoch) + "," + r.split + "," + r.bucket + "," + format_sig6(r.seq_acc) + "," +
                       format_sig6(r.token_acc) + "," + format_sig6(r.loss_nats) + "," + format_sig6(r.bpc) + "," +
                       format_sig6(r.ppl) + ",";
    if (r.seq_per_s) line += format_sig6(*r.seq_per_s);
    return line;
}

std::string format_metrics_csv(const std::vector<MetricRecord>& rows) {
    std::string out = std::string(kMetricsHeader) + "\n";
    for (const auto& r : rows) out += format_metrics_row(r) + "\n";
    return out;
}

std::vector<MetricRecord> parse_metrics_csv(std::string_view text, const std::string& origin) {
    std::vector<MetricRecord> rows;
    const auto lines = util::split(text, '\n');
    if (lines.empty() || util::trim(lines[0]) != kMetricsHeader)
        throw std::runtime_error(origin + ":1: expected header '" + std::string(kMetricsHeader) + "'");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto line = util::trim(lines[i]);
        if (line.empty()) continue;
        const auto f = util::split(line, ',');
        try {
            if (f.size() != 9) throw std::invalid_argument("expected 9 fields, got " + std::to_string(f.size()));
            MetricRecord r;
            r.epoch = util::parse_size(f[0], "epoch");
            r.split = f[1];
            r.bucket = f[2];
            r.seq_acc = util::parse_double(f[3], "seq_acc");
            r.token_acc = util::parse_double(f[4], "token_acc");
            r.loss_nats = util::parse_double(f[5], "loss_nats");
            r.bpc = util::parse_double(f[6], "bpc");
            r.ppl = util::parse_double(f[7], "ppl");
            if (!f[8].empty()) r.seq_per_s = util::parse_double(f[8], "seq_per_s");
            if (r.split.empty() || r.bucket.empty()) throw std::invalid_argument("empty split or bucket");
            rows.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::runtime_error(origin + ":" + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return rows;
}

template std::vector<SampleOutcome> evaluate_samples(const model::Model<float>&, const std::vector<Sample>&,
                                                     std::size_t, tasks::PadTo);
template std::vector<SampleOutcome> evaluate_samples(const model::Model<double>&, const std::vector<Sample>&,
                                                     std::size_t, tasks::PadTo);
template std::vector<MetricRecord> per_difficulty_report(const model::Model<float>&, const std::vector<Sample>&,
                                                         const std::string&, tasks::PadTo, std::size_t, std::size_t);
template std::vector<MetricRecord> per_difficulty_report(const model::Model<double>&, const std::vector<Sample>&,
                                                         const std::string&, tasks::PadTo, std::size_t, std::size_t);

}  // namespace ibert::eval
