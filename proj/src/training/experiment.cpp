#include "ibert/training/experiment.hpp"

#include <cstdio>
#include <set>

#include "ibert/model/checkpoint.hpp"
#include "ibert/util/fs.hpp"
#include "ibert/util/parse.hpp"

namespace ibert::training {

Selection selection_for(const tasks::Dataset& dataset) {
    static const std::set<std::string> nsp = {"add", "copy", "reverse"};
    auto it = dataset.manifest.find("task");
    return it != dataset.manifest.end() && nsp.count(it->second) ? Selection::ValidSeqAcc : Selection::ValidLoss;
}

model::ModelConfig resolve_model_config(model::ModelConfig config, const tasks::Dataset& dataset) {
    const std::size_t v = dataset.vocab.size();
    if (config.vocab_size == 0)
        config.vocab_size = v;
    else if (config.vocab_size != v)
        throw std::invalid_argument("vocab_size " + std::to_string(config.vocab_size) + " does not match the dataset (" +
                                    std::to_string(v) + " tokens)");
    if (model::has_position_table(config.variant) && config.max_positions == 0)
        config.max_positions = dataset.max_length();
    config.validate();
    return config;
}

namespace {

const eval::MetricRecord& aggregate(const std::vector<eval::MetricRecord>& rows) {
    for (const auto& r : rows)
        if (r.bucket == "all") return r;
    throw std::logic_error("no aggregate row");
}

std::string format_timing(const std::vector<EpochTiming>& timing) {
    std::string out = "epoch,sequences,seconds,seq_per_s,train_loss_nats\n";
    for (const auto& t : timing)
        out += std::to_string(t.epoch) + "," + std::to_string(t.sequences) + "," + eval::format_sig6(t.seconds) + "," +
               eval::format_sig6(t.seconds > 0 ? eval::throughput(t.sequences, t.seconds) : 0.0) + "," +
               eval::format_sig6(t.train_loss) + "\n";
    return out;
}

}  // namespace

TrainReport run_experiment(const model::ModelConfig& config, const tasks::Dataset& dataset,
                           const TrainConfig& train, const std::filesystem::path& out_dir,
                           const ExperimentOptions& options) {
    train.validate();
    if (dataset.train.empty() || dataset.valid.empty()) throw std::invalid_argument("dataset has an empty split");
    std::filesystem::create_directories(out_dir);

    TrainReport report;
    report.model = resolve_model_config(config, dataset);
    const Selection selection = selection_for(dataset);
    const tasks::PadTo pad_to = dataset.pad_to();

    auto net = model::Model<float>(report.model,
                                   model::init_params<float>(report.model, train.seed, options.init_std));
    auto state = OptimState<float>::zeros_like(net.params());

    bool have_best = false;
    for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
        const EpochStats stats = train_epoch(net, dataset.train, pad_to, state, epoch, train);
        report.timing.push_back({epoch, stats.sequences, stats.seconds, stats.loss});

        auto train_rows = eval::summarize(
            eval::evaluate_samples(net, dataset.train, train.eval_batch_size, pad_to), "train", epoch,
            options.bucket_width);
        auto valid_rows = eval::summarize(
            eval::evaluate_samples(net, dataset.valid, train.eval_batch_size, pad_to), "valid", epoch,
            options.bucket_width);
        if (options.record_throughput && stats.seconds > 0)
            train_rows.back().seq_per_s = eval::throughput(stats.sequences, stats.seconds);

        const auto& valid_all = aggregate(valid_rows);
        const double score = selection == Selection::ValidSeqAcc ? valid_all.seq_acc : -valid_all.loss_nats;
        report.rows.insert(report.rows.end(), train_rows.begin(), train_rows.end());
        report.rows.insert(report.rows.end(), valid_rows.begin(), valid_rows.end());

        model::Checkpoint ck{report.model, net.params(), {{"epoch", std::to_string(epoch)},
                                                          {"seed", std::to_string(train.seed)}}};
        if (!have_best || score > report.best_score) {
            have_best = true;
            report.best_score = score;
            report.best_epoch = epoch;
            model::save_checkpoint(out_dir / "checkpoint_best.bin", ck);
        }
        if (epoch + 1 == train.epochs) model::save_checkpoint(out_dir / "checkpoint_final.bin", ck);

        util::write_file_atomic(out_dir / "metrics.csv", eval::format_metrics_csv(report.rows));
        util::write_file_atomic(out_dir / "timing.csv", format_timing(report.timing));
    }
    util::write_file_atomic(out_dir / "report.txt", format_report(report, selection));
    auto task = dataset.manifest.find("task");
    util::write_file_atomic(
        out_dir / "summary.txt",
        tasks::format_key_values({{"best_epoch", std::to_string(report.best_epoch)},
                                  {"epochs", std::to_string(train.epochs)},
                                  {"parameters", std::to_string(model::parameter_count(report.model))},
                                  {"selection", selection == Selection::ValidSeqAcc ? "valid_seq_acc" : "valid_loss"},
                                  {"task", task == dataset.manifest.end() ? "unknown" : task->second},
                                  {"variant", std::string(model::variant_name(report.model.variant))}}));
    return report;
}

std::string format_report(const TrainReport& report, Selection selection) {
    std::string out;
    out += "# Loss, bpc and ppl are over masked positions only.\n";
    out += "model: " + std::string(model::variant_name(report.model.variant)) + ", " +
           std::to_string(model::parameter_count(report.model)) + " parameters\n";
    out += "selection: " + std::string(selection == Selection::ValidSeqAcc ? "valid seq_acc" : "valid loss") + "\n";
    out += "best epoch: " + std::to_string(report.best_epoch) + "\n";

    auto table = [&](std::size_t epoch) {
        char line[160];
        std::string t = "split  bucket    seq_acc  token_acc  loss_nats        bpc        ppl\n";
        for (const auto& r : report.rows) {
            if (r.epoch != epoch) continue;
            std::snprintf(line, sizeof line, "%-6s %-7s %9.4f %10.4f %10.4f %10.4f %10.4f\n", r.split.c_str(),
                          r.bucket.c_str(), r.seq_acc, r.token_acc, r.loss_nats, r.bpc, r.ppl);
            t += line;
        }
        return t;
    };
    out += "\nbest epoch " + std::to_string(report.best_epoch) + ":\n" + table(report.best_epoch);
    if (!report.rows.empty()) {
        const std::size_t last = report.rows.back().epoch;
        out += "\nfinal epoch " + std::to_string(last) + ":\n" + table(last);
    }
    return out;
}

}  // namespace ibert::training
