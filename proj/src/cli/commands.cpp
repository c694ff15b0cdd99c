#include "ibert/cli/commands.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "ibert/eval/metrics.hpp"
#include "ibert/eval/report.hpp"
#include "ibert/model/checkpoint.hpp"
#include "ibert/numerics/tensor.hpp"
#include "ibert/tasks/builders.hpp"
#include "ibert/training/experiment.hpp"
#include "ibert/training/run_config.hpp"
#include "ibert/util/fs.hpp"
#include "ibert/util/parse.hpp"

namespace ibert::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::string dashed(std::string key) {
    for (auto& c : key)
        if (c == '_') c = '-';
    return key;
}

// Output directory: --out if given, else <$IBERT_OUTPUT_ROOT>/<fallback>.
fs::path resolve_out(const std::string& out, const std::string& fallback) {
    if (!out.empty()) return out;
    const char* root = std::getenv(kOutputRootEnv);
    if (root == nullptr || *root == '\0')
        throw UsageError("--out is required when " + std::string(kOutputRootEnv) + " is not set");
    return fs::path(root) / fallback;
}

// Run directories are append-only unless --force.
void prepare_out_dir(const fs::path& dir, bool force) {
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw UsageError("output path '" + dir.string() + "' is not a directory");
        if (!fs::is_empty(dir)) {
            if (!force) throw UsageError("output directory '" + dir.string() + "' is not empty (use --force)");
            fs::remove_all(dir);
        }
    }
    fs::create_directories(dir);
}

tasks::Dataset load_dataset(const std::string& dir) {
    if (dir.empty()) throw UsageError("no dataset given (--data)");
    if (!fs::is_directory(dir)) throw UsageError("dataset directory '" + dir + "' does not exist");
    return tasks::read_dataset(dir);
}

// Options mirroring run-config keys, collected only when given.
struct ConfigFlags {
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;

    void attach(CLI::App* cmd, const std::set<std::string>& skip = {}) {
        for (const auto& key : training::run_config_keys()) {
            if (skip.count(key)) continue;
            options[key] = cmd->add_option("--" + dashed(key), values[key], "config key '" + key + "'");
        }
    }

    training::KeyValues given() const {
        training::KeyValues kv;
        for (const auto& [key, opt] : options)
            if (opt->count()) kv[key] = values.at(key);
        return kv;
    }
};

// ---- gen

struct GenArgs {
    std::string task;
    std::string train_d = "2..12", valid_d = "13..16";
    std::size_t train_n = 25600, valid_n = 1536;
    std::string corpus, level = "char";
    std::optional<std::size_t> train_min, threshold, valid_max, max_train, max_valid;
    std::uint64_t seed = 0;
    std::string out;
    bool force = false;
};

tasks::Dataset build_from_args(const GenArgs& a) {
    if (a.task == "text") {
        if (a.corpus.empty()) throw UsageError("--corpus is required for --task text");
        tasks::TextDatasetSpec spec;
        spec.corpus = a.corpus;
        spec.level = tasks::parse_text_level(a.level);
        spec.bounds = spec.level == tasks::TextLevel::Char ? tasks::kCharSplit : tasks::kWordSplit;
        if (a.train_min) spec.bounds.train_min = *a.train_min;
        if (a.threshold) spec.bounds.threshold = *a.threshold;
        if (a.valid_max) spec.bounds.valid_max = *a.valid_max;
        spec.seed = a.seed;
        spec.max_train = a.max_train;
        spec.max_valid = a.max_valid;
        if (!fs::exists(spec.corpus)) throw UsageError("corpus '" + a.corpus + "' does not exist");
        return tasks::build_text_dataset(spec);
    }
    tasks::NspDatasetSpec spec;
    spec.kind = tasks::parse_nsp_kind(a.task);
    const auto tr = util::parse_range(a.train_d, "--train-d");
    const auto va = util::parse_range(a.valid_d, "--valid-d");
    spec.train_lo = tr.lo;
    spec.train_hi = tr.hi;
    spec.valid_lo = va.lo;
    spec.valid_hi = va.hi;
    spec.train_n = a.train_n;
    spec.valid_n = a.valid_n;
    spec.seed = a.seed;
    return tasks::build_nsp_dataset(spec);
}

int cmd_gen(const GenArgs& a, std::ostream& out) {
    auto dataset = build_from_args(a);
    const fs::path dir = resolve_out(a.out, "data_" + a.task + "_s" + std::to_string(a.seed));
    prepare_out_dir(dir, a.force);
    tasks::write_dataset(dir, dataset);
    out << "wrote " << dataset.train.size() << " train and " << dataset.valid.size() << " valid samples to "
        << dir.string() << "\n";
    return kExitOk;
}

// ---- train

struct TrainArgs {
    std::string config_file;
    ConfigFlags flags;
    std::string out;
    bool force = false;
};

training::RunConfig resolve_train_config(const std::string& config_file, const training::KeyValues& overrides) {
    training::KeyValues file;
    if (!config_file.empty()) {
        if (!fs::exists(config_file)) throw UsageError("config file '" + config_file + "' does not exist");
        file = training::read_run_config_file(config_file);
    }
    return training::resolve_run_config(file, overrides);
}

void train_into(training::RunConfig rc, const tasks::Dataset& dataset, const fs::path& dir, std::ostream& out) {
    rc.model = training::resolve_model_config(rc.model, dataset);
    util::write_file_atomic(dir / "config.txt", training::format_run_config(rc));
    training::ExperimentOptions opts{rc.bucket_width, rc.record_throughput, rc.init_std};
    const auto report = training::run_experiment(rc.model, dataset, rc.train, dir, opts);
    const auto selection = training::selection_for(dataset);
    out << training::format_report(report, selection);
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
    auto rc = resolve_train_config(a.config_file, a.flags.given());
    const auto dataset = load_dataset(rc.data);
    const fs::path dir = resolve_out(a.out, "train_" + std::string(model::variant_name(rc.model.variant)) + "_s" +
                                                std::to_string(rc.train.seed));
    prepare_out_dir(dir, a.force);
    train_into(rc, dataset, dir, out);
    return kExitOk;
}

// ---- eval

struct EvalArgs {
    std::string checkpoint, data, split = "valid", out_csv;
    std::size_t bucket_width = 1, batch_size = 64;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    if (!fs::exists(a.checkpoint)) throw UsageError("checkpoint '" + a.checkpoint + "' does not exist");
    const auto dataset = load_dataset(a.data);
    auto ck = model::load_checkpoint(a.checkpoint);
    if (ck.config.vocab_size != dataset.vocab.size())
        throw UsageError("checkpoint vocabulary (" + std::to_string(ck.config.vocab_size) +
                         ") does not match the dataset (" + std::to_string(dataset.vocab.size()) + ")");
    const model::Model<float> net(ck.config, std::move(ck.params));
    std::size_t epoch = 0;
    if (auto it = ck.meta.find("epoch"); it != ck.meta.end()) epoch = util::parse_size(it->second, "epoch");

    std::vector<eval::MetricRecord> rows;
    for (const char* name : {"train", "valid"}) {
        if (a.split != "all" && a.split != name) continue;
        const auto& samples = std::string(name) == "train" ? dataset.train : dataset.valid;
        auto part = eval::summarize(eval::evaluate_samples(net, samples, a.batch_size, dataset.pad_to()), name, epoch,
                                    a.bucket_width);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    if (rows.empty()) throw UsageError("--split must be train, valid or all");
    const auto csv = eval::format_metrics_csv(rows);
    if (a.out_csv.empty())
        out << csv;
    else
        util::write_file_atomic(a.out_csv, csv);
    return kExitOk;
}

// ---- ablate

struct AblateArgs {
    std::string variants = "ibert,ibert_pe,ibert2";
    std::string task = "add";
    std::string ks = "5,8,12";
    std::size_t train_lo = 2, valid_span = 4, train_n = 8192, valid_n = 1024;
    std::string config_file;
    ConfigFlags flags;
    std::string out;
    bool force = false;
};

int cmd_ablate(const AblateArgs& a, std::ostream& out, std::ostream& err) {
    std::vector<model::Variant> variants;
    for (const auto& v : util::split(a.variants, ',')) variants.push_back(model::parse_variant(util::trim(v)));
    if (variants.empty()) throw UsageError("--variants is empty");
    std::vector<std::size_t> ks;
    for (const auto& k : util::split(a.ks, ',')) ks.push_back(util::parse_size(util::trim(k), "--k"));
    if (ks.empty()) throw UsageError("--k is empty");
    if (a.valid_span == 0) throw UsageError("--valid-span must be >= 1");

    auto overrides = a.flags.given();
    const auto base = resolve_train_config(a.config_file, overrides);
    const fs::path root = resolve_out(a.out, "ablate_" + a.task + "_s" + std::to_string(base.train.seed));
    prepare_out_dir(root, a.force);

    std::string combined = "variant,k,epoch,split,seq_acc,token_acc,loss_nats,bpc,ppl,seq_per_s\n";
    std::string failures;
    bool numeric_failure = false;
    for (auto k : ks) {
        tasks::NspDatasetSpec spec;
        spec.kind = tasks::parse_nsp_kind(a.task);
        spec.train_lo = a.train_lo;
        spec.train_hi = k;
        spec.valid_lo = k + 1;
        spec.valid_hi = k + a.valid_span;
        spec.train_n = a.train_n;
        spec.valid_n = a.valid_n;
        spec.seed = base.train.seed;
        const fs::path data_dir = root / ("data_k" + std::to_string(k));
        const auto dataset = tasks::build_nsp_dataset(spec);
        tasks::write_dataset(data_dir, dataset);

        for (auto variant : variants) {
            const std::string name = std::string(model::variant_name(variant)) + "_k" + std::to_string(k);
            auto kv = overrides;
            kv["variant"] = std::string(model::variant_name(variant));
            kv["data"] = data_dir.string();
            try {
                const auto rc = resolve_train_config(a.config_file, kv);
                const fs::path run_dir = root / name;
                prepare_out_dir(run_dir, false);
                std::ostringstream log;
                train_into(rc, dataset, run_dir, log);
                const auto rows = eval::parse_metrics_csv(util::read_file(run_dir / "metrics.csv"),
                                                          (run_dir / "metrics.csv").string());
                for (const auto& r : rows) {
                    if (r.bucket != "all") continue;
                    const auto line = eval::format_metrics_row(r);
                    // Replace the bucket column with variant and k.
                    const auto first = line.find(',');
                    const auto third = line.find(',', line.find(',', first + 1) + 1);
                    combined += std::string(model::variant_name(variant)) + "," + std::to_string(k) + "," +
                                line.substr(0, first) + "," + r.split + line.substr(third) + "\n";
                }
                out << name << ": done\n";
            } catch (const training::TrainingAborted& e) {
                numeric_failure = true;
                failures += name + ": " + e.what() + "\n";
                err << name << ": " << e.what() << "\n";
            } catch (const std::exception& e) {
                failures += name + ": " + e.what() + "\n";
                err << name << ": " << e.what() << "\n";
            }
        }
    }
    util::write_file_atomic(root / "ablation.csv", combined);
    if (!failures.empty()) {
        util::write_file_atomic(root / "failures.txt", failures);
        return numeric_failure ? kExitNumeric : kExitUsage;
    }
    return kExitOk;
}

// ---- report

struct ReportArgs {
    std::vector<std::string> runs;
    std::string metric = "seq_acc", split = "valid", out;
    bool force = false;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
    if (a.runs.empty()) throw UsageError("no run directories given");
    const auto metric = eval::parse_plot_metric(a.metric);
    std::map<std::string, std::vector<eval::Series>> by_task;
    for (const auto& run : a.runs) {
        if (!fs::is_directory(run)) throw UsageError("run directory '" + run + "' does not exist");
        auto series = eval::load_run_series(run, metric, a.split);
        by_task[series.task].push_back(std::move(series));
    }
    const fs::path dir = resolve_out(a.out, "report");
    prepare_out_dir(dir, a.force);
    std::string summary;
    for (const auto& [task, series] : by_task) {
        const std::string title = task + ": " + a.split + " " + a.metric + " by bucket";
        util::write_file_atomic(dir / ("report_" + task + ".svg"), eval::render_svg(title, series, metric));
        summary += "## " + task + "\n" + eval::summary_table(series, metric) + "\n";
    }
    util::write_file_atomic(dir / "summary.txt", summary);
    out << summary;
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"IBERT experiments: dataset generation, training, evaluation and reports", "ibert"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate an NSP or masked-LM dataset directory");
    g->add_option("--task", gen.task, "add, copy, reverse or text")->required();
    g->add_option("--train-d", gen.train_d, "training difficulties lo..hi");
    g->add_option("--train-n", gen.train_n, "training samples");
    g->add_option("--valid-d", gen.valid_d, "validation difficulties lo..hi");
    g->add_option("--valid-n", gen.valid_n, "validation samples");
    g->add_option("--corpus", gen.corpus, "sentence-per-line text file (text task)");
    g->add_option("--level", gen.level, "char or word (text task)");
    g->add_option("--train-min", gen.train_min, "shortest training sentence");
    g->add_option("--threshold", gen.threshold, "longest training sentence");
    g->add_option("--valid-max", gen.valid_max, "longest validation sentence");
    g->add_option("--max-train", gen.max_train, "cap on training sentences");
    g->add_option("--max-valid", gen.max_valid, "cap on validation sentences");
    g->add_option("--seed", gen.seed, "generator seed");
    g->add_option("--out", gen.out, "output directory");
    g->add_flag("--force", gen.force, "replace a non-empty output directory");

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Train one model on a dataset directory");
    t->add_option("--config", train.config_file, "key = value run configuration");
    train.flags.attach(t);
    t->add_option("--out", train.out, "run directory");
    t->add_flag("--force", train.force, "replace a non-empty run directory");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset directory");
    e->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->required();
    e->add_option("--data", ev.data, "dataset directory")->required();
    e->add_option("--split", ev.split, "train, valid or all");
    e->add_option("--bucket-width", ev.bucket_width, "bucket width");
    e->add_option("--batch-size", ev.batch_size, "evaluation batch size");
    e->add_option("--out", ev.out_csv, "write the metrics CSV here instead of stdout");

    AblateArgs ab;
    auto* a = app.add_subcommand("ablate", "Train every variant on NSP data for each training range 2..k");
    a->add_option("--variants", ab.variants, "comma-separated variants");
    a->add_option("--task", ab.task, "add, copy or reverse");
    a->add_option("--k", ab.ks, "comma-separated largest training difficulties");
    a->add_option("--train-lo", ab.train_lo, "smallest training difficulty");
    a->add_option("--valid-span", ab.valid_span, "validation covers k+1..k+span");
    a->add_option("--train-n", ab.train_n, "training samples per dataset");
    a->add_option("--valid-n", ab.valid_n, "validation samples per dataset");
    a->add_option("--config", ab.config_file, "key = value run configuration");
    ab.flags.attach(a, {"variant", "data"});
    a->add_option("--out", ab.out, "output directory");
    a->add_flag("--force", ab.force, "replace a non-empty output directory");

    ReportArgs rep;
    auto* r = app.add_subcommand("report", "Plot per-bucket metrics of finished runs");
    r->add_option("runs", rep.runs, "run directories")->required();
    r->add_option("--metric", rep.metric, "seq_acc, token_acc, loss_nats, bpc or ppl");
    r->add_option("--split", rep.split, "train or valid");
    r->add_option("--out", rep.out, "output directory");
    r->add_flag("--force", rep.force, "replace a non-empty output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (g->parsed()) return cmd_gen(gen, out);
        if (t->parsed()) return cmd_train(train, out);
        if (e->parsed()) return cmd_eval(ev, out);
        if (a->parsed()) return cmd_ablate(ab, out, err);
        if (r->parsed()) return cmd_report(rep, out);
    } catch (const training::TrainingAborted& ex) {
        err << "error: numeric failure at " << ex.what() << "\n";
        return kExitNumeric;
    } catch (const num::NumericError& ex) {
        err << "error: numeric failure: " << ex.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace ibert::cli
