// Acceptance checks, one PASS/FAIL line per criterion. Training-based
// criteria run real experiments under --work; --quick skips them.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "ibert/eval/metrics.hpp"
#include "ibert/model/checkpoint.hpp"
#include "ibert/model/model.hpp"
#include "ibert/numerics/gradcheck.hpp"
#include "ibert/numerics/ops.hpp"
#include "ibert/tasks/builders.hpp"
#include "ibert/tasks/nsp.hpp"
#include "ibert/training/adam.hpp"
#include "ibert/training/experiment.hpp"
#include "ibert/util/fs.hpp"

using namespace ibert;
namespace fs = std::filesystem;
using model::Variant;

namespace {

struct Outcome {
    enum Status { Pass, Fail, Skip } status = Fail;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

const Variant kVariants[] = {Variant::Ibert, Variant::IbertPe, Variant::Ibert2, Variant::BertAbsPe,
                             Variant::RnnEncoder};

model::ModelConfig desk_model(Variant v) {
    model::ModelConfig c;
    c.variant = v;
    c.n_layers = 2;
    c.n_heads = 4;
    c.d_model = 128;
    c.d_ff = 256;
    c.vocab_size = 0;
    c.max_positions = 0;
    c.dropout_rate = 0.1;
    return c;
}

model::ModelConfig tiny_model(Variant v, std::size_t max_positions) {
    model::ModelConfig c;
    c.variant = v;
    c.n_layers = 1;
    c.n_heads = 2;
    c.d_model = 8;
    c.d_ff = 16;
    c.vocab_size = 14;
    c.max_positions = v == Variant::BertAbsPe ? max_positions : 0;
    c.dropout_rate = 0.0;
    return c;
}

model::TokenBatch random_batch(std::size_t b, std::size_t t, std::uint64_t seed, std::vector<std::size_t> lengths) {
    model::TokenBatch tb;
    tb.batch = b;
    tb.steps = t;
    Rng rng(seed);
    for (std::size_t i = 0; i < b * t; ++i) tb.tokens.push_back(static_cast<std::int32_t>(rng.uniform_int(4, 13)));
    tb.lengths = std::move(lengths);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t s = tb.lengths[i]; s < t; ++s) tb.tokens[i * t + s] = tasks::Vocab::kPad;
    return tb;
}

// Experiments are shared between criteria and run at most once per process.
class Lab {
public:
    explicit Lab(fs::path work) : work_(std::move(work)) {}

    const fs::path& work() const { return work_; }

    const tasks::Dataset& nsp_data(const std::string& name, const tasks::NspDatasetSpec& spec) {
        auto it = data_.find(name);
        if (it == data_.end()) it = data_.emplace(name, tasks::build_nsp_dataset(spec)).first;
        return it->second;
    }

    const tasks::Dataset& text_data(const std::string& name, const tasks::TextDatasetSpec& spec) {
        auto it = data_.find(name);
        if (it == data_.end()) it = data_.emplace(name, tasks::build_text_dataset(spec)).first;
        return it->second;
    }

    struct Run {
        training::TrainReport report;
        fs::path dir;
        double seconds = 0;
    };

    const Run& run(const std::string& name, const model::ModelConfig& config, const tasks::Dataset& data,
                   const training::TrainConfig& train, const training::ExperimentOptions& options = {}) {
        auto it = runs_.find(name);
        if (it != runs_.end()) return it->second;
        Run r;
        r.dir = work_ / name;
        fs::remove_all(r.dir);
        std::cerr << "  training " << name << " ..." << std::endl;
        const auto start = std::chrono::steady_clock::now();
        r.report = training::run_experiment(config, data, train, r.dir, options);
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cerr << "  " << name << " done in " << fmt("%.0f", r.seconds) << " s" << std::endl;
        return runs_.emplace(name, std::move(r)).first->second;
    }

private:
    fs::path work_;
    std::map<std::string, tasks::Dataset> data_;
    std::map<std::string, Run> runs_;
};

const eval::MetricRecord& row(const training::TrainReport& report, std::size_t epoch, const std::string& split,
                              const std::string& bucket) {
    for (const auto& r : report.rows)
        if (r.epoch == epoch && r.split == split && r.bucket == bucket) return r;
    throw std::runtime_error("no metrics row for epoch " + std::to_string(epoch) + " " + split + " " + bucket);
}

std::size_t last_epoch(const training::TrainReport& report) { return report.rows.back().epoch; }

// ---- criteria

Outcome gradient_correctness() {
    double worst = 0;
    std::string where;
    for (auto v : kVariants) {
        const auto config = tiny_model(v, 3);
        // Weights of order 0.5 keep gradients well above finite-difference
        // round-off; at the training init of 0.02 some are near 1e-9.
        model::Model<double> m(config, model::init_params<double>(config, 1, 0.5));
        const auto batch = random_batch(2, 3, 2, {3, 2});
        const std::vector<std::int32_t> targets = {5, 6, 7, 8, 9, 0};
        const std::vector<std::uint8_t> mask = {1, 1, 1, 1, 1, 0};
        std::vector<num::Tensor<double>> params;
        std::vector<std::string> names;
        for (auto& [name, t] : m.params()) {
            params.push_back(t);
            names.push_back(name);
        }
        const auto errs =
            num::finite_diff_check([&] { return num::masked_cross_entropy(m.forward(batch), targets, mask); }, params);
        for (std::size_t i = 0; i < errs.size(); ++i)
            if (errs[i] >= worst) {
                worst = errs[i];
                where = std::string(model::variant_name(v)) + "/" + names[i];
            }
    }
    return {worst <= 1e-4 ? Outcome::Pass : Outcome::Fail,
            "max relative error " + fmt("%.2e", worst) + " at " + where + " (<= 1e-4, 5 variants, init std 0.5)"};
}

Outcome permutation_equivariance() {
    const std::size_t T = 8, V = 14;
    auto bert_cfg = tiny_model(Variant::BertAbsPe, T);
    bert_cfg.n_layers = 2;
    model::Model<double> bert(bert_cfg, model::init_params<double>(bert_cfg, 3, 0.3));
    for (double& x : bert.params().get("pos_emb").mutable_data()) x = 0.0;
    auto ibert_cfg = tiny_model(Variant::Ibert, 0);
    ibert_cfg.n_layers = 2;
    model::Model<double> ib(ibert_cfg, model::init_params<double>(ibert_cfg, 3, 0.3));

    const auto base = random_batch(1, T, 4, {T});
    const auto bert_base = bert.forward(base), ib_base = ib.forward(base);
    Rng rng(5);
    double bert_worst = 0, ib_best = 0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::size_t> perm(T);
        for (std::size_t i = 0; i < T; ++i) perm[i] = i;
        for (std::size_t i = T - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
        auto permuted = base;
        for (std::size_t i = 0; i < T; ++i) permuted.tokens[i] = base.tokens[perm[i]];
        const auto bo = bert.forward(permuted), io = ib.forward(permuted);
        double bd = 0, id = 0;
        for (std::size_t i = 0; i < T; ++i)
            for (std::size_t k = 0; k < V; ++k) {
                bd = std::max(bd, std::abs(bo.data()[i * V + k] - bert_base.data()[perm[i] * V + k]));
                id = std::max(id, std::abs(io.data()[i * V + k] - ib_base.data()[perm[i] * V + k]));
            }
        bert_worst = std::max(bert_worst, bd);
        ib_best = std::max(ib_best, id);
    }
    const bool ok = bert_worst <= 1e-9 && ib_best > 1e-3;
    return {ok ? Outcome::Pass : Outcome::Fail, "attention-only max deviation " + fmt("%.1e", bert_worst) +
                                                    " (<= 1e-9), ibert max deviation " + fmt("%.3f", ib_best) +
                                                    " (> 1e-3), 20 permutations"};
}

Outcome generator_oracles() {
    std::size_t checked = 0, bad = 0;
    Rng root(6);
    const tasks::NspKind kinds[] = {tasks::NspKind::Add, tasks::NspKind::Copy, tasks::NspKind::Reverse};
    for (std::size_t i = 0; i < 100000; ++i) {
        const auto kind = kinds[i % 3];
        const std::size_t d = 1 + (i / 3) % 16;
        Rng rng = root.split(i);
        const auto s = tasks::gen_nsp_sample(kind, d, rng);
        const auto nums = tasks::nsp_numbers(s);
        const auto expect =
            kind == tasks::NspKind::Add ? tasks::apply_rule(kind, nums[0], nums[1]) : tasks::apply_rule(kind, nums[0]);
        const auto digits = tasks::encode_little_endian(expect);
        bool ok = nums.back() == expect && tasks::decode_little_endian(digits) == expect &&
                  digits.size() == s.masked_count();
        for (std::size_t k = 0; ok && k < digits.size(); ++k)
            ok = s.target_ids[s.length - digits.size() + k] == tasks::digit_id(digits[k]);
        ++checked;
        bad += !ok;
    }
    const auto train = tasks::bucket_counts({tasks::NspKind::Add, 2, 12, 25600, 0});
    const auto valid = tasks::bucket_counts({tasks::NspKind::Add, 13, 16, 1536, 0});
    std::size_t train_total = 0;
    bool train_ok = train.size() == 11;
    for (auto c : train) {
        train_total += c;
        train_ok = train_ok && (c == 2327 || c == 2328);
    }
    train_ok = train_ok && train_total == 25600;
    const bool valid_ok = valid == std::vector<std::size_t>(4, 384);
    const bool ok = bad == 0 && train_ok && valid_ok;
    return {ok ? Outcome::Pass : Outcome::Fail,
            std::to_string(checked - bad) + "/" + std::to_string(checked) + " samples consistent; 25600 -> " +
                std::to_string(train.size()) + " buckets of 2327/2328 " + (train_ok ? "ok" : "WRONG") +
                "; 1536 -> 384 per bucket " + (valid_ok ? "ok" : "WRONG")};
}

// Copy, d = 2..8 for training and 9..12 for validation.
struct CopyRuns {
    const Lab::Run* ibert;
    const Lab::Run* bert;
};

constexpr std::size_t kCopyEpochs = 20;

tasks::NspDatasetSpec copy_spec() {
    tasks::NspDatasetSpec spec;
    spec.kind = tasks::NspKind::Copy;
    spec.train_lo = 2;
    spec.train_hi = 8;
    spec.train_n = 8192;
    spec.valid_lo = 9;
    spec.valid_hi = 12;
    spec.valid_n = 1024;
    spec.seed = 11;
    return spec;
}

training::TrainConfig desk_train(std::size_t epochs, std::uint64_t seed) {
    training::TrainConfig c;
    c.epochs = epochs;
    c.seed = seed;
    return c;
}

CopyRuns copy_runs(Lab& lab) {
    const auto& data = lab.nsp_data("copy", copy_spec());
    return {&lab.run("copy_ibert", desk_model(Variant::Ibert), data, desk_train(kCopyEpochs, 1)),
            &lab.run("copy_bert_abs_pe", desk_model(Variant::BertAbsPe), data, desk_train(kCopyEpochs, 1))};
}

double best_train_seq_acc(const training::TrainReport& r) {
    double best = 0;
    for (const auto& m : r.rows)
        if (m.split == "train" && m.bucket == "all") best = std::max(best, m.seq_acc);
    return best;
}

Outcome train_fit(Lab& lab) {
    const auto runs = copy_runs(lab);
    const double a = best_train_seq_acc(runs.ibert->report), b = best_train_seq_acc(runs.bert->report);
    const double slowest = std::max(runs.ibert->seconds, runs.bert->seconds);
    const bool ok = a >= 0.95 && b >= 0.95 && slowest <= 30 * 60;
    return {ok ? Outcome::Pass : Outcome::Fail,
            "best train seq_acc within " + std::to_string(kCopyEpochs) + " epochs: ibert " + fmt("%.4f", a) +
                ", bert_abs_pe " + fmt("%.4f", b) + " (>= 0.95); slowest run " + fmt("%.0f", slowest) +
                " s (<= 1800)"};
}

Outcome copy_generalization(Lab& lab) {
    const auto runs = copy_runs(lab);
    const double a = row(runs.ibert->report, last_epoch(runs.ibert->report), "valid", "all").seq_acc;
    const double b = row(runs.bert->report, last_epoch(runs.bert->report), "valid", "all").seq_acc;
    const bool fit = best_train_seq_acc(runs.ibert->report) >= 0.95 && best_train_seq_acc(runs.bert->report) >= 0.95;
    const bool ok = fit && a >= 0.5 && b <= 0.1 && a - b >= 0.4 &&
                    std::max(runs.ibert->seconds, runs.bert->seconds) <= 3600;
    return {ok ? Outcome::Pass : Outcome::Fail,
            "final valid seq_acc d=9..12: ibert " + fmt("%.4f", a) + " (>= 0.5), bert_abs_pe " + fmt("%.4f", b) +
                " (<= 0.1), gap " + fmt("%.4f", a - b) + " (>= 0.4)" + (fit ? "" : "; criterion 4 not met")};
}

// Add, d = 2..8 for training and 9..10 for validation, three training seeds.
constexpr std::size_t kAddEpochs = 30;
const std::uint64_t kAddSeeds[] = {1, 2, 3};

tasks::NspDatasetSpec add_spec() {
    tasks::NspDatasetSpec spec;
    spec.kind = tasks::NspKind::Add;
    spec.train_lo = 2;
    spec.train_hi = 8;
    spec.train_n = 8192;
    spec.valid_lo = 9;
    spec.valid_hi = 10;
    spec.valid_n = 1024;
    spec.seed = 11;
    return spec;
}

struct SeedBest {
    double value = -1;
    std::uint64_t seed = 0;
    double seconds = 0;
    std::string all;
};

SeedBest best_over_seeds(Lab& lab, Variant v, const std::string& bucket) {
    const auto& data = lab.nsp_data("add", add_spec());
    SeedBest best;
    for (auto seed : kAddSeeds) {
        const auto name = "add_" + std::string(model::variant_name(v)) + "_s" + std::to_string(seed);
        const auto& r = lab.run(name, desk_model(v), data, desk_train(kAddEpochs, seed));
        const double value = row(r.report, last_epoch(r.report), "valid", bucket).seq_acc;
        best.seconds += r.seconds;
        best.all += (best.all.empty() ? "" : "/") + fmt("%.3f", value);
        if (value > best.value) {
            best.value = value;
            best.seed = seed;
        }
    }
    return best;
}

Outcome add_generalization(Lab& lab) {
    const auto a = best_over_seeds(lab, Variant::Ibert, "9");
    const auto b = best_over_seeds(lab, Variant::BertAbsPe, "9");
    const bool ok = a.value > b.value && b.value <= 0.05 && a.seconds + b.seconds <= 2 * 3600;
    return {ok ? Outcome::Pass : Outcome::Fail,
            "final valid seq_acc at d=9, best of seeds 1-3: ibert " + fmt("%.4f", a.value) + " [" + a.all +
                "], bert_abs_pe " + fmt("%.4f", b.value) + " [" + b.all + "] (ibert > bert_abs_pe, bert_abs_pe <= 0.05;" +
                " advisory ibert >= 0.2: " + (a.value >= 0.2 ? "met" : "not met") + "); " +
                fmt("%.0f", a.seconds + b.seconds) + " s"};
}

Outcome ablation_ordering(Lab& lab) {
    const auto a = best_over_seeds(lab, Variant::Ibert, "all");
    const auto b = best_over_seeds(lab, Variant::IbertPe, "all");
    // Two zeros say nothing about the ordering, so they do not count as a pass.
    const bool inconclusive = a.value == 0 && b.value == 0;
    return {a.value >= b.value && !inconclusive ? Outcome::Pass : Outcome::Fail,
            "final valid seq_acc d=9..10, best of seeds 1-3: ibert " + fmt("%.4f", a.value) + " [" + a.all +
                "] >= ibert_pe " + fmt("%.4f", b.value) + " [" + b.all + "]" +
                (inconclusive ? "; inconclusive, neither variant generalizes" : "")};
}

// Independent recomputation: one sample at a time, no padding, hand-written
// log-sum-exp and argmax.
struct Scalar {
    double nll = 0;
    std::size_t masked = 0, correct = 0, seqs = 0;
};

Scalar scalar_metrics(const model::Model<double>& m, const std::vector<tasks::Sample>& samples) {
    Scalar out;
    const std::size_t V = m.config().vocab_size;
    for (const auto& s : samples) {
        model::TokenBatch b;
        b.batch = 1;
        b.steps = s.length;
        b.tokens.assign(s.input_ids.begin(), s.input_ids.end());
        b.lengths = {s.length};
        const auto logits = m.forward(b);
        bool all = true;
        for (std::size_t t = 0; t < s.length; ++t) {
            if (!s.mask_flags[t]) continue;
            const double* z = logits.data().data() + t * V;
            std::size_t arg = 0;
            for (std::size_t k = 1; k < V; ++k)
                if (z[k] > z[arg]) arg = k;
            double sum = 0;
            for (std::size_t k = 0; k < V; ++k) sum += std::exp(z[k] - z[arg]);
            out.nll += std::log(sum) - (z[s.target_ids[t]] - z[arg]);
            ++out.masked;
            if (static_cast<tasks::TokenId>(arg) == s.target_ids[t])
                ++out.correct;
            else
                all = false;
        }
        out.seqs += all;
    }
    return out;
}

Outcome metric_oracles(Lab& lab, bool with_trained) {
    std::vector<fs::path> checkpoints;
    const auto dir = lab.work() / "metric_checkpoints";
    fs::create_directories(dir);
    for (auto v : kVariants) {
        auto c = tiny_model(v, 40);
        c.d_model = 16;
        const auto path = dir / (std::string(model::variant_name(v)) + ".bin");
        model::save_checkpoint(path, {c, model::init_params<float>(c, 7, 0.5), {}});
        checkpoints.push_back(path);
    }
    if (with_trained) {
        const auto runs = copy_runs(lab);
        checkpoints.push_back(runs.ibert->dir / "checkpoint_best.bin");
        checkpoints.push_back(runs.bert->dir / "checkpoint_final.bin");
    }
    tasks::NspSpec spec{tasks::NspKind::Add, 1, 6, 300, 8};
    if (with_trained) spec = {tasks::NspKind::Copy, 2, 12, 300, 8};
    const auto samples = tasks::gen_nsp_dataset(spec);

    double worst = 0;
    bool counts_ok = true;
    for (const auto& path : checkpoints) {
        const auto ck = model::load_checkpoint(path);
        const model::Model<double> m(ck.config, ck.params.cast<double>());
        const auto rows = eval::per_difficulty_report(m, samples, "check", tasks::PadTo::BatchMax, 1, 32);
        const auto& all = rows.back();
        const auto ref = scalar_metrics(m, samples);
        const double loss = ref.nll / static_cast<double>(ref.masked);
        worst = std::max({worst, std::abs(all.loss_nats - loss), std::abs(all.bpc - loss / std::log(2.0)),
                          std::abs(all.ppl - std::exp(loss)) / std::exp(loss)});
        counts_ok = counts_ok && all.masked_tokens == ref.masked &&
                    all.token_acc == static_cast<double>(ref.correct) / ref.masked &&
                    all.seq_acc == static_cast<double>(ref.seqs) / samples.size();
    }

    auto uc = tiny_model(Variant::Ibert, 0);
    auto params = model::init_params<double>(uc, 9);
    for (auto& [name, t] : params)
        for (double& x : t.mutable_data()) x = 0.0;
    const model::Model<double> uniform(uc, std::move(params));
    const double bpc = eval::per_difficulty_report(uniform, samples, "check", tasks::PadTo::BatchMax).back().bpc;
    const double uniform_err = std::abs(bpc - std::log2(14.0));

    const bool ok = worst <= 1e-9 && counts_ok && uniform_err <= 1e-9;
    return {ok ? Outcome::Pass : Outcome::Fail,
            std::to_string(checkpoints.size()) + " checkpoints: max deviation from scalar loop " +
                fmt("%.1e", worst) + " (<= 1e-9), accuracy counts " + (counts_ok ? "equal" : "DIFFER") +
                "; uniform bpc - log2(14) = " + fmt("%.1e", uniform_err)};
}

Outcome adam_trace() {
    training::TrainConfig c;
    c.grad_clip_norm.reset();
    model::ParamStore<double> p;
    p.add("theta", num::Tensor<double>::scalar(0.25, true));
    auto state = training::OptimState<double>::zeros_like(p);
    double th = 0.25, m = 0, v = 0, worst = 0;
    const double grads[] = {1.0, -1.0};
    const double lr = 0.1;
    for (int t = 1; t <= 2; ++t) {
        const double g = grads[t - 1];
        m = c.beta1 * m + (1 - c.beta1) * g;
        v = c.beta2 * v + (1 - c.beta2) * g * g;
        const double mh = m / (1 - std::pow(c.beta1, t)), vh = v / (1 - std::pow(c.beta2, t));
        th -= lr * mh / (std::sqrt(vh) + c.eps);
        p.get("theta").mutable_grad()[0] = g;
        training::adam_step(p, state, lr, c);
        worst = std::max(worst, std::abs(p.get("theta").data()[0] - th));
    }

    model::ParamStore<double> z;
    z.add("w", num::Tensor<double>::from({4}, {0.1, -2.0, 3.5, 0.0}, true));
    const std::vector<double> before(z.get("w").data().begin(), z.get("w").data().end());
    z.get("w").zero_grad();
    auto zs = training::OptimState<double>::zeros_like(z);
    for (int i = 0; i < 3; ++i) training::adam_step(z, zs, 0.1, training::TrainConfig{});
    const bool noop = std::equal(before.begin(), before.end(), z.get("w").data().begin());

    return {worst <= 1e-12 && noop ? Outcome::Pass : Outcome::Fail,
            "two-step trace deviation " + fmt("%.1e", worst) + " (<= 1e-12); zero-gradient step " +
                (noop ? "leaves parameters unchanged" : "CHANGED parameters")};
}

constexpr std::size_t kTextEpochs = 8;

tasks::TextDatasetSpec char_spec() {
    tasks::TextDatasetSpec spec;
    spec.corpus = fs::path(IBERT_SOURCE_DIR) / "tests" / "data" / "corpus.txt";
    spec.level = tasks::TextLevel::Char;
    spec.bounds = tasks::kCharSplit;
    spec.seed = 3;
    spec.max_train = 2000;
    spec.max_valid = 400;
    return spec;
}

Outcome char_lm(Lab& lab) {
    const auto& data = lab.text_data("char", char_spec());
    training::ExperimentOptions opts;
    opts.bucket_width = 16;
    const auto& a = lab.run("char_ibert", desk_model(Variant::Ibert), data, desk_train(kTextEpochs, 1), opts);
    const auto& b = lab.run("char_bert_abs_pe", desk_model(Variant::BertAbsPe), data, desk_train(kTextEpochs, 1), opts);
    const double ba = row(a.report, last_epoch(a.report), "valid", "all").bpc;
    const double bb = row(b.report, last_epoch(b.report), "valid", "all").bpc;
    const double seconds = a.seconds + b.seconds;
    const bool ok = ba < bb && seconds <= 2 * 3600;
    return {ok ? Outcome::Pass : Outcome::Fail,
            "valid bpc after " + std::to_string(kTextEpochs) + " epochs (" + std::to_string(data.train.size()) +
                " train / " + std::to_string(data.valid.size()) + " valid sentences): ibert " + fmt("%.4f", ba) +
                " < bert_abs_pe " + fmt("%.4f", bb) + "; " + fmt("%.0f", seconds) + " s"};
}

Outcome determinism(Lab& lab) {
    const auto runs = copy_runs(lab);
    const auto& data = lab.nsp_data("copy", copy_spec());
    const auto& again = lab.run("copy_ibert_rerun", desk_model(Variant::Ibert), data, desk_train(kCopyEpochs, 1));
    const auto first = util::read_file(runs.ibert->dir / "metrics.csv");
    const auto second = util::read_file(again.dir / "metrics.csv");
    const bool same = first == second;
    return {same ? Outcome::Pass : Outcome::Fail,
            "criterion 4/5 ibert copy run repeated: metrics.csv " + std::string(same ? "byte-identical" : "DIFFERS") +
                " (" + std::to_string(first.size()) + " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    std::string work = "acceptance_work";
    std::vector<int> only;
    bool quick = false;
    app.add_option("--work", work, "directory for experiment outputs");
    app.add_option("--only", only, "criteria to run")->delimiter(',');
    app.add_flag("--quick", quick, "skip the training-based criteria");
    CLI11_PARSE(app, argc, argv);

    fs::create_directories(work);
    Lab lab{fs::path(work)};
    const std::set<int> training_based = {4, 5, 6, 7, 10, 11};
    const std::map<int, std::function<Outcome()>> criteria = {
        {1, gradient_correctness},
        {2, permutation_equivariance},
        {3, generator_oracles},
        {4, [&] { return train_fit(lab); }},
        {5, [&] { return copy_generalization(lab); }},
        {6, [&] { return add_generalization(lab); }},
        {7, [&] { return ablation_ordering(lab); }},
        {8, [&] { return metric_oracles(lab, !quick); }},
        {9, adam_trace},
        {10, [&] { return char_lm(lab); }},
        {11, [&] { return determinism(lab); }},
    };

    std::string summary;
    bool failed = false;
    for (const auto& [id, check] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        if (quick && training_based.count(id)) {
            o = {Outcome::Skip, "training-based; run without --quick"};
        } else {
            try {
                o = check();
            } catch (const std::exception& e) {
                o = {Outcome::Fail, std::string("error: ") + e.what()};
            }
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const char* status = o.status == Outcome::Pass ? "PASS" : o.status == Outcome::Skip ? "SKIP" : "FAIL";
        char head[32];
        std::snprintf(head, sizeof head, "criterion %2d: %s", id, status);
        const std::string line = std::string(head) + "  " + o.detail + "  [" + fmt("%.1f", secs) + " s]";
        std::cout << line << std::endl;
        summary += line + "\n";
        failed = failed || o.status == Outcome::Fail;
    }
    util::write_file_atomic(fs::path(work) / "acceptance.txt", summary);
    return failed ? 1 : 0;
}
