#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ibert/eval/metrics.hpp"
#include "ibert/eval/report.hpp"
#include "ibert/tasks/nsp.hpp"
#include "ibert/util/fs.hpp"

using namespace ibert;
using namespace ibert::eval;

namespace {

model::ModelConfig small_model(model::Variant v) {
    model::ModelConfig c;
    c.variant = v;
    c.n_layers = 1;
    c.n_heads = 2;
    c.d_model = 8;
    c.d_ff = 16;
    c.vocab_size = 14;
    c.max_positions = v == model::Variant::BertAbsPe ? 40 : 0;
    c.dropout_rate = 0.0;
    return c;
}

// Scores each sample on its own, unpadded, with a hand-written log-softmax.
struct ScalarOracle {
    double nll = 0;
    std::size_t masked = 0, correct = 0, seq_correct = 0;
};

ScalarOracle scalar_oracle(const model::Model<double>& m, const std::vector<Sample>& samples) {
    ScalarOracle o;
    for (const auto& s : samples) {
        model::TokenBatch b;
        b.batch = 1;
        b.steps = s.length;
        b.tokens.assign(s.input_ids.begin(), s.input_ids.end());
        b.lengths = {s.length};
        const auto logits = m.forward(b);
        const std::size_t v = m.config().vocab_size;
        bool all = true;
        for (std::size_t t = 0; t < s.length; ++t) {
            if (!s.mask_flags[t]) continue;
            double mx = -1e300;
            std::size_t arg = 0;
            for (std::size_t k = 0; k < v; ++k) {
                const double z = logits.data()[t * v + k];
                if (z > mx) {
                    mx = z;
                    arg = k;
                }
            }
            double se = 0;
            for (std::size_t k = 0; k < v; ++k) se += std::exp(logits.data()[t * v + k] - mx);
            o.nll += -(logits.data()[t * v + s.target_ids[t]] - mx - std::log(se));
            ++o.masked;
            if (static_cast<TokenId>(arg) == s.target_ids[t])
                ++o.correct;
            else
                all = false;
        }
        o.seq_correct += all;
    }
    return o;
}

}  // namespace

TEST_CASE("loss conversions") {
    CHECK(bpc_from_loss(0.0) == 0.0);
    CHECK(bpc_from_loss(std::log(2.0)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(bpc_from_loss(std::log(14.0)) - std::log2(14.0)) <= 1e-9);
    CHECK(ppl_from_loss(0.0) == 1.0);
    CHECK(std::abs(ppl_from_loss(std::log(14.0)) - 14.0) <= 1e-9);
    for (double loss : {0.01, 0.5, 1.7, 4.2})
        CHECK(std::abs(ppl_from_loss(loss) - std::pow(2.0, bpc_from_loss(loss))) <= 1e-9 * ppl_from_loss(loss));
    CHECK(throughput(100, 4.0) == 25.0);
    CHECK_THROWS_AS(throughput(100, 0.0), std::invalid_argument);
}

TEST_CASE("argmax ties go to the lowest id") {
    const double row[] = {0.1, 0.7, 0.7, 0.2};
    CHECK(argmax_lowest<double>(row) == 1);
    const float flat[] = {1, 1, 1};
    CHECK(argmax_lowest<float>(flat) == 0);
}

TEST_CASE("sequence accuracy") {
    const std::uint64_t ops1[] = {12}, ops2[] = {34};
    const std::vector<Sample> samples = {tasks::make_nsp_sample(tasks::NspKind::Copy, ops1, 2),
                                         tasks::make_nsp_sample(tasks::NspKind::Copy, ops2, 2)};
    const std::vector<Prediction> right = {{tasks::digit_id(2), tasks::digit_id(1)},
                                           {tasks::digit_id(4), tasks::digit_id(3)}};
    CHECK(sequence_accuracy(right, samples) == 1.0);
    auto one_wrong = right;
    one_wrong[1][0] = tasks::digit_id(5);
    CHECK(sequence_accuracy(one_wrong, samples) == 0.5);
    const std::vector<Sample> swapped = {samples[1], samples[0]};
    CHECK(sequence_accuracy({one_wrong[1], one_wrong[0]}, swapped) == 0.5);
    CHECK_THROWS(sequence_accuracy({right[0]}, samples));
}

TEST_CASE("random predictions match the chance rate") {
    const std::uint64_t ops[] = {4321};
    const std::vector<Sample> one = {tasks::make_nsp_sample(tasks::NspKind::Copy, ops, 4)};
    Rng rng(9);
    const int n = 100000;
    std::vector<Prediction> preds;
    std::vector<Sample> samples;
    for (int i = 0; i < n; ++i) {
        Prediction p;
        for (int k = 0; k < 4; ++k) p.push_back(static_cast<TokenId>(rng.uniform_int(0, 13)));
        preds.push_back(std::move(p));
        samples.push_back(one[0]);
    }
    const double p = std::pow(1.0 / 14, 4);
    const double sigma = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(sequence_accuracy(preds, samples) - p) <= 3 * sigma);
}

TEST_CASE("summaries agree with a scalar-loop recomputation") {
    for (auto v : {model::Variant::Ibert, model::Variant::BertAbsPe, model::Variant::RnnEncoder}) {
        const auto model =
            model::Model<double>(small_model(v), model::init_params<double>(small_model(v), 3, 0.7));
        const auto samples = tasks::gen_nsp_dataset({tasks::NspKind::Add, 1, 4, 60, 4});
        const auto rows = per_difficulty_report(model, samples, "valid", tasks::PadTo::BatchMax, 1, 7);
        const auto oracle = scalar_oracle(model, samples);
        const auto& all = rows.back();
        REQUIRE(all.bucket == "all");
        const double loss = oracle.nll / static_cast<double>(oracle.masked);
        CHECK(std::abs(all.loss_nats - loss) <= 1e-9);
        CHECK(std::abs(all.bpc - loss / std::log(2.0)) <= 1e-9);
        CHECK(std::abs(all.ppl - std::exp(loss)) <= 1e-9);
        CHECK(all.token_acc == static_cast<double>(oracle.correct) / oracle.masked);
        CHECK(all.seq_acc == static_cast<double>(oracle.seq_correct) / samples.size());
        CHECK(all.masked_tokens == oracle.masked);

        CHECK(rows.size() == 5);
        double weighted = 0;
        std::size_t n = 0;
        for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
            CHECK(rows[i].bucket == std::to_string(i + 1));
            weighted += rows[i].seq_acc * rows[i].sequences;
            n += rows[i].sequences;
        }
        CHECK(n == samples.size());
        CHECK(std::abs(weighted / n - all.seq_acc) <= 1e-12);

        // Same numbers regardless of batching and padding.
        const auto wide = per_difficulty_report(model, samples, "valid", tasks::PadTo::DatasetMax, 1, 64);
        CHECK(std::abs(wide.back().loss_nats - all.loss_nats) <= 1e-9);
        CHECK(wide.back().seq_acc == all.seq_acc);
    }
}

TEST_CASE("uniform model scores log2(14) bits") {
    auto c = small_model(model::Variant::Ibert);
    auto params = model::init_params<double>(c, 1);
    for (auto& [name, t] : params)
        for (double& x : t.mutable_data()) x = 0.0;
    const model::Model<double> model(c, std::move(params));
    const auto samples = tasks::gen_nsp_dataset({tasks::NspKind::Reverse, 1, 3, 20, 2});
    const auto rows = per_difficulty_report(model, samples, "train", tasks::PadTo::BatchMax);
    CHECK(std::abs(rows.back().bpc - std::log2(14.0)) <= 1e-9);
    CHECK(std::abs(rows.back().ppl - 14.0) <= 1e-9);
}

TEST_CASE("buckets group by width and skip empties") {
    std::vector<SampleOutcome> outs;
    for (std::size_t d : {9, 9, 10, 12, 13}) outs.push_back({d, {}, 2, d % 2 ? 2u : 1u, 0.5});
    const auto rows = summarize(outs, "valid", 3, 2);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].bucket == "8");
    CHECK(rows[0].sequences == 2);
    CHECK(rows[1].bucket == "10");
    CHECK(rows[2].bucket == "12");
    CHECK(rows[2].sequences == 2);
    CHECK(rows[3].bucket == "all");
    CHECK(rows[3].seq_acc == doctest::Approx(3.0 / 5));
    CHECK(rows[3].token_acc == doctest::Approx(8.0 / 10));
}

TEST_CASE("metrics csv format and parsing") {
    MetricRecord r{2, "valid", "9", 0.5, 0.75, std::log(2.0), 1.0, 2.0, std::nullopt, 4, 8};
    CHECK(format_metrics_row(r) == "2,valid,9,0.5,0.75,0.693147,1,2,");
    r.seq_per_s = 1234.5678;
    CHECK(format_metrics_row(r) == "2,valid,9,0.5,0.75,0.693147,1,2,1234.57");
    const auto text = format_metrics_csv({r});
    CHECK(text.rfind(std::string(kMetricsHeader) + "\n", 0) == 0);
    const auto back = parse_metrics_csv(text, "m.csv");
    REQUIRE(back.size() == 1);
    CHECK(back[0].bucket == "9");
    CHECK(*back[0].seq_per_s == doctest::Approx(1234.57));

    auto expect_error = [](const std::string& csv, const std::string& where) {
        try {
            parse_metrics_csv(csv, "m.csv");
            FAIL("expected a parse error");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find(where) != std::string::npos);
        }
    };
    expect_error("bogus\n", "m.csv:1");
    expect_error(std::string(kMetricsHeader) + "\n0,valid,9,0.5,0.5,1,1,1,\n0,valid,x\n", "m.csv:3");
    expect_error(std::string(kMetricsHeader) + "\n0,valid,9,abc,0.5,1,1,1,\n", "m.csv:2");
}

TEST_CASE("svg output") {
    Series a{"ibert", "copy", 4, {{9, 1.0}, {10, 0.8}, {12, 0.2}}, 0.6};
    Series b{"bert_abs_pe", "copy", 4, {{9, 0.0}, {10, 0.0}, {11, 0.0}, {12, 0.0}}, 0.0};
    Series c{"ibert_pe", "copy", 4, {{9, 0.5}, {10, 0.4}, {11, 0.1}, {12, 0.0}}, 0.25};
    const auto svg = render_svg("copy", {a, b, c}, PlotMetric::SeqAcc);
    CHECK(svg == render_svg("copy", {a, b, c}, PlotMetric::SeqAcc));
    CHECK(svg.rfind("<svg", 0) == 0);
    std::size_t legends = 0;
    for (auto p = svg.find("class=\"legend\""); p != std::string::npos; p = svg.find("class=\"legend\"", p + 1))
        ++legends;
    CHECK(legends == 3);
    // Series a lacks bucket 11, so its line breaks into two pieces.
    std::size_t polylines = 0;
    for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++polylines;
    CHECK(polylines == 4);

    const auto table = summary_table({a, b}, PlotMetric::SeqAcc);
    CHECK(table.find("ibert") != std::string::npos);
    CHECK(table.find('-') != std::string::npos);
    CHECK(parse_plot_metric("bpc") == PlotMetric::Bpc);
    CHECK_THROWS(parse_plot_metric("f1"));
}

TEST_CASE("run series from a directory") {
    const auto dir = testing::temp_dir("series") / "run_x";
    std::filesystem::create_directories(dir);
    std::vector<MetricRecord> rows;
    for (std::size_t e = 0; e < 2; ++e)
        for (const char* b : {"9", "10", "all"})
            rows.push_back({e, "valid", b, 0.1 * (e + 1), 0.5, 1.0, 1.4, 2.7, std::nullopt, 1, 1});
    util::write_file_atomic(dir / "metrics.csv", format_metrics_csv(rows));
    auto s = load_run_series(dir, PlotMetric::SeqAcc);
    CHECK(s.label == "run_x");
    CHECK(s.epoch == 1);
    CHECK(s.points.size() == 2);
    CHECK(*s.aggregate == doctest::Approx(0.2));
    util::write_file_atomic(dir / "summary.txt", "best_epoch = 0\ntask = add\nvariant = ibert\n");
    s = load_run_series(dir, PlotMetric::SeqAcc);
    CHECK(s.epoch == 0);
    CHECK(s.task == "add");
    CHECK(s.points.at(9) == doctest::Approx(0.1));
}
