#include "ibert/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "ibert/tasks/dataset_io.hpp"
#include "ibert/util/fs.hpp"
#include "ibert/util/parse.hpp"

namespace ibert::eval {

PlotMetric parse_plot_metric(const std::string& name) {
    if (name == "seq_acc") return PlotMetric::SeqAcc;
    if (name == "token_acc") return PlotMetric::TokenAcc;
    if (name == "loss_nats") return PlotMetric::LossNats;
    if (name == "bpc") return PlotMetric::Bpc;
    if (name == "ppl") return PlotMetric::Ppl;
    throw std::invalid_argument("unknown metric '" + name + "'");
}

std::string plot_metric_name(PlotMetric m) {
    switch (m) {
        case PlotMetric::SeqAcc: return "seq_acc";
        case PlotMetric::TokenAcc: return "token_acc";
        case PlotMetric::LossNats: return "loss_nats";
        case PlotMetric::Bpc: return "bpc";
        case PlotMetric::Ppl: return "ppl";
    }
    return "";
}

double metric_value(const MetricRecord& r, PlotMetric m) {
    switch (m) {
        case PlotMetric::SeqAcc: return r.seq_acc;
        case PlotMetric::TokenAcc: return r.token_acc;
        case PlotMetric::LossNats: return r.loss_nats;
        case PlotMetric::Bpc: return r.bpc;
        case PlotMetric::Ppl: return r.ppl;
    }
    return 0;
}

Series series_from_rows(const std::vector<MetricRecord>& rows, std::size_t epoch, const std::string& split,
                        PlotMetric metric) {
    Series s;
    s.epoch = epoch;
    for (const auto& r : rows) {
        if (r.epoch != epoch || r.split != split) continue;
        if (r.bucket == "all")
            s.aggregate = metric_value(r, metric);
        else
            s.points[util::parse_size(r.bucket, "bucket")] = metric_value(r, metric);
    }
    return s;
}

Series load_run_series(const std::filesystem::path& run_dir, PlotMetric metric, const std::string& split) {
    const auto csv_path = run_dir / "metrics.csv";
    const auto rows = parse_metrics_csv(util::read_file(csv_path), csv_path.string());
    if (rows.empty()) throw std::runtime_error(csv_path.string() + ": no metric rows");

    std::size_t epoch = 0;
    for (const auto& r : rows) epoch = std::max(epoch, r.epoch);
    std::string label = run_dir.filename().string();
    if (label.empty()) label = run_dir.parent_path().filename().string();
    std::string task = "unknown";
    const auto summary_path = run_dir / "summary.txt";
    if (std::filesystem::exists(summary_path)) {
        const auto kv = tasks::parse_key_values(util::read_file(summary_path), summary_path.string());
        if (auto it = kv.find("best_epoch"); it != kv.end()) epoch = util::parse_size(it->second, "best_epoch");
        if (auto it = kv.find("task"); it != kv.end()) task = it->second;
    }
    Series s = series_from_rows(rows, epoch, split, metric);
    if (s.points.empty() && !s.aggregate)
        throw std::runtime_error(csv_path.string() + ": no '" + split + "' rows at epoch " + std::to_string(epoch));
    s.label = label;
    s.task = task;
    return s;
}

namespace {

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

std::string render_svg(const std::string& title, const std::vector<Series>& series, PlotMetric metric) {
    const double width = 640, height = 400, left = 60, right = 160, top = 40, bottom = 50;
    const double plot_w = width - left - right, plot_h = height - top - bottom;

    std::set<std::size_t> buckets;
    double y_max = 0;
    for (const auto& s : series)
        for (const auto& [b, v] : s.points) {
            buckets.insert(b);
            y_max = std::max(y_max, v);
        }
    const bool unit_range = metric == PlotMetric::SeqAcc || metric == PlotMetric::TokenAcc;
    double y_hi = unit_range ? 1.0 : (y_max > 0 ? y_max * 1.1 : 1.0);
    const double x_lo = buckets.empty() ? 0.0 : static_cast<double>(*buckets.begin());
    const double x_hi = buckets.empty() ? 1.0 : static_cast<double>(*buckets.rbegin());
    const double x_span = x_hi > x_lo ? x_hi - x_lo : 1.0;
    auto px = [&](double x) { return left + (buckets.size() > 1 ? (x - x_lo) / x_span * plot_w : plot_w / 2); };
    auto py = [&](double y) { return top + plot_h - std::clamp(y / y_hi, 0.0, 1.0) * plot_h; };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" + fmt(height) +
           "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + fmt(left) + "\" y=\"24\" font-size=\"14\">" + escape_xml(title) + "</text>\n";
    out += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(top + plot_h) + "\" x2=\"" + fmt(left + plot_w) + "\" y2=\"" +
           fmt(top + plot_h) + "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(top) + "\" x2=\"" + fmt(left) + "\" y2=\"" +
           fmt(top + plot_h) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double y = y_hi * i / 4.0;
        out += "<text x=\"" + fmt(left - 6) + "\" y=\"" + fmt(py(y) + 4) + "\" text-anchor=\"end\">" + fmt(y) +
               "</text>\n";
    }
    for (auto b : buckets)
        out += "<text x=\"" + fmt(px(static_cast<double>(b))) + "\" y=\"" + fmt(top + plot_h + 16) +
               "\" text-anchor=\"middle\">" + std::to_string(b) + "</text>\n";
    out += "<text x=\"" + fmt(left + plot_w / 2) + "\" y=\"" + fmt(height - 10) +
           "\" text-anchor=\"middle\">bucket</text>\n";
    out += "<text x=\"14\" y=\"" + fmt(top + plot_h / 2) + "\" transform=\"rotate(-90 14 " + fmt(top + plot_h / 2) +
           ")\" text-anchor=\"middle\">" + plot_metric_name(metric) + "</text>\n";

    // A bucket present in the axis but absent from a series ends the
    // current polyline; the next present bucket starts a new one.
    for (std::size_t i = 0; i < series.size(); ++i) {
        const std::string color = kColors[i % (sizeof kColors / sizeof kColors[0])];
        std::vector<std::string> segments;
        std::string current;
        for (auto b : buckets) {
            auto it = series[i].points.find(b);
            if (it == series[i].points.end()) {
                if (!current.empty()) segments.push_back(current);
                current.clear();
                continue;
            }
            if (!current.empty()) current += ' ';
            current += fmt(px(static_cast<double>(b))) + "," + fmt(py(it->second));
        }
        if (!current.empty()) segments.push_back(current);
        for (const auto& seg : segments)
            out += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" points=\"" + seg + "\"/>\n";
        for (const auto& [b, v] : series[i].points)
            out += "<circle cx=\"" + fmt(px(static_cast<double>(b))) + "\" cy=\"" + fmt(py(v)) + "\" r=\"3\" fill=\"" +
                   color + "\"/>\n";
        const double ly = top + 14.0 + 18.0 * static_cast<double>(i);
        out += "<line x1=\"" + fmt(left + plot_w + 12) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" +
               fmt(left + plot_w + 32) + "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        out += "<text class=\"legend\" x=\"" + fmt(left + plot_w + 38) + "\" y=\"" + fmt(ly) + "\">" +
               escape_xml(series[i].label) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

std::string summary_table(const std::vector<Series>& series, PlotMetric metric) {
    std::set<std::size_t> buckets;
    std::size_t label_w = 6;
    for (const auto& s : series) {
        for (const auto& [b, v] : s.points) buckets.insert(b);
        label_w = std::max(label_w, s.label.size());
    }
    char cell[32];
    std::string out = "# " + plot_metric_name(metric) + " by bucket; '-' marks an empty bucket\n";
    out += "run" + std::string(label_w - 3, ' ') + "  epoch";
    for (auto b : buckets) {
        std::snprintf(cell, sizeof cell, " %8zu", b);
        out += cell;
    }
    out += "       all\n";
    for (const auto& s : series) {
        out += s.label + std::string(label_w - s.label.size(), ' ');
        std::snprintf(cell, sizeof cell, "  %5zu", s.epoch);
        out += cell;
        for (auto b : buckets) {
            auto it = s.points.find(b);
            if (it == s.points.end())
                std::snprintf(cell, sizeof cell, " %8s", "-");
            else
                std::snprintf(cell, sizeof cell, " %8.4f", it->second);
            out += cell;
        }
        if (s.aggregate)
            std::snprintf(cell, sizeof cell, " %9.4f", *s.aggregate);
        else
            std::snprintf(cell, sizeof cell, " %9s", "-");
        out += cell;
        out += "\n";
    }
    return out;
}

}  // namespace ibert::eval
