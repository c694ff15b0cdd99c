#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ibert/eval/metrics.hpp"

namespace ibert::eval {

enum class PlotMetric { SeqAcc, TokenAcc, LossNats, Bpc, Ppl };
PlotMetric parse_plot_metric(const std::string& name);
std::string plot_metric_name(PlotMetric m);
double metric_value(const MetricRecord& r, PlotMetric m);

// One run's per-bucket values for a split at a single epoch.
struct Series {
    std::string label;
    std::string task;
    std::size_t epoch = 0;
    std::map<std::size_t, double> points;  // bucket lower bound -> value
    std::optional<double> aggregate;
};

Series series_from_rows(const std::vector<MetricRecord>& rows, std::size_t epoch, const std::string& split,
                        PlotMetric metric);

// Reads metrics.csv and, when present, summary.txt (best epoch, task,
// variant) from a run directory. Without a summary the last epoch is used
// and the label is the directory name.
Series load_run_series(const std::filesystem::path& run_dir, PlotMetric metric, const std::string& split = "valid");

// Static line chart, x = bucket, one polyline per series. Missing buckets
// break the line. Output depends only on the arguments.
std::string render_svg(const std::string& title, const std::vector<Series>& series, PlotMetric metric);

// Fixed-width table: one row per series, one column per bucket.
std::string summary_table(const std::vector<Series>& series, PlotMetric metric);

}  // namespace ibert::eval
