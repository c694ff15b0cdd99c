#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ibert/eval/metrics.hpp"
#include "ibert/model/config.hpp"
#include "ibert/tasks/dataset_io.hpp"
#include "ibert/training/trainer.hpp"

namespace ibert::training {

struct ExperimentOptions {
    std::size_t bucket_width = 1;
    bool record_throughput = false;
    double init_std = 0.02;
};

enum class Selection { ValidSeqAcc, ValidLoss };

// NSP datasets select on validation sequence accuracy, text on loss.
Selection selection_for(const tasks::Dataset& dataset);

// Fills vocab_size and, for a position table, max_positions (0 means
// "from the dataset"). A nonzero vocab_size must match the dataset.
model::ModelConfig resolve_model_config(model::ModelConfig config, const tasks::Dataset& dataset);

struct EpochTiming {
    std::size_t epoch = 0;
    std::size_t sequences = 0;
    double seconds = 0;
    double train_loss = 0;
};

struct TrainReport {
    model::ModelConfig model;
    std::vector<eval::MetricRecord> rows;
    std::vector<EpochTiming> timing;
    std::size_t best_epoch = 0;
    double best_score = 0;
};

// Files written to out_dir:
//   metrics.csv              rows for every epoch, rewritten after each one
//   timing.csv               wall-clock training time per epoch
//   checkpoint_best.bin      best epoch by the selection rule
//   checkpoint_final.bin     last epoch
//   report.txt               tables for the best and final epochs
//   summary.txt              best epoch, task and variant as key = value
// Throws TrainingAborted on numeric failure; files from completed epochs
// remain.
TrainReport run_experiment(const model::ModelConfig& config, const tasks::Dataset& dataset,
                           const TrainConfig& train, const std::filesystem::path& out_dir,
                           const ExperimentOptions& options = {});

std::string format_report(const TrainReport& report, Selection selection);

}  // namespace ibert::training
