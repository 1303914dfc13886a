#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lqp/engine.hpp"
#include "lqp/scene.hpp"

namespace lqp {

struct RunResult {
    std::vector<PredictionRecord> predictions;  // joined records only
    std::vector<TrainingEvent> trainings;
};

// Drives the full scene through an engine configured for the method. The seed
// replaces the scene's seed for both the obstacle sweep and the noise stream.
RunResult run_scenario(const SceneConfig& scene, EngineConfig engine, MethodKind method,
                       std::uint64_t seed, TrainerMode mode = TrainerMode::Inline);

struct ErrorTable {
    double window_s = 100.0;
    std::vector<std::pair<double, double>> windows;             // [start, end)
    std::vector<std::string> columns;                           // method or cell labels
    std::vector<std::vector<std::optional<double>>> cells;      // [row][col]; absent = no predictions

    std::optional<double> cell(double window_start, const std::string& column) const;
};

// Windowed RMSE between predicted and measured values, one column per method
// present in the log. Scoring starts at start_s; windows with no predictions
// stay absent.
ErrorTable windowed_rmse(std::span<const PredictionRecord> records, double window_s = 100.0,
                         double start_s = 100.0);

// Cell-wise mean across tables of identical shape; a cell is absent unless
// present in every table.
ErrorTable average_tables(std::span<const ErrorTable> tables);

// Concatenates single-column tables into one multi-column table.
ErrorTable merge_columns(std::span<const ErrorTable> tables, std::span<const std::string> labels);

void write_error_table_csv(const std::filesystem::path& path, const ErrorTable& table);
void write_error_table_txt(const std::filesystem::path& path, const ErrorTable& table);
std::string format_error_table(const ErrorTable& table);

// Queue-size sweep: one run per T_q value (no value = unbounded queue) with
// identical seeds, RMSE tables averaged over the seeds.
struct AblationResult {
    std::vector<std::string> labels;  // "15", "50", "inf"
    std::vector<ErrorTable> tables;   // seed-averaged, single column each
};
AblationResult ablate_queue(const SceneConfig& scene, const EngineConfig& engine,
                            std::span<const std::optional<double>> tq_seconds,
                            std::span<const std::uint64_t> seeds, MethodKind method = MethodKind::RpIm);

struct TimingReport {
    double image_load_ms = 0.0;
    double image_reduction_ms = 0.0;
    double data_combination_ms = 0.0;
    double ml_prediction_ms = 0.0;
    double total_ms = 0.0;  // sum of the four step means
    long ticks = 0;
};

// Per-tick wall-clock means over n_ticks frames, measured after every slot
// has a trained model.
TimingReport measure_timing(const SceneConfig& scene, const EngineConfig& engine, long n_ticks,
                            MethodKind method = MethodKind::RpIm);

std::string format_timing_report(const TimingReport& report);
void write_timing_report(const std::filesystem::path& path, const TimingReport& report);

}  // namespace lqp
