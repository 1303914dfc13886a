#pragma once

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <limits>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "lqp/feature.hpp"
#include "lqp/gbrt.hpp"
#include "lqp/queue.hpp"
#include "lqp/scene.hpp"

namespace lqp {

enum class MethodKind { RpIm, Im, Rp, Native };

std::string_view method_name(MethodKind kind);
MethodKind parse_method(std::string_view name);
FeatureKind method_feature_kind(MethodKind kind);  // not defined for Native

struct EngineConfig {
    int n_stas = 2;
    std::optional<std::size_t> queue_capacity = 500;  // no value = unbounded
    std::optional<double> queue_tq_s;  // when set, capacity resolves to round(T_q * F) at run time
    double retrain_min_interval_s = 5.0;
    int min_train_samples = 50;
    GbrtParams gbrt;
    PipelineParams pipeline;
};

// Resolves a T_q-in-seconds queue setting against the scene frame rate.
EngineConfig resolve_queue(EngineConfig config, double frame_rate);

void validate(const EngineConfig& config);

struct PredictionRecord {
    double t = 0.0;  // feature time; the prediction targets t + T_f
    int sta_id = 0;
    MethodKind method = MethodKind::RpIm;
    double predicted_dbm = 0.0;
    double measured_dbm = std::numeric_limits<double>::quiet_NaN();  // joined at t + T_f
    double target_t = 0.0;
    std::uint64_t model_version = 0;  // 0 = native rule
    double wall_s = 0.0;

    bool joined() const { return !std::isnan(measured_dbm); }
};

struct TrainingEvent {
    double log_time = 0.0;  // sim time (inline) or wall seconds (background)
    double sim_time = 0.0;
    double wall_start_s = 0.0;
    double wall_end_s = 0.0;
    int sta_id = 0;
    std::size_t n_samples = 0;
    int rounds_run = 0;
    int best_round = 0;
    double val_rmse = 0.0;
    std::uint64_t model_version = 0;
};

enum class TrainerMode { Inline, Background };

// Drives per-station pipelines, bounded training queues and model slots.
// Predictions run on the ingest thread against the currently published model;
// at most one training job executes at any instant. Inline mode interleaves
// training deterministically with ingestion; background mode runs a single
// trainer thread and publishes models atomically.
class OnlineEngine {
  public:
    OnlineEngine(EngineConfig config, MethodKind method, TrainerMode mode = TrainerMode::Inline);
    ~OnlineEngine();

    OnlineEngine(const OnlineEngine&) = delete;
    OnlineEngine& operator=(const OnlineEngine&) = delete;

    void ingest(const Frame& frame);
    void ingest(const PowerSample& sample);
    void ingest(const SceneEvent& event);

    // Stops the trainer; pending unlabeled features are dropped.
    void finish();

    // Records whose measured value arrived before the stream ended.
    std::vector<PredictionRecord> joined_predictions() const;
    const std::vector<PredictionRecord>& all_predictions() const { return records_; }
    const std::vector<TrainingEvent>& training_log() const { return training_log_; }

    std::shared_ptr<const GbrtModel> model(int sta_id) const;
    std::size_t queue_size(int sta_id) const;
    const TrainingQueue& queue(int sta_id) const { return *slots_[static_cast<std::size_t>(sta_id)].queue; }
    MethodKind method() const { return method_; }

    struct TickTiming {
        double reduce_ms = 0.0;
        double combine_ms = 0.0;
        double predict_ms = 0.0;
    };
    void set_timing_sink(std::vector<TickTiming>* sink) { timing_sink_ = sink; }

    // Test seam: runs inside every training job, before the model publishes.
    void set_train_hook(std::function<void(int)> hook) { train_hook_ = std::move(hook); }

  private:
    struct Slot {
        std::unique_ptr<StaPipeline> pipeline;
        std::unique_ptr<TrainingQueue> queue;
        std::shared_ptr<const GbrtModel> model;
        double last_trained_at = -std::numeric_limits<double>::infinity();
        std::uint64_t model_version = 0;
        std::uint64_t trainings_started = 0;
        std::vector<std::size_t> awaiting_join;  // record indices ordered by target_t
    };

    void check_time(double t);
    void complete_joins(Slot& slot, int sta_id, const PowerSample& sample);
    bool eligible_locked(const Slot& slot, double now) const;
    int pick_slot_locked(double now);
    void run_training(int sta_id, std::vector<LabeledSample> snapshot, double now,
                      std::uint64_t split_seed);
    void scheduler_step_inline();
    void background_loop();
    double wall_now() const;

    EngineConfig config_;
    MethodKind method_;
    TrainerMode mode_;
    bool needs_images_ = false;

    mutable std::mutex mtx_;
    std::condition_variable cv_;
    ImageBuffer images_;
    std::vector<Slot> slots_;
    std::vector<PredictionRecord> records_;
    std::vector<TrainingEvent> training_log_;
    double sim_time_ = 0.0;
    double last_frame_t_ = -std::numeric_limits<double>::infinity();
    int round_robin_ = 0;
    bool stop_ = false;
    std::thread trainer_;
    std::chrono::steady_clock::time_point epoch_;

    std::vector<TickTiming>* timing_sink_ = nullptr;
    std::function<void(int)> train_hook_;
};

void write_predictions_csv(const std::filesystem::path& path, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_predictions_csv(const std::filesystem::path& path);
void write_training_csv(const std::filesystem::path& path, std::span<const TrainingEvent> events);

}  // namespace lqp
