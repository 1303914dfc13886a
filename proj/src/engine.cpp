#include "lqp/engine.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "lqp/csv.hpp"
#include "lqp/rng.hpp"

namespace lqp {

std::string_view method_name(MethodKind kind) {
    switch (kind) {
        case MethodKind::RpIm: return "rp-im";
        case MethodKind::Im: return "im";
        case MethodKind::Rp: return "rp";
        case MethodKind::Native: return "native";
    }
    return "?";
}

MethodKind parse_method(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "rp-im" || lower == "rpim") return MethodKind::RpIm;
    if (lower == "im") return MethodKind::Im;
    if (lower == "rp") return MethodKind::Rp;
    if (lower == "native") return MethodKind::Native;
    throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

FeatureKind method_feature_kind(MethodKind kind) {
    switch (kind) {
        case MethodKind::RpIm: return FeatureKind::RpIm;
        case MethodKind::Im: return FeatureKind::Im;
        case MethodKind::Rp: return FeatureKind::Rp;
        case MethodKind::Native: break;
    }
    throw std::invalid_argument("native method has no feature kind");
}

EngineConfig resolve_queue(EngineConfig config, double frame_rate) {
    if (config.queue_tq_s) {
        config.queue_capacity = static_cast<std::size_t>(std::llround(*config.queue_tq_s * frame_rate));
        config.queue_tq_s.reset();
    }
    return config;
}

void validate(const EngineConfig& config) {
    if (config.n_stas < 1) throw std::invalid_argument("n_stas must be >= 1");
    if (config.queue_tq_s)
        throw std::invalid_argument("queue T_q not resolved against a frame rate; call resolve_queue");
    if (!(config.retrain_min_interval_s >= 0))
        throw std::invalid_argument("retrain_min_interval_s must be >= 0");
    if (config.min_train_samples < 5) throw std::invalid_argument("min_train_samples must be >= 5");
    if (config.queue_capacity && *config.queue_capacity < 1)
        throw std::invalid_argument("queue_capacity must be >= 1 or unbounded");
    validate(config.gbrt);
    validate(config.pipeline);
}

OnlineEngine::OnlineEngine(EngineConfig config, MethodKind method, TrainerMode mode)
    : config_(std::move(config)),
      method_(method),
      mode_(mode),
      needs_images_(method == MethodKind::RpIm || method == MethodKind::Im),
      images_(config_.pipeline),
      epoch_(std::chrono::steady_clock::now()) {
    validate(config_);
    const FeatureKind kind =
        method_ == MethodKind::Native ? FeatureKind::Rp : method_feature_kind(method_);
    slots_.resize(static_cast<std::size_t>(config_.n_stas));
    for (Slot& slot : slots_) {
        slot.pipeline = std::make_unique<StaPipeline>(config_.pipeline, kind);
        slot.queue = std::make_unique<TrainingQueue>(config_.queue_capacity);
    }
    if (mode_ == TrainerMode::Background && method_ != MethodKind::Native)
        trainer_ = std::thread([this] { background_loop(); });
}

OnlineEngine::~OnlineEngine() { finish(); }

double OnlineEngine::wall_now() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_).count();
}

void OnlineEngine::check_time(double t) {
    if (t < sim_time_ - 1e-9) throw std::runtime_error("event stream timestamp regression");
    sim_time_ = std::max(sim_time_, t);
}

void OnlineEngine::ingest(const SceneEvent& event) {
    if (event.is_frame())
        ingest(std::get<Frame>(event.payload));
    else
        ingest(std::get<PowerSample>(event.payload));
}

void OnlineEngine::ingest(const Frame& frame) {
    using clock = std::chrono::steady_clock;
    const bool timing = timing_sink_ != nullptr;
    TickTiming tick;

    GrayImage gray;
    {
        std::lock_guard lock(mtx_);
        if (frame.t < last_frame_t_ - 1e-9) throw std::runtime_error("frame stream timestamp regression");
        last_frame_t_ = frame.t;
        check_time(frame.t);
    }
    if (needs_images_ || timing) {
        const auto t0 = clock::now();
        gray = to_gray(frame, config_.pipeline.reduced_side);
        tick.reduce_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    }

    {
        std::lock_guard lock(mtx_);
        if (needs_images_) images_.push(std::move(gray));
        for (std::size_t s = 0; s < slots_.size(); ++s) {
            Slot& slot = slots_[s];
            if (method_ == MethodKind::Native) {
                const auto latest = slot.pipeline->latest_power();
                if (!latest) continue;
                PredictionRecord rec;
                rec.t = frame.t;
                rec.sta_id = static_cast<int>(s);
                rec.method = method_;
                rec.predicted_dbm = latest->power_dbm;
                rec.target_t = frame.t + config_.pipeline.horizon_s;
                rec.wall_s = wall_now();
                slot.awaiting_join.push_back(records_.size());
                records_.push_back(rec);
                continue;
            }

            const auto t1 = clock::now();
            auto feature = slot.pipeline->assemble(images_, frame.t);
            if (timing)
                tick.combine_ms += std::chrono::duration<double, std::milli>(clock::now() - t1).count();
            if (!feature) continue;

            auto shared = std::make_shared<const FeatureVector>(std::move(*feature));
            if (slot.model) {
                const auto t2 = clock::now();
                const double predicted = slot.model->predict(*shared);
                if (timing)
                    tick.predict_ms +=
                        std::chrono::duration<double, std::milli>(clock::now() - t2).count();
                PredictionRecord rec;
                rec.t = frame.t;
                rec.sta_id = static_cast<int>(s);
                rec.method = method_;
                rec.predicted_dbm = predicted;
                rec.target_t = frame.t + config_.pipeline.horizon_s;
                rec.model_version = slot.model_version;
                rec.wall_s = wall_now();
                slot.awaiting_join.push_back(records_.size());
                records_.push_back(rec);
            }
            slot.pipeline->submit_for_label(std::move(shared));
        }
        if (timing) timing_sink_->push_back(tick);
    }
    if (mode_ == TrainerMode::Inline)
        scheduler_step_inline();
    else
        cv_.notify_all();
}

void OnlineEngine::ingest(const PowerSample& sample) {
    {
        std::lock_guard lock(mtx_);
        check_time(sample.t);
        if (sample.tx_id < 0 || sample.tx_id >= static_cast<int>(slots_.size()))
            throw std::runtime_error("power sample for unknown sta " + std::to_string(sample.tx_id));
        Slot& slot = slots_[static_cast<std::size_t>(sample.tx_id)];
        slot.pipeline->push_power(sample);
        if (method_ != MethodKind::Native) {
            for (LabeledSample& labeled : slot.pipeline->take_ready()) slot.queue->push(std::move(labeled));
        }
        complete_joins(slot, sample.tx_id, sample);
    }
    if (mode_ == TrainerMode::Inline)
        scheduler_step_inline();
    else
        cv_.notify_all();
}

void OnlineEngine::complete_joins(Slot& slot, int, const PowerSample& sample) {
    while (!slot.awaiting_join.empty()) {
        const std::size_t idx = slot.awaiting_join.front();
        PredictionRecord& rec = records_[idx];
        if (sample.t < rec.target_t - 1e-9) break;
        const auto measured = slot.pipeline->nearest_power(rec.target_t);
        rec.measured_dbm = measured->power_dbm;
        slot.awaiting_join.erase(slot.awaiting_join.begin());
    }
}

bool OnlineEngine::eligible_locked(const Slot& slot, double now) const {
    if (method_ == MethodKind::Native) return false;
    if (slot.queue->size() < static_cast<std::size_t>(config_.min_train_samples)) return false;
    return now - slot.last_trained_at >= config_.retrain_min_interval_s - 1e-9;
}

int OnlineEngine::pick_slot_locked(double now) {
    const int n = static_cast<int>(slots_.size());
    for (int k = 0; k < n; ++k) {
        const int idx = (round_robin_ + k) % n;
        if (eligible_locked(slots_[static_cast<std::size_t>(idx)], now)) {
            round_robin_ = (idx + 1) % n;
            return idx;
        }
    }
    return -1;
}

void OnlineEngine::scheduler_step_inline() {
    int sta = -1;
    std::vector<LabeledSample> snapshot;
    double now = 0.0;
    std::uint64_t seed = 0;
    {
        std::lock_guard lock(mtx_);
        now = sim_time_;
        sta = pick_slot_locked(now);
        if (sta < 0) return;
        Slot& slot = slots_[static_cast<std::size_t>(sta)];
        slot.last_trained_at = now;
        seed = mix_seed(config_.gbrt.rng_seed, static_cast<std::uint64_t>(sta), slot.trainings_started++);
        snapshot = slot.queue->snapshot();
    }
    run_training(sta, std::move(snapshot), now, seed);
}

void OnlineEngine::background_loop() {
    for (;;) {
        int sta = -1;
        std::vector<LabeledSample> snapshot;
        double now = 0.0;
        std::uint64_t seed = 0;
        {
            std::unique_lock lock(mtx_);
            if (stop_) return;
            now = sim_time_;
            sta = pick_slot_locked(now);
            if (sta < 0) {
                cv_.wait_for(lock, std::chrono::milliseconds(2));
                continue;
            }
            Slot& slot = slots_[static_cast<std::size_t>(sta)];
            slot.last_trained_at = now;
            seed = mix_seed(config_.gbrt.rng_seed, static_cast<std::uint64_t>(sta),
                            slot.trainings_started++);
            snapshot = slot.queue->snapshot();
        }
        run_training(sta, std::move(snapshot), now, seed);
    }
}

void OnlineEngine::run_training(int sta_id, std::vector<LabeledSample> snapshot, double now,
                                std::uint64_t split_seed) {
    const double wall_start = wall_now();
    if (train_hook_) train_hook_(sta_id);
    GbrtParams params = config_.gbrt;
    params.rng_seed = split_seed;
    auto model = train(std::span<const LabeledSample>(snapshot), params);
    const double wall_end = wall_now();
    if (!model) return;  // too few samples; previous model stays published

    std::lock_guard lock(mtx_);
    Slot& slot = slots_[static_cast<std::size_t>(sta_id)];
    slot.model = std::make_shared<const GbrtModel>(std::move(*model));
    ++slot.model_version;

    TrainingEvent event;
    event.sim_time = now;
    event.log_time = mode_ == TrainerMode::Inline ? now : wall_end;
    event.wall_start_s = wall_start;
    event.wall_end_s = wall_end;
    event.sta_id = sta_id;
    event.n_samples = snapshot.size();
    event.rounds_run = slot.model->trained_rounds;
    event.best_round = slot.model->best_round;
    event.val_rmse = slot.model->validation_rmse[static_cast<std::size_t>(slot.model->best_round - 1)];
    event.model_version = slot.model_version;
    training_log_.push_back(event);
}

void OnlineEngine::finish() {
    {
        std::lock_guard lock(mtx_);
        if (stop_) return;
        stop_ = true;
    }
    cv_.notify_all();
    if (trainer_.joinable()) trainer_.join();
}

std::vector<PredictionRecord> OnlineEngine::joined_predictions() const {
    std::lock_guard lock(mtx_);
    std::vector<PredictionRecord> out;
    out.reserve(records_.size());
    for (const PredictionRecord& rec : records_)
        if (rec.joined()) out.push_back(rec);
    return out;
}

std::shared_ptr<const GbrtModel> OnlineEngine::model(int sta_id) const {
    std::lock_guard lock(mtx_);
    return slots_[static_cast<std::size_t>(sta_id)].model;
}

std::size_t OnlineEngine::queue_size(int sta_id) const {
    std::lock_guard lock(mtx_);
    return slots_[static_cast<std::size_t>(sta_id)].queue->size();
}

void write_predictions_csv(const std::filesystem::path& path, std::span<const PredictionRecord> records) {
    auto out = open_output(path);
    out << "t,sta_id,method,predicted_dbm,measured_dbm\n";
    for (const PredictionRecord& rec : records) {
        out << format_double(rec.t) << ',' << rec.sta_id << ',' << method_name(rec.method) << ','
            << format_double(rec.predicted_dbm) << ',' << format_double(rec.measured_dbm) << "\n";
    }
}

std::vector<PredictionRecord> read_predictions_csv(const std::filesystem::path& path) {
    const auto rows = read_csv(path);
    if (rows.empty() || rows[0].size() != 5)
        throw std::runtime_error("not a prediction log: " + path.string());
    std::vector<PredictionRecord> records;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != 5) throw std::runtime_error("malformed prediction row in " + path.string());
        PredictionRecord rec;
        rec.t = parse_double(row[0]);
        rec.sta_id = static_cast<int>(parse_long(row[1]));
        rec.method = parse_method(row[2]);
        rec.predicted_dbm = parse_double(row[3]);
        rec.measured_dbm = parse_double(row[4]);
        records.push_back(rec);
    }
    return records;
}

void write_training_csv(const std::filesystem::path& path, std::span<const TrainingEvent> events) {
    auto out = open_output(path);
    out << "wall_time,sta_id,n_samples,rounds_run,best_round,val_rmse\n";
    for (const TrainingEvent& e : events) {
        out << format_double(e.log_time) << ',' << e.sta_id << ',' << e.n_samples << ',' << e.rounds_run
            << ',' << e.best_round << ',' << format_double(e.val_rmse) << "\n";
    }
}

}  // namespace lqp
