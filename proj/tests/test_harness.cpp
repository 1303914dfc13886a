#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "lqp/csv.hpp"
#include "lqp/harness.hpp"

using namespace lqp;

namespace {

SceneConfig tiny_scene(double duration = 160.0) {
    SceneConfig config;
    config.duration_s = duration;
    config.frame_rate = 10.0;
    config.image_width = 96;
    config.image_height = 54;
    config.tx_points = {{"A", {-0.5, 4.0}}, {"B", {0.5, 4.0}}};
    config.rx_position = {0.0, 0.0};
    config.baseline_power_dbm = {{"A", -42.0}, {"B", -44.0}};
    config.noise_stddev = 0.5;
    config.obstacle.width_m = 0.9;
    config.obstacle.height_m = 1.7;
    config.obstacle.attenuation_db = 10.0;
    config.obstacle.track_y = 2.0;
    config.obstacle.sweep = SweepSpec{-1.5, 1.5, 0.5, 1.0};
    config.tx_assignments = {{{0.0, duration, "A"}}, {{0.0, duration, "B"}}};
    return config;
}

EngineConfig tiny_engine() {
    EngineConfig config;
    config.queue_capacity = 300;
    config.retrain_min_interval_s = 5.0;
    config.min_train_samples = 30;
    config.pipeline.reduced_side = 8;
    config.pipeline.images_per_feature = 3;
    config.pipeline.image_interval_s = 0.5;
    config.pipeline.power_values = 11;
    config.pipeline.horizon_s = 1.0;
    config.gbrt.num_leaves = 15;
    config.gbrt.max_depth = 5;
    config.gbrt.num_rounds = 5;
    config.gbrt.early_stop_rounds = 2;
    config.gbrt.learning_rate = 0.3;
    config.gbrt.min_samples_leaf = 3;
    return config;
}

PredictionRecord record(double t, MethodKind m, double predicted, double measured, int sta = 0) {
    PredictionRecord rec;
    rec.t = t;
    rec.sta_id = sta;
    rec.method = m;
    rec.predicted_dbm = predicted;
    rec.measured_dbm = measured;
    rec.target_t = t + 1.0;
    return rec;
}

}  // namespace

TEST_CASE("windowed_rmse on a perfect predictor is all zeros") {
    std::vector<PredictionRecord> log;
    for (double t = 100.0; t < 300.0; t += 0.5) log.push_back(record(t, MethodKind::RpIm, -45.0, -45.0));
    const ErrorTable table = windowed_rmse(log);
    REQUIRE(table.windows.size() == 2);
    REQUIRE(table.columns == std::vector<std::string>{"rp-im"});
    for (const auto& row : table.cells) CHECK(*row[0] == 0.0);
}

TEST_CASE("windowed_rmse of a constant 2 dB offset is exactly 2") {
    std::vector<PredictionRecord> log;
    for (double t = 100.0; t < 200.0; t += 0.5) log.push_back(record(t, MethodKind::Rp, -43.0, -45.0));
    const ErrorTable table = windowed_rmse(log);
    REQUIRE(table.windows.size() == 1);
    CHECK(*table.cells[0][0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("windows with no predictions are absent, not zero") {
    std::vector<PredictionRecord> log;
    for (double t = 100.0; t < 200.0; t += 0.5) log.push_back(record(t, MethodKind::Im, -44.0, -45.0));
    for (double t = 300.0; t < 400.0; t += 0.5) log.push_back(record(t, MethodKind::Im, -44.0, -45.0));
    const ErrorTable table = windowed_rmse(log);
    REQUIRE(table.windows.size() == 3);
    CHECK(table.cells[0][0].has_value());
    CHECK(!table.cells[1][0].has_value());
    CHECK(table.cells[2][0].has_value());
}

TEST_CASE("native on a zero-noise constant-power scene has zero error") {
    SceneConfig scene = tiny_scene();
    scene.noise_stddev = 0.0;
    scene.obstacle.sweep.reset();
    scene.obstacle.trajectory = {{0.0, -30.0}};  // parked far away, never blocks
    const RunResult run = run_scenario(scene, tiny_engine(), MethodKind::Native, 1);
    REQUIRE(!run.predictions.empty());
    const ErrorTable table = windowed_rmse(run.predictions);
    for (const auto& row : table.cells) {
        REQUIRE(row[0].has_value());
        CHECK(*row[0] == 0.0);
    }
    CHECK(run.trainings.empty());
}

TEST_CASE("native RMSE equals a direct recomputation from the power trace") {
    const SceneConfig scene = tiny_scene();
    const std::uint64_t seed = 11;
    const RunResult run = run_scenario(scene, tiny_engine(), MethodKind::Native, seed);
    const ErrorTable table = windowed_rmse(run.predictions, 100.0);

    // Independent route: pair r_t with r_{t+1.0} straight off the beacon grid.
    const auto trace = generate_power_trace(resolve_with_seed(scene, seed));
    double acc = 0.0;
    long count = 0;
    for (const PowerSample& s : trace) {
        if (s.tx_id != 0 && s.tx_id != 1) continue;
        if (s.t < 100.0) continue;
        const double target = s.t + 1.0;
        for (const PowerSample& f : trace) {
            if (f.tx_id == s.tx_id && std::abs(f.t - target) < 1e-9) {
                const double d = s.power_dbm - f.power_dbm;
                acc += d * d;
                ++count;
            }
        }
    }
    const double expect = std::sqrt(acc / static_cast<double>(count));
    REQUIRE(table.windows.size() == 1);
    CHECK(*table.cells[0][0] == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("the mobile scenario swaps assignments and shifts the power regime at 300 s") {
    SceneConfig scene = tiny_scene(320.0);
    scene.tx_assignments = {{{0.0, 300.0, "A"}, {300.0, 320.0, "B"}},
                            {{0.0, 300.0, "B"}, {300.0, 320.0, "A"}}};
    scene.noise_stddev = 0.0;
    CHECK(assigned_point(scene, 0, 299.9) == "A");
    CHECK(assigned_point(scene, 0, 300.0) == "B");
    CHECK(assigned_point(scene, 1, 300.0) == "A");

    const SceneConfig resolved = resolve_with_seed(scene, 2);
    const auto trace = generate_power_trace(resolved);
    double pre = 0.0, post = 0.0;
    long n_pre = 0, n_post = 0;
    for (const PowerSample& s : trace) {
        if (s.tx_id != 0) continue;
        if (s.t < 300.0) {
            pre += s.power_dbm;
            ++n_pre;
        } else {
            post += s.power_dbm;
            ++n_post;
        }
    }
    pre /= static_cast<double>(n_pre);
    post /= static_cast<double>(n_post);
    // Baseline A (-42) to B (-44): the mean drops by roughly the 2 dB gap.
    CHECK(post < pre - 1.0);
}

TEST_CASE("more frequent blockage raises the native method's error") {
    SceneConfig slow = tiny_scene();
    slow.noise_stddev = 0.0;
    SceneConfig fast = slow;
    slow.obstacle.sweep = SweepSpec{-1.5, 1.5, 0.3, 0.4};
    fast.obstacle.sweep = SweepSpec{-1.5, 1.5, 1.2, 1.6};

    const RunResult slow_run = run_scenario(slow, tiny_engine(), MethodKind::Native, 5);
    const RunResult fast_run = run_scenario(fast, tiny_engine(), MethodKind::Native, 5);
    const ErrorTable slow_table = windowed_rmse(slow_run.predictions, 60.0);
    const ErrorTable fast_table = windowed_rmse(fast_run.predictions, 60.0);
    CHECK(*fast_table.cells[0][0] > *slow_table.cells[0][0]);
}

TEST_CASE("queue capacities beyond the sample volume produce identical logs") {
    const SceneConfig scene = tiny_scene(120.0);
    EngineConfig big = tiny_engine();
    big.queue_capacity = 1000000;
    EngineConfig unbounded = tiny_engine();
    unbounded.queue_capacity.reset();

    const RunResult a = run_scenario(scene, big, MethodKind::RpIm, 3);
    const RunResult b = run_scenario(scene, unbounded, MethodKind::RpIm, 3);
    REQUIRE(a.predictions.size() == b.predictions.size());
    for (std::size_t i = 0; i < a.predictions.size(); ++i) {
        CHECK(a.predictions[i].t == b.predictions[i].t);
        CHECK(a.predictions[i].predicted_dbm == b.predictions[i].predicted_dbm);
    }
}

TEST_CASE("labels on a zero-noise trace equal the simulator recomputed independently") {
    SceneConfig scene = tiny_scene(40.0);
    scene.noise_stddev = 0.0;
    const SceneConfig resolved = resolve_with_seed(scene, 9);
    PipelineParams params = tiny_engine().pipeline;
    params.frame_rate = resolved.frame_rate;

    ImageBuffer images(params);
    StaPipeline pipeline(params, FeatureKind::RpIm);
    std::vector<LabeledSample> labeled;
    SceneSimulator sim(resolved);
    SceneEvent event;
    while (sim.next(event)) {
        if (!event.is_frame()) {
            const auto& s = std::get<PowerSample>(event.payload);
            if (s.tx_id != 0) continue;
            pipeline.push_power(s);
            for (LabeledSample& done : pipeline.take_ready()) labeled.push_back(std::move(done));
            continue;
        }
        const Frame& frame = std::get<Frame>(event.payload);
        images.push(to_gray(frame, params.reduced_side));
        if (auto feature = pipeline.assemble(images, frame.t))
            pipeline.submit_for_label(std::make_shared<FeatureVector>(std::move(*feature)));
    }
    REQUIRE(labeled.size() > 200);
    for (const LabeledSample& s : labeled)
        CHECK(s.label_dbm == measure_power(resolved, 0, s.label_t).power_dbm);
}

TEST_CASE("an unbounded queue on the stationary scenario improves in trend over time") {
    // Seed-averaged windowed error, later windows at or below the earliest.
    const SceneConfig scene = tiny_scene(200.0);
    EngineConfig engine = tiny_engine();
    engine.queue_capacity.reset();
    double early = 0.0, late = 0.0;
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    for (std::uint64_t seed : seeds) {
        const RunResult run = run_scenario(scene, engine, MethodKind::RpIm, seed);
        const ErrorTable table = windowed_rmse(run.predictions, 50.0, 50.0);
        REQUIRE(table.windows.size() == 3);
        early += *table.cells[0][0];
        late += *table.cells[2][0];
    }
    CHECK(late <= early);
}

TEST_CASE("ablation grid produces one averaged table per queue span") {
    const SceneConfig scene = tiny_scene(120.0);
    const std::vector<std::optional<double>> tqs{5.0, std::nullopt};
    const std::vector<std::uint64_t> seeds{1, 2};
    const AblationResult result = ablate_queue(scene, tiny_engine(), tqs, seeds);
    REQUIRE(result.labels.size() == 2);
    CHECK(result.labels[0] == "5");
    CHECK(result.labels[1] == "inf");
    REQUIRE(result.tables.size() == 2);
    CHECK(result.tables[0].windows.size() == result.tables[1].windows.size());
}

TEST_CASE("table helpers: averaging and merging") {
    std::vector<PredictionRecord> log_a, log_b;
    for (double t = 100.0; t < 200.0; t += 0.5) {
        log_a.push_back(record(t, MethodKind::Rp, -43.0, -45.0));
        log_b.push_back(record(t, MethodKind::Rp, -44.0, -45.0));
    }
    const ErrorTable ta = windowed_rmse(log_a);
    const ErrorTable tb = windowed_rmse(log_b);
    const std::vector<ErrorTable> both{ta, tb};
    const ErrorTable mean = average_tables(both);
    CHECK(*mean.cells[0][0] == doctest::Approx(1.5).epsilon(1e-12));

    const std::vector<std::string> labels{"x", "y"};
    const ErrorTable merged = merge_columns(both, labels);
    CHECK(merged.columns == std::vector<std::string>{"x", "y"});
    CHECK(*merged.cells[0][0] == doctest::Approx(2.0));
    CHECK(*merged.cells[0][1] == doctest::Approx(1.0));

    const std::filesystem::path dir = std::filesystem::temp_directory_path();
    write_error_table_csv(dir / "lqp_table_test.csv", merged);
    const auto rows = read_csv(dir / "lqp_table_test.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"window_start", "window_end", "x", "y"});
    std::filesystem::remove(dir / "lqp_table_test.csv");
}

TEST_CASE("timing report totals its steps and meets sanity bounds on a tiny scene") {
    const SceneConfig scene = tiny_scene(120.0);
    const TimingReport report = measure_timing(scene, tiny_engine(), 50);
    CHECK(report.ticks == 50);
    CHECK(report.total_ms == doctest::Approx(report.image_load_ms + report.image_reduction_ms +
                                             report.data_combination_ms + report.ml_prediction_ms));
    CHECK(report.ml_prediction_ms < 10.0);

    CHECK_THROWS_AS(measure_timing(scene, tiny_engine(), 0), std::invalid_argument);
    CHECK_THROWS_AS(measure_timing(tiny_scene(10.0), tiny_engine(), 5000), std::runtime_error);
}

TEST_CASE("im features equal the image slice of rp-im features at every timestamp") {
    // Deterministic streams: the same scene drives two pipelines of different
    // kinds; the rp-im vector's prefix must equal the im vector.
    const SceneConfig scene = resolve_with_seed(tiny_scene(20.0), 6);
    PipelineParams params = tiny_engine().pipeline;
    params.frame_rate = scene.frame_rate;

    ImageBuffer images(params);
    StaPipeline rp_im(params, FeatureKind::RpIm);
    StaPipeline im(params, FeatureKind::Im);
    StaPipeline rp(params, FeatureKind::Rp);

    SceneSimulator sim(scene);
    SceneEvent event;
    long compared = 0;
    while (sim.next(event)) {
        if (!event.is_frame()) {
            const auto& s = std::get<PowerSample>(event.payload);
            if (s.tx_id != 0) continue;
            rp_im.push_power(s);
            im.push_power(s);
            rp.push_power(s);
            continue;
        }
        const Frame& frame = std::get<Frame>(event.payload);
        images.push(to_gray(frame, params.reduced_side));
        const auto a = rp_im.assemble(images, frame.t);
        const auto b = im.assemble(images, frame.t);
        const auto c = rp.assemble(images, frame.t);
        CHECK(a.has_value() == b.has_value());
        if (a && b && c) {
            CHECK(a->values.head(b->values.size()) == b->values);
            CHECK(a->values.tail(c->values.size()) == c->values);
            ++compared;
        }
    }
    CHECK(compared > 150);
}
