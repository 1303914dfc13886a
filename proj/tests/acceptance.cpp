// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exits nonzero if any fail.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include "lqp/cli.hpp"
#include "lqp/config.hpp"
#include "lqp/csv.hpp"
#include "lqp/engine.hpp"
#include "lqp/harness.hpp"
#include "lqp/queue.hpp"
#include "lqp/rng.hpp"
#include "oracles.hpp"

using namespace lqp;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigDir(LQP_CONFIG_DIR);
const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};

struct Outcome {
    Outcome(int id_, std::string name_) : id(id_), name(std::move(name_)) {}
    int id;
    std::string name;
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

// Engine profile used by the scenario criteria: Table-style learner and
// pipeline defaults, 50 s queue, 10 s per-slot retrain cadence.
EngineConfig scenario_engine() {
    EngineConfig config;
    config.queue_capacity = 500;
    config.retrain_min_interval_s = 10.0;
    config.min_train_samples = 50;
    return config;
}

// ---------------------------------------------------------------------------
// Shared scenario runs for criteria 5-8.

struct CellKey {
    std::string scene;
    MethodKind method;
    std::optional<std::size_t> capacity;  // nullopt = engine default
    bool unbounded = false;
    std::uint64_t seed = 0;
};

struct CellTables {
    ErrorTable win100;  // 100 s windows from 100 s
    ErrorTable tail200;  // one [400, 600) window
};

class RunGrid {
  public:
    void request(const CellKey& key) { keys_.push_back(key); }

    void execute() {
        results_.resize(keys_.size());
        std::atomic<std::size_t> cursor{0};
        const auto worker = [&] {
            for (;;) {
                const std::size_t i = cursor.fetch_add(1);
                if (i >= keys_.size()) return;
                const CellKey& key = keys_[i];
                const SceneConfig scene = load_scene_config(kConfigDir / (key.scene + ".json"));
                EngineConfig engine = scenario_engine();
                if (key.unbounded)
                    engine.queue_capacity.reset();
                else if (key.capacity)
                    engine.queue_capacity = key.capacity;
                const RunResult run = run_scenario(scene, engine, key.method, key.seed);
                results_[i].win100 = windowed_rmse(run.predictions, 100.0, 100.0);
                results_[i].tail200 = windowed_rmse(run.predictions, 200.0, 400.0);
            }
        };
        std::thread a(worker), b(worker);
        a.join();
        b.join();
    }

    // Seed-mean of the 100 s window starting at window_start.
    double mean100(const std::string& scene, MethodKind method, double window_start,
                   std::optional<std::size_t> capacity = std::nullopt, bool unbounded = false) const {
        return mean_over(scene, method, capacity, unbounded, [&](const CellTables& t) {
            return *t.win100.cell(window_start, std::string(method_name(method)));
        });
    }

    double mean_tail(const std::string& scene, MethodKind method) const {
        return mean_over(scene, method, std::nullopt, false, [&](const CellTables& t) {
            return *t.tail200.cell(400.0, std::string(method_name(method)));
        });
    }

  private:
    template <typename F>
    double mean_over(const std::string& scene, MethodKind method,
                     std::optional<std::size_t> capacity, bool unbounded, F&& get) const {
        double acc = 0.0;
        long n = 0;
        for (std::size_t i = 0; i < keys_.size(); ++i) {
            const CellKey& key = keys_[i];
            if (key.scene != scene || key.method != method || key.unbounded != unbounded ||
                key.capacity != capacity)
                continue;
            acc += get(results_[i]);
            ++n;
        }
        if (n != static_cast<long>(kSeeds.size())) throw std::runtime_error("grid cell missing");
        return acc / static_cast<double>(n);
    }

    std::vector<CellKey> keys_;
    std::vector<CellTables> results_;
};

// ---------------------------------------------------------------------------

Outcome criterion_feature_dimensions() {
    Outcome out{1, "feature dimensionality (8021 / 8000 / 21)"};
    const PipelineParams params;  // table defaults
    bool ok = feature_dim(params, FeatureKind::RpIm) == 8021 &&
              feature_dim(params, FeatureKind::Im) == 8000 && feature_dim(params, FeatureKind::Rp) == 21;

    // End to end through the pipeline at camera resolution.
    Frame frame;
    frame.t = 10.0;
    frame.width = 1280;
    frame.height = 720;
    frame.rgb.assign(static_cast<std::size_t>(1280) * 720 * 3, 127);
    std::vector<GrayImage> window;
    for (int k = params.images_per_feature - 1; k >= 0; --k) {
        GrayImage g = to_gray(frame, params.reduced_side);
        g.t = 10.0 - k * params.image_interval_s;
        window.push_back(std::move(g));
    }
    std::vector<const GrayImage*> ptrs;
    for (const GrayImage& g : window) ptrs.push_back(&g);
    std::vector<PowerSample> power;
    for (double t = 7.0; t <= 10.55; t += kBeaconPeriod) power.push_back({t, 0, -45.0});
    for (auto [kind, want] : {std::pair{FeatureKind::RpIm, 8021}, {FeatureKind::Im, 8000},
                             {FeatureKind::Rp, 21}}) {
        const auto fv = build_feature(ptrs, power, 10.0, params, kind);
        ok = ok && fv.has_value() && fv->values.size() == want;
    }
    out.pass = ok;
    out.detail = "rp-im 8021, im 8000, rp 21, exact";
    return out;
}

Outcome criterion_gbrt_oracle() {
    Outcome out{2, "gbrt split and prediction oracle equivalence"};
    SplitMix64 rng(20240811);
    long splits_checked = 0, predictions_checked = 0;
    double worst_gain_err = 0.0, worst_pred_err = 0.0;

    for (int rep = 0; rep < 110; ++rep) {
        const int n = 10 + static_cast<int>(rng.bounded(21));   // <= 30
        const int d = 1 + static_cast<int>(rng.bounded(5));     // <= 5
        const bool gridded = rng.bounded(2) == 0;
        Eigen::MatrixXf X(n, d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j)
                X(i, j) = gridded ? static_cast<float>(rng.bounded(5))
                                  : static_cast<float>(rng.uniform(-2.0, 2.0));
        std::vector<double> y(static_cast<std::size_t>(n));
        for (double& v : y) v = gridded ? static_cast<double>(rng.bounded(7)) : rng.uniform(-8.0, 8.0);

        GbrtParams params;
        params.num_leaves = 6;
        params.max_depth = 4;
        params.num_rounds = 3;
        params.early_stop_rounds = 3;
        params.learning_rate = 0.4;
        params.min_samples_leaf = 1 + static_cast<int>(rng.bounded(3));
        params.rng_seed = rng.next();
        const auto model = train(X, y, params);
        if (!model) return out;

        // Replay the boosting state to recover each round's residuals.
        const auto [update_idx, validation_idx] =
            split_dataset(static_cast<std::size_t>(n), params.split_fraction, params.rng_seed);
        Eigen::MatrixXf Xu(static_cast<Eigen::Index>(update_idx.size()), d);
        for (std::size_t r = 0; r < update_idx.size(); ++r)
            Xu.row(static_cast<Eigen::Index>(r)) = X.row(update_idx[r]);
        std::vector<double> pred(update_idx.size(), model->base_score);

        for (const RegressionTree& tree : model->trees) {
            std::vector<double> residual(update_idx.size());
            for (std::size_t r = 0; r < update_idx.size(); ++r)
                residual[r] = y[static_cast<std::size_t>(update_idx[r])] - pred[r];

            std::vector<std::vector<int>> node_rows;
            oracle::collect_node_samples(tree, Xu, node_rows);
            for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
                const TreeNode& node = tree.nodes[id];
                if (node.is_leaf()) continue;
                const auto best =
                    oracle::exhaustive_best_split(Xu, residual, node_rows[id], params.min_samples_leaf);
                std::vector<int> left, right;
                for (int i : node_rows[id])
                    (Xu(i, node.feature) <= node.threshold ? left : right).push_back(i);
                const auto sse = [&](const std::vector<int>& rows) {
                    double mean = 0.0;
                    for (int i : rows) mean += residual[static_cast<std::size_t>(i)];
                    mean /= static_cast<double>(rows.size());
                    double acc = 0.0;
                    for (int i : rows) {
                        const double dd = residual[static_cast<std::size_t>(i)] - mean;
                        acc += dd * dd;
                    }
                    return acc;
                };
                const double chosen = sse(node_rows[id]) - sse(left) - sse(right);
                const double err = std::abs(chosen - best.gain) / std::max(1.0, std::abs(best.gain));
                worst_gain_err = std::max(worst_gain_err, err);
                if (err > 1e-9) {
                    out.detail = "split gain deviates from the exhaustive oracle by " + fmt(err);
                    return out;
                }
                ++splits_checked;
            }
            for (std::size_t r = 0; r < update_idx.size(); ++r)
                pred[r] += params.learning_rate * tree.evaluate_row(Xu, static_cast<Eigen::Index>(r));
        }

        for (int i = 0; i < n; ++i) {
            std::vector<float> row(static_cast<std::size_t>(d));
            for (int j = 0; j < d; ++j) row[static_cast<std::size_t>(j)] = X(i, j);
            const double err = std::abs(model->predict(row) - oracle::traverse_ensemble(*model, row));
            worst_pred_err = std::max(worst_pred_err, err);
            if (err > 1e-12) {
                out.detail = "ensemble prediction deviates from the traversal oracle";
                return out;
            }
            ++predictions_checked;
        }
    }

    // Exact tie handling: duplicated column must lose to the lower index,
    // symmetric gains must pick the lower threshold.
    {
        Eigen::MatrixXf X(4, 3);
        X << 7, 0, 0, 7, 1, 1, 7, 2, 2, 7, 3, 3;
        const std::vector<double> y{0.0, 0.0, 6.0, 6.0};
        GbrtParams p;
        p.num_leaves = 2;
        p.min_samples_leaf = 1;
        const RegressionTree tree = fit_tree(X, y, p);
        if (tree.nodes[0].feature != 1 || tree.nodes[0].threshold != 1.5f) {
            out.detail = "feature-index tie rule violated";
            return out;
        }
        Eigen::MatrixXf X2(4, 1);
        X2 << 0, 1, 2, 3;
        const std::vector<double> y2{0.0, 6.0, 6.0, 0.0};
        const RegressionTree tree2 = fit_tree(X2, y2, p);
        if (tree2.nodes[0].threshold != 0.5f) {
            out.detail = "threshold tie rule violated";
            return out;
        }
    }

    out.pass = splits_checked > 100 && predictions_checked > 1000;
    out.detail = std::to_string(splits_checked) + " splits and " + std::to_string(predictions_checked) +
                 " predictions vs oracles, worst gain err " + fmt(worst_gain_err) + ", ties exact";
    return out;
}

Outcome criterion_boosting_monotonic() {
    Outcome out{3, "boosting monotonicity and best-round optimality"};
    SplitMix64 rng(7117);
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 25 + static_cast<int>(rng.bounded(50));
        const int d = 2 + static_cast<int>(rng.bounded(4));
        Eigen::MatrixXf X(n, d);
        std::vector<double> y(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) X(i, j) = static_cast<float>(rng.uniform(-3.0, 3.0));
            y[static_cast<std::size_t>(i)] = (X(i, 0) > 0 ? 5.0 : -1.0) + 0.4 * rng.gaussian();
        }
        GbrtParams params;
        params.num_leaves = 10;
        params.max_depth = 5;
        params.num_rounds = 8;
        params.early_stop_rounds = 8;  // run all rounds; monotonicity is per round
        params.min_samples_leaf = 2;
        params.rng_seed = rng.next();
        const auto model = train(X, y, params);
        if (!model) return out;

        const auto [update_idx, validation_idx] =
            split_dataset(static_cast<std::size_t>(n), params.split_fraction, params.rng_seed);
        std::vector<double> pred(update_idx.size(), model->base_score);
        double prev = 0.0;
        for (std::size_t r = 0; r < update_idx.size(); ++r) {
            const double dd = y[static_cast<std::size_t>(update_idx[r])] - pred[r];
            prev += dd * dd;
        }
        for (const RegressionTree& tree : model->trees) {
            double now = 0.0;
            for (std::size_t r = 0; r < update_idx.size(); ++r) {
                std::vector<float> row(static_cast<std::size_t>(d));
                for (int j = 0; j < d; ++j) row[static_cast<std::size_t>(j)] = X(update_idx[r], j);
                pred[r] += params.learning_rate * tree.evaluate(row.data());
                const double dd = y[static_cast<std::size_t>(update_idx[r])] - pred[r];
                now += dd * dd;
            }
            if (now > prev + 1e-9) {
                out.detail = "update-set squared error increased across a round";
                return out;
            }
            prev = now;
        }

        double best = model->validation_rmse.front();
        for (double v : model->validation_rmse) best = std::min(best, v);
        if (model->validation_rmse[static_cast<std::size_t>(model->best_round - 1)] != best) {
            out.detail = "best_round does not attain the minimum validation RMSE";
            return out;
        }
    }
    out.pass = true;
    out.detail = "50 datasets, exact ordering assertions";
    return out;
}

Outcome criterion_queue_semantics() {
    Outcome out{4, "queue FIFO, capacity, and age bounds"};
    SplitMix64 rng(40412);
    const double frame_rate = 10.0, horizon = 1.0;
    for (int rep = 0; rep < 200; ++rep) {
        const bool bounded = rng.bounded(5) != 0;
        const std::size_t cap = 1 + rng.bounded(80);
        TrainingQueue queue(bounded ? std::optional<std::size_t>(cap) : std::nullopt);
        std::vector<double> reference;
        const int pushes = 10 + static_cast<int>(rng.bounded(400));
        for (int k = 0; k < pushes; ++k) {
            const double t = k / frame_rate;
            auto fv = std::make_shared<FeatureVector>();
            fv->t = t;
            queue.push(LabeledSample{std::move(fv), 0.0, t + horizon});
            reference.push_back(t);

            const std::size_t expect =
                bounded ? std::min<std::size_t>(cap, reference.size()) : reference.size();
            if (queue.size() != expect) {
                out.detail = "capacity bound violated";
                return out;
            }
            for (std::size_t i = 0; i < queue.size(); ++i) {
                if (queue.at(i).feature->t != reference[reference.size() - queue.size() + i]) {
                    out.detail = "FIFO eviction order violated";
                    return out;
                }
            }
            if (bounded) {
                const double now = t + horizon;  // label completion time
                const double bound = static_cast<double>(cap) / frame_rate + horizon + 1.0 / frame_rate;
                for (std::size_t i = 0; i < queue.size(); ++i) {
                    if (now - queue.at(i).feature->t > bound + 1e-9) {
                        out.detail = "age bound violated";
                        return out;
                    }
                }
            }
        }
    }
    out.pass = true;
    out.detail = "200 randomized push sequences";
    return out;
}

Outcome criterion_ml_beats_native(const RunGrid& grid) {
    Outcome out{5, "ml beats native on the stationary scenario (200-600 s)"};
    std::ostringstream detail;
    bool ok = true;
    for (double w : {200.0, 300.0, 400.0, 500.0}) {
        const double native = grid.mean100("outdoor_stationary", MethodKind::Native, w);
        const double rpim = grid.mean100("outdoor_stationary", MethodKind::RpIm, w);
        const double im = grid.mean100("outdoor_stationary", MethodKind::Im, w);
        ok = ok && rpim < native && im < native;
        if (w == 200.0)
            detail << "[200,300): rp-im " << fmt(rpim) << ", im " << fmt(im) << ", native "
                   << fmt(native);
    }
    out.pass = ok;
    out.detail = detail.str() + (ok ? "; strict in every window" : "; ordering violated");
    return out;
}

Outcome criterion_adaptation_dip(const RunGrid& grid) {
    Outcome out{6, "adaptation dip after the swap and recovery below native"};
    const double before = grid.mean100("outdoor_mobile", MethodKind::RpIm, 200.0);
    const double dip = grid.mean100("outdoor_mobile", MethodKind::RpIm, 300.0);
    const double late = grid.mean100("outdoor_mobile", MethodKind::RpIm, 500.0);
    const double native_late = grid.mean100("outdoor_mobile", MethodKind::Native, 500.0);
    out.pass = dip > before && late < native_late;
    out.detail = "rp-im [200,300) " + fmt(before) + " -> [300,400) " + fmt(dip) + "; [500,600) " +
                 fmt(late) + " vs native " + fmt(native_late);
    return out;
}

Outcome criterion_feature_ordering(const RunGrid& grid) {
    Outcome out{7, "feature informativeness: rp-im and im at or below rp (400-600 s)"};
    const double rpim = grid.mean_tail("outdoor_mobile", MethodKind::RpIm);
    const double im = grid.mean_tail("outdoor_mobile", MethodKind::Im);
    const double rp = grid.mean_tail("outdoor_mobile", MethodKind::Rp);
    out.pass = rpim <= rp && im <= rp;
    out.detail = "rp-im " + fmt(rpim) + ", im " + fmt(im) + ", rp " + fmt(rp);
    return out;
}

Outcome criterion_queue_ablation(const RunGrid& grid) {
    Outcome out{8, "queue-size ablation directions around the swap"};
    const double tq15_pre = grid.mean100("outdoor_mobile", MethodKind::RpIm, 200.0, std::size_t{150});
    const double tqinf_pre = grid.mean100("outdoor_mobile", MethodKind::RpIm, 200.0, std::nullopt, true);
    const double tq50_post = grid.mean100("outdoor_mobile", MethodKind::RpIm, 400.0);
    const double tqinf_post = grid.mean100("outdoor_mobile", MethodKind::RpIm, 400.0, std::nullopt, true);
    out.pass = tq50_post <= tqinf_post && tqinf_pre <= tq15_pre;
    out.detail = "[400,500): tq50 " + fmt(tq50_post) + " vs inf " + fmt(tqinf_post) +
                 "; [200,300): inf " + fmt(tqinf_pre) + " vs tq15 " + fmt(tq15_pre);
    return out;
}

Outcome criterion_latency(const fs::path& out_dir) {
    Outcome out{9, "latency budget at camera dimensions"};
    const SceneConfig scene = load_scene_config(kConfigDir / "timing_camera.json");
    const TimingReport report = measure_timing(scene, scenario_engine(), 500);
    write_timing_report(out_dir / "timing.txt", report);
    out.pass = report.ml_prediction_ms < 10.0 && report.total_ms < 100.0;
    out.detail = "ml_prediction " + fmt(report.ml_prediction_ms) + " ms, total " +
                 fmt(report.total_ms) + " ms over " + std::to_string(report.ticks) + " ticks";
    return out;
}

Outcome criterion_training_mutex() {
    Outcome out{10, "training mutual exclusion with live predictions"};
    SceneConfig scene = load_scene_config(kConfigDir / "outdoor_stationary.json");
    scene.duration_s = 120.0;
    scene.tx_assignments = {{{0.0, 120.0, "A"}}, {{0.0, 120.0, "B"}}};
    const SceneConfig resolved = resolve_with_seed(scene, 3);

    EngineConfig cfg = scenario_engine();
    cfg.queue_capacity = 150;
    cfg.retrain_min_interval_s = 5.0;
    cfg.n_stas = 2;
    cfg.pipeline.frame_rate = resolved.frame_rate;

    OnlineEngine engine(cfg, MethodKind::RpIm, TrainerMode::Background);
    engine.set_train_hook([](int) { std::this_thread::sleep_for(std::chrono::milliseconds(10)); });
    SceneSimulator sim(resolved);
    SceneEvent event;
    while (sim.next(event)) {
        engine.ingest(event);
        if (event.is_frame()) std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
    engine.finish();

    const auto& log = engine.training_log();
    if (log.size() < 4) {
        out.detail = "too few training jobs recorded (" + std::to_string(log.size()) + ")";
        return out;
    }
    for (std::size_t i = 0; i + 1 < log.size(); ++i) {
        if (log[i + 1].wall_start_s < log[i].wall_end_s - 1e-9) {
            out.detail = "training intervals overlap";
            return out;
        }
    }
    long during = 0;
    bool stale_ok = true;
    for (const PredictionRecord& rec : engine.all_predictions()) {
        for (const TrainingEvent& job : log) {
            if (rec.sta_id != job.sta_id) continue;
            if (rec.wall_s > job.wall_start_s && rec.wall_s < job.wall_end_s) {
                ++during;
                stale_ok = stale_ok && rec.model_version < job.model_version;
            }
        }
    }
    out.pass = during > 0 && stale_ok;
    out.detail = std::to_string(log.size()) + " jobs, zero overlaps, " + std::to_string(during) +
                 " predictions issued during jobs on the prior model";
    return out;
}

Outcome criterion_determinism(const fs::path& out_dir) {
    Outcome out{11, "byte-identical evaluate runs from one manifest"};
    RunManifest manifest;
    manifest.command = "evaluate";
    manifest.scene_path = kConfigDir / "outdoor_mobile.json";
    manifest.methods = {"rp-im", "native"};
    manifest.seeds = {1};
    manifest.jobs = 2;

    // The engine profile is pinned into a file so both runs share it.
    EngineConfig engine = scenario_engine();
    const fs::path engine_path = out_dir / "engine_acceptance.json";
    std::ofstream(engine_path) << engine_config_to_json(engine) << "\n";
    manifest.engine_path = engine_path;

    const fs::path dir_a = out_dir / "determinism_a";
    const fs::path dir_b = out_dir / "determinism_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    manifest.out_dir = dir_a;
    if (cmd_evaluate(manifest) != kExitOk) {
        out.detail = "first evaluate run failed";
        return out;
    }
    manifest.out_dir = dir_b;
    if (cmd_evaluate(manifest) != kExitOk) {
        out.detail = "second evaluate run failed";
        return out;
    }

    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    };
    long files = 0;
    for (const char* rel : {"error_table.csv", "error_table.txt", "error_cells.csv",
                            "rp-im/seed_1/predictions.csv", "native/seed_1/predictions.csv",
                            "rp-im/seed_1/training.csv", "power_seed1.csv"}) {
        const std::string a = slurp(dir_a / rel);
        if (a.empty() || a != slurp(dir_b / rel)) {
            out.detail = std::string("mismatch or empty file: ") + rel;
            return out;
        }
        ++files;
    }
    out.pass = true;
    out.detail = std::to_string(files) + " output files byte-identical across runs";
    return out;
}

}  // namespace

int main() {
    const auto started = std::chrono::steady_clock::now();
    const fs::path out_dir = "acceptance_out";
    fs::remove_all(out_dir);
    fs::create_directories(out_dir);

    std::vector<Outcome> outcomes;
    std::ofstream report_file(out_dir / "report.txt");
    const auto report = [&](Outcome o) {
        std::ostringstream line;
        line << "criterion " << o.id << " [" << o.name << "]: " << (o.pass ? "PASS" : "FAIL")
             << " - " << o.detail << "\n";
        std::cout << line.str() << std::flush;
        report_file << line.str() << std::flush;
        outcomes.push_back(std::move(o));
    };

    try {
        report(criterion_feature_dimensions());
        report(criterion_gbrt_oracle());
        report(criterion_boosting_monotonic());
        report(criterion_queue_semantics());

        // Shared scenario grid for criteria 5-8.
        RunGrid grid;
        for (std::uint64_t seed : kSeeds) {
            for (MethodKind m : {MethodKind::RpIm, MethodKind::Im, MethodKind::Native})
                grid.request({"outdoor_stationary", m, std::nullopt, false, seed});
            for (MethodKind m :
                 {MethodKind::RpIm, MethodKind::Im, MethodKind::Rp, MethodKind::Native})
                grid.request({"outdoor_mobile", m, std::nullopt, false, seed});
            grid.request({"outdoor_mobile", MethodKind::RpIm, std::size_t{150}, false, seed});
            grid.request({"outdoor_mobile", MethodKind::RpIm, std::nullopt, true, seed});
        }
        grid.execute();

        report(criterion_ml_beats_native(grid));
        report(criterion_adaptation_dip(grid));
        report(criterion_feature_ordering(grid));
        report(criterion_queue_ablation(grid));
        report(criterion_latency(out_dir));
        report(criterion_training_mutex());
        report(criterion_determinism(out_dir));
    } catch (const std::exception& e) {
        std::cout << "acceptance suite aborted: " << e.what() << "\n";
        return 1;
    }

    const double minutes =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() / 60.0;
    long passed = 0;
    for (const Outcome& o : outcomes) passed += o.pass ? 1 : 0;
    std::ostringstream summary;
    summary << passed << "/" << outcomes.size() << " criteria passed in " << fmt(minutes) << " min\n";
    std::cout << summary.str();
    report_file << summary.str();
    return passed == static_cast<long>(outcomes.size()) ? 0 : 1;
}
