#include "lqp/cli.hpp"

#include <atomic>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <thread>

#include "lqp/config.hpp"
#include "lqp/csv.hpp"
#include "lqp/harness.hpp"
#include "lqp/svg.hpp"

namespace lqp {

namespace {

namespace fs = std::filesystem;

struct OverwriteRefused : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void ensure_out_dir(const fs::path& dir, bool overwrite) {
    if (fs::exists(dir) && !fs::is_empty(dir) && !overwrite)
        throw OverwriteRefused("output directory " + dir.string() +
                               " is not empty; pass --overwrite to replace its contents");
    fs::create_directories(dir);
}

void require_file(const fs::path& path, const char* what) {
    if (!fs::exists(path)) throw ConfigError(std::string(what) + " file not found: " + path.string());
}

nlohmann::json manifest_json(const RunManifest& manifest) {
    nlohmann::json j;
    j["command"] = manifest.command;
    if (!manifest.scene_path.empty()) j["scene"] = manifest.scene_path.string();
    if (!manifest.engine_path.empty()) j["engine"] = manifest.engine_path.string();
    if (!manifest.log_path.empty()) j["log"] = manifest.log_path.string();
    j["methods"] = manifest.methods;
    j["seeds"] = manifest.seeds;
    if (!manifest.tq_values.empty()) j["tq"] = manifest.tq_values;
    if (manifest.command == "timing") j["ticks"] = manifest.ticks;
    return j;
}

void write_manifest(const RunManifest& manifest, const fs::path& dir,
                    const std::optional<SceneConfig>& scene, const std::optional<EngineConfig>& engine) {
    nlohmann::json j = manifest_json(manifest);
    if (scene) j["resolved_scene"] = nlohmann::json::parse(scene_config_to_json(*scene));
    if (engine) j["resolved_engine"] = nlohmann::json::parse(engine_config_to_json(*engine));
    auto out = open_output(dir / "manifest.json");
    out << j.dump(2) << "\n";
}

EngineConfig load_engine_or_default(const RunManifest& manifest) {
    if (manifest.engine_path.empty()) return EngineConfig{};
    require_file(manifest.engine_path, "engine config");
    return load_engine_config(manifest.engine_path);
}

void write_power_csv(const fs::path& path, std::span<const PowerSample> trace) {
    auto out = open_output(path);
    out << "t,tx_id,power_dbm\n";
    for (const PowerSample& s : trace)
        out << format_double(s.t) << ',' << s.tx_id << ',' << format_double(s.power_dbm) << "\n";
}

void write_cell_plots(const fs::path& dir, const RunResult& run, const SceneConfig& scene,
                      double horizon_s) {
    for (int sta = 0; sta < scene.tx_count(); ++sta) {
        PlotSeries measured{"measured", "black", false, {}};
        PlotSeries predicted{"predicted", "crimson", true, {}};
        for (const PredictionRecord& rec : run.predictions) {
            if (rec.sta_id != sta) continue;
            measured.points.emplace_back(rec.t + horizon_s, rec.measured_dbm);
            predicted.points.emplace_back(rec.t + horizon_s, rec.predicted_dbm);
        }
        if (measured.points.empty()) continue;
        write_timeseries_svg(dir / ("timeseries_tx" + std::to_string(sta) + ".svg"),
                             "Tx" + std::to_string(sta) + " received power", "time (s)", "power (dBm)",
                             {measured, predicted});
    }
}

struct Cell {
    MethodKind method;
    std::uint64_t seed;
    std::optional<std::optional<double>> tq_override;  // outer: present, inner: inf when empty
    fs::path dir;
};

std::optional<double> parse_tq(const std::string& text) {
    if (text == "inf" || text == "Inf" || text == "INF") return std::nullopt;
    return parse_double(text);
}

// Runs cells on a small pool; any failure aborts the command with the cell
// named in the message.
std::vector<ErrorTable> run_cells(const std::vector<Cell>& cells, const SceneConfig& scene,
                                  const EngineConfig& engine, int jobs) {
    std::vector<std::optional<ErrorTable>> tables(cells.size());
    std::atomic<std::size_t> cursor{0};
    std::mutex err_mtx;
    std::vector<std::string> errors;

    const auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= cells.size()) return;
            const Cell& cell = cells[i];
            try {
                EngineConfig cfg = engine;
                if (cell.tq_override) {
                    cfg.queue_tq_s.reset();
                    if (*cell.tq_override)
                        cfg.queue_tq_s = **cell.tq_override;
                    else
                        cfg.queue_capacity.reset();
                }
                const RunResult run = run_scenario(scene, cfg, cell.method, cell.seed);
                fs::create_directories(cell.dir);
                write_predictions_csv(cell.dir / "predictions.csv", run.predictions);
                write_training_csv(cell.dir / "training.csv", run.trainings);
                write_cell_plots(cell.dir, run, scene, engine.pipeline.horizon_s);
                tables[i] = windowed_rmse(run.predictions);
            } catch (const std::exception& e) {
                std::lock_guard lock(err_mtx);
                errors.push_back("cell method=" + std::string(method_name(cell.method)) +
                                 " seed=" + std::to_string(cell.seed) + ": " + e.what());
            }
        }
    };

    std::vector<std::thread> pool;
    const int n_jobs = std::clamp(jobs, 1, static_cast<int>(cells.size()));
    pool.reserve(static_cast<std::size_t>(n_jobs));
    for (int j = 0; j < n_jobs; ++j) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    if (!errors.empty()) throw std::runtime_error(errors.front());
    std::vector<ErrorTable> out;
    out.reserve(tables.size());
    for (auto& t : tables) out.push_back(std::move(*t));
    return out;
}

int guard(const char* command, int (*body)(const RunManifest&), const RunManifest& manifest) {
    try {
        return body(manifest);
    } catch (const OverwriteRefused& e) {
        std::cerr << command << ": " << e.what() << "\n";
        return kExitWouldClobber;
    } catch (const ConfigError& e) {
        std::cerr << command << ": " << e.what() << "\n";
        return kExitBadInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << command << ": " << e.what() << "\n";
        return kExitBadInput;
    } catch (const std::exception& e) {
        std::cerr << command << ": " << e.what() << "\n";
        return kExitInternal;
    }
}

int simulate_body(const RunManifest& manifest) {
    require_file(manifest.scene_path, "scene config");
    const SceneConfig base = load_scene_config(manifest.scene_path);
    const SceneConfig scene = resolve_with_seed(base, manifest.seeds.front());
    validate(scene);
    ensure_out_dir(manifest.out_dir, manifest.overwrite);
    write_manifest(manifest, manifest.out_dir, scene, std::nullopt);

    write_power_csv(manifest.out_dir / "power.csv", generate_power_trace(scene));
    if (manifest.dump_frames) {
        auto out = open_output(manifest.out_dir / "frames.bin");
        write_frame_stream_header(out, scene.image_width, scene.image_height);
        SceneSimulator sim(scene);
        SceneEvent event;
        while (sim.next(event)) {
            if (event.is_frame()) append_frame(out, std::get<Frame>(event.payload));
        }
    }
    return kExitOk;
}

int evaluate_body(const RunManifest& manifest) {
    require_file(manifest.scene_path, "scene config");
    const SceneConfig scene = load_scene_config(manifest.scene_path);
    EngineConfig engine = load_engine_or_default(manifest);
    if (!manifest.tq_values.empty()) {
        if (manifest.tq_values.size() != 1)
            throw std::invalid_argument("evaluate takes a single --tq; use ablate for sweeps");
        engine.queue_tq_s.reset();
        engine.queue_capacity.reset();
        if (auto tq = parse_tq(manifest.tq_values.front())) engine.queue_tq_s = *tq;
    }

    std::vector<MethodKind> methods;
    for (const std::string& name : manifest.methods) {
        const MethodKind m = parse_method(name);
        if (std::find(methods.begin(), methods.end(), m) == methods.end()) methods.push_back(m);
    }

    ensure_out_dir(manifest.out_dir, manifest.overwrite);
    write_manifest(manifest, manifest.out_dir, scene, engine);
    for (std::uint64_t seed : manifest.seeds) {
        write_power_csv(manifest.out_dir / ("power_seed" + std::to_string(seed) + ".csv"),
                        generate_power_trace(resolve_with_seed(scene, seed)));
    }

    std::vector<Cell> cells;
    for (MethodKind m : methods)
        for (std::uint64_t seed : manifest.seeds)
            cells.push_back(Cell{m, seed, std::nullopt,
                                 manifest.out_dir / std::string(method_name(m)) /
                                     ("seed_" + std::to_string(seed))});
    const std::vector<ErrorTable> tables = run_cells(cells, scene, engine, manifest.jobs);

    // Long form: one row per (method, seed, window).
    {
        auto out = open_output(manifest.out_dir / "error_cells.csv");
        out << "method,seed,window_start,window_end,rmse_db\n";
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const ErrorTable& t = tables[i];
            for (std::size_t r = 0; r < t.windows.size(); ++r) {
                out << method_name(cells[i].method) << ',' << cells[i].seed << ','
                    << format_double(t.windows[r].first) << ',' << format_double(t.windows[r].second)
                    << ',' << (t.cells[r][0] ? format_double(*t.cells[r][0]) : "") << "\n";
            }
        }
    }

    // Seed-averaged wide table, one column per method.
    std::vector<ErrorTable> averaged;
    std::vector<std::string> labels;
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        std::vector<ErrorTable> per_seed;
        for (std::size_t si = 0; si < manifest.seeds.size(); ++si)
            per_seed.push_back(tables[mi * manifest.seeds.size() + si]);
        averaged.push_back(average_tables(per_seed));
        labels.emplace_back(method_name(methods[mi]));
    }
    const ErrorTable merged = merge_columns(averaged, labels);
    write_error_table_csv(manifest.out_dir / "error_table.csv", merged);
    write_error_table_txt(manifest.out_dir / "error_table.txt", merged);
    std::cout << format_error_table(merged);
    return kExitOk;
}

int ablate_body(const RunManifest& manifest) {
    require_file(manifest.scene_path, "scene config");
    const SceneConfig scene = load_scene_config(manifest.scene_path);
    const EngineConfig engine = load_engine_or_default(manifest);
    if (manifest.tq_values.empty()) throw std::invalid_argument("ablate requires --tq (e.g. 15,50,inf)");
    const MethodKind method = parse_method(manifest.methods.front());

    ensure_out_dir(manifest.out_dir, manifest.overwrite);
    write_manifest(manifest, manifest.out_dir, scene, engine);

    std::vector<Cell> cells;
    std::vector<std::string> labels;
    for (const std::string& text : manifest.tq_values) {
        const std::optional<double> tq = parse_tq(text);
        const std::string label = tq ? format_double(*tq) : "inf";
        labels.push_back(label);
        for (std::uint64_t seed : manifest.seeds)
            cells.push_back(Cell{method, seed, tq,
                                 manifest.out_dir / ("tq_" + label) /
                                     ("seed_" + std::to_string(seed))});
    }
    const std::vector<ErrorTable> tables = run_cells(cells, scene, engine, manifest.jobs);

    std::vector<ErrorTable> averaged;
    for (std::size_t qi = 0; qi < labels.size(); ++qi) {
        std::vector<ErrorTable> per_seed;
        for (std::size_t si = 0; si < manifest.seeds.size(); ++si)
            per_seed.push_back(tables[qi * manifest.seeds.size() + si]);
        averaged.push_back(average_tables(per_seed));
    }
    std::vector<std::string> column_labels;
    for (const std::string& l : labels) column_labels.push_back("tq_" + l);
    const ErrorTable merged = merge_columns(averaged, column_labels);
    write_error_table_csv(manifest.out_dir / "ablation_table.csv", merged);
    write_error_table_txt(manifest.out_dir / "ablation_table.txt", merged);
    std::cout << format_error_table(merged);
    return kExitOk;
}

int timing_body(const RunManifest& manifest) {
    if (manifest.ticks < 1) throw std::invalid_argument("--ticks must be >= 1");
    require_file(manifest.scene_path, "scene config");
    const SceneConfig scene = load_scene_config(manifest.scene_path);
    const EngineConfig engine = load_engine_or_default(manifest);
    const MethodKind method = parse_method(manifest.methods.front());

    ensure_out_dir(manifest.out_dir, manifest.overwrite);
    write_manifest(manifest, manifest.out_dir, scene, engine);

    const TimingReport report = measure_timing(scene, engine, manifest.ticks, method);
    write_timing_report(manifest.out_dir / "timing.txt", report);
    std::cout << format_timing_report(report);
    return kExitOk;
}

int replay_body(const RunManifest& manifest) {
    require_file(manifest.log_path, "prediction log");
    const auto records = read_predictions_csv(manifest.log_path);
    const ErrorTable table = windowed_rmse(records);
    ensure_out_dir(manifest.out_dir, manifest.overwrite);
    write_manifest(manifest, manifest.out_dir, std::nullopt, std::nullopt);
    write_error_table_csv(manifest.out_dir / "error_table.csv", table);
    write_error_table_txt(manifest.out_dir / "error_table.txt", table);
    std::cout << format_error_table(table);
    return kExitOk;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    for (const std::string& part : split_csv_line(text))
        seeds.push_back(static_cast<std::uint64_t>(parse_long(part)));
    if (seeds.empty()) throw std::invalid_argument("empty seed list");
    return seeds;
}

std::vector<std::string> parse_name_list(const std::string& text) {
    std::vector<std::string> names = split_csv_line(text);
    if (names.empty()) throw std::invalid_argument("empty list");
    return names;
}

int cmd_simulate(const RunManifest& manifest) { return guard("simulate", simulate_body, manifest); }
int cmd_evaluate(const RunManifest& manifest) { return guard("evaluate", evaluate_body, manifest); }
int cmd_ablate(const RunManifest& manifest) { return guard("ablate", ablate_body, manifest); }
int cmd_timing(const RunManifest& manifest) { return guard("timing", timing_body, manifest); }
int cmd_replay(const RunManifest& manifest) { return guard("replay", replay_body, manifest); }

}  // namespace lqp
