#include "lqp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "lqp/csv.hpp"

namespace lqp {

RunResult run_scenario(const SceneConfig& scene, EngineConfig engine, MethodKind method,
                       std::uint64_t seed, TrainerMode mode) {
    const SceneConfig resolved = resolve_with_seed(scene, seed);
    validate(resolved);
    engine = resolve_queue(std::move(engine), resolved.frame_rate);
    engine.n_stas = resolved.tx_count();
    engine.pipeline.frame_rate = resolved.frame_rate;
    if (resolved.image_width < engine.pipeline.reduced_side ||
        resolved.image_height < engine.pipeline.reduced_side)
        throw std::invalid_argument("scene frames are smaller than the reduced image side");

    OnlineEngine online(engine, method, mode);
    SceneSimulator sim(resolved);
    SceneEvent event;
    while (sim.next(event)) online.ingest(event);
    online.finish();

    RunResult result;
    result.predictions = online.joined_predictions();
    result.trainings = online.training_log();
    return result;
}

std::optional<double> ErrorTable::cell(double window_start, const std::string& column) const {
    for (std::size_t r = 0; r < windows.size(); ++r) {
        if (std::abs(windows[r].first - window_start) < 1e-9) {
            for (std::size_t c = 0; c < columns.size(); ++c)
                if (columns[c] == column) return cells[r][c];
        }
    }
    return std::nullopt;
}

ErrorTable windowed_rmse(std::span<const PredictionRecord> records, double window_s, double start_s) {
    if (records.empty()) throw std::invalid_argument("windowed_rmse: empty prediction log");
    if (!(window_s > 0)) throw std::invalid_argument("windowed_rmse: window length must be > 0");

    double t_max = start_s;
    for (const PredictionRecord& rec : records) t_max = std::max(t_max, rec.t);
    const auto n_windows = static_cast<std::size_t>(std::max(
        1L, static_cast<long>(std::ceil((t_max - start_s) / window_s - 1e-9))));

    // Column order follows the canonical method order.
    std::vector<MethodKind> present;
    for (MethodKind m : {MethodKind::Native, MethodKind::RpIm, MethodKind::Im, MethodKind::Rp}) {
        if (std::any_of(records.begin(), records.end(),
                        [m](const PredictionRecord& r) { return r.method == m; }))
            present.push_back(m);
    }

    ErrorTable table;
    table.window_s = window_s;
    for (std::size_t w = 0; w < n_windows; ++w)
        table.windows.emplace_back(start_s + window_s * static_cast<double>(w),
                                   start_s + window_s * static_cast<double>(w + 1));
    for (MethodKind m : present) table.columns.emplace_back(method_name(m));
    table.cells.assign(n_windows, std::vector<std::optional<double>>(present.size()));

    std::vector<std::vector<double>> sq_sum(n_windows, std::vector<double>(present.size(), 0.0));
    std::vector<std::vector<long>> count(n_windows, std::vector<long>(present.size(), 0));
    for (const PredictionRecord& rec : records) {
        if (rec.t < start_s || !rec.joined()) continue;
        const auto w = static_cast<std::size_t>((rec.t - start_s) / window_s);
        if (w >= n_windows) continue;
        const auto c = static_cast<std::size_t>(
            std::find(present.begin(), present.end(), rec.method) - present.begin());
        const double d = rec.predicted_dbm - rec.measured_dbm;
        sq_sum[w][c] += d * d;
        ++count[w][c];
    }
    for (std::size_t w = 0; w < n_windows; ++w)
        for (std::size_t c = 0; c < present.size(); ++c)
            if (count[w][c] > 0)
                table.cells[w][c] = std::sqrt(sq_sum[w][c] / static_cast<double>(count[w][c]));
    return table;
}

ErrorTable average_tables(std::span<const ErrorTable> tables) {
    if (tables.empty()) throw std::invalid_argument("average_tables: no tables");
    ErrorTable out = tables.front();
    for (std::size_t r = 0; r < out.windows.size(); ++r) {
        for (std::size_t c = 0; c < out.columns.size(); ++c) {
            double acc = 0.0;
            bool all = true;
            for (const ErrorTable& t : tables) {
                if (t.windows.size() != out.windows.size() || t.columns != out.columns)
                    throw std::invalid_argument("average_tables: shape mismatch");
                if (t.cells[r][c])
                    acc += *t.cells[r][c];
                else
                    all = false;
            }
            out.cells[r][c] = all ? std::optional<double>(acc / static_cast<double>(tables.size()))
                                  : std::nullopt;
        }
    }
    return out;
}

ErrorTable merge_columns(std::span<const ErrorTable> tables, std::span<const std::string> labels) {
    if (tables.empty() || tables.size() != labels.size())
        throw std::invalid_argument("merge_columns: label/table mismatch");
    ErrorTable out;
    out.window_s = tables.front().window_s;
    out.windows = tables.front().windows;
    for (std::size_t k = 0; k < tables.size(); ++k) {
        if (tables[k].windows != out.windows)
            throw std::invalid_argument("merge_columns: window mismatch");
        for (std::size_t c = 0; c < tables[k].columns.size(); ++c) {
            out.columns.push_back(tables[k].columns.size() == 1
                                      ? labels[k]
                                      : labels[k] + ":" + tables[k].columns[c]);
        }
    }
    out.cells.assign(out.windows.size(), {});
    for (std::size_t r = 0; r < out.windows.size(); ++r)
        for (const ErrorTable& t : tables)
            for (std::size_t c = 0; c < t.columns.size(); ++c) out.cells[r].push_back(t.cells[r][c]);
    return out;
}

namespace {
std::string cell_text(const std::optional<double>& v, bool fixed) {
    if (!v) return fixed ? "--" : "";
    if (!fixed) return format_double(*v);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", *v);
    return buf;
}
}  // namespace

void write_error_table_csv(const std::filesystem::path& path, const ErrorTable& table) {
    auto out = open_output(path);
    out << "window_start,window_end";
    for (const std::string& c : table.columns) out << ',' << c;
    out << "\n";
    for (std::size_t r = 0; r < table.windows.size(); ++r) {
        out << format_double(table.windows[r].first) << ',' << format_double(table.windows[r].second);
        for (std::size_t c = 0; c < table.columns.size(); ++c)
            out << ',' << cell_text(table.cells[r][c], false);
        out << "\n";
    }
}

std::string format_error_table(const ErrorTable& table) {
    std::vector<std::vector<std::string>> grid;
    std::vector<std::string> header{"time"};
    for (const std::string& c : table.columns) header.push_back(c);
    grid.push_back(header);
    for (std::size_t r = 0; r < table.windows.size(); ++r) {
        std::vector<std::string> row;
        char label[64];
        std::snprintf(label, sizeof(label), "%g s - %g s", table.windows[r].first,
                      table.windows[r].second);
        row.emplace_back(label);
        for (std::size_t c = 0; c < table.columns.size(); ++c)
            row.push_back(cell_text(table.cells[r][c], true));
        grid.push_back(row);
    }
    std::vector<std::size_t> width(grid[0].size(), 0);
    for (const auto& row : grid)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream os;
    for (const auto& row : grid) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            os << row[c];
            if (c + 1 < row.size()) os << std::string(width[c] - row[c].size() + 2, ' ');
        }
        os << "\n";
    }
    return os.str();
}

void write_error_table_txt(const std::filesystem::path& path, const ErrorTable& table) {
    auto out = open_output(path);
    out << format_error_table(table);
}

AblationResult ablate_queue(const SceneConfig& scene, const EngineConfig& engine,
                            std::span<const std::optional<double>> tq_seconds,
                            std::span<const std::uint64_t> seeds, MethodKind method) {
    AblationResult result;
    for (const auto& tq : tq_seconds) {
        EngineConfig cell = engine;
        cell.queue_tq_s.reset();
        if (tq) {
            cell.queue_capacity = static_cast<std::size_t>(std::llround(*tq * scene.frame_rate));
            result.labels.push_back(format_double(*tq));
        } else {
            cell.queue_capacity.reset();
            result.labels.emplace_back("inf");
        }
        std::vector<ErrorTable> per_seed;
        for (std::uint64_t seed : seeds) {
            const RunResult run = run_scenario(scene, cell, method, seed);
            per_seed.push_back(windowed_rmse(run.predictions));
        }
        result.tables.push_back(average_tables(per_seed));
    }
    return result;
}

TimingReport measure_timing(const SceneConfig& scene, const EngineConfig& engine, long n_ticks,
                            MethodKind method) {
    if (n_ticks < 1) throw std::invalid_argument("measure_timing: n_ticks must be >= 1");
    using clock = std::chrono::steady_clock;

    const SceneConfig resolved = resolve_with_seed(scene, scene.rng_seed);
    validate(resolved);
    EngineConfig cfg = resolve_queue(engine, resolved.frame_rate);
    cfg.n_stas = resolved.tx_count();
    cfg.pipeline.frame_rate = resolved.frame_rate;

    OnlineEngine online(cfg, method);
    std::vector<OnlineEngine::TickTiming> ticks;
    online.set_timing_sink(&ticks);

    SceneSimulator sim(resolved);
    SceneEvent event;
    TimingReport report;
    std::vector<double> load_ms;
    std::size_t measured_from = 0;
    bool warmed = false;

    while (report.ticks < n_ticks) {
        // Producing the frame stands in for pulling it off the camera.
        const auto t0 = clock::now();
        const bool has_event = sim.next(event);
        const double produce_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
        if (!has_event) break;
        if (!event.is_frame()) {
            online.ingest(event);
            continue;
        }
        online.ingest(std::get<Frame>(event.payload));
        if (!warmed) {
            bool all = true;
            for (int s = 0; s < cfg.n_stas; ++s) all = all && online.model(s) != nullptr;
            if (all) {
                warmed = true;
                measured_from = ticks.size();
            }
            continue;
        }
        load_ms.push_back(produce_ms);
        ++report.ticks;
    }
    if (!warmed || report.ticks < n_ticks)
        throw std::runtime_error("measure_timing: scene too short for the requested tick count");

    double reduce = 0.0, combine = 0.0, predict = 0.0, load = 0.0;
    for (std::size_t i = 0; i < load_ms.size(); ++i) {
        load += load_ms[i];
        reduce += ticks[measured_from + i].reduce_ms;
        combine += ticks[measured_from + i].combine_ms;
        predict += ticks[measured_from + i].predict_ms;
    }
    const auto n = static_cast<double>(report.ticks);
    report.image_load_ms = load / n;
    report.image_reduction_ms = reduce / n;
    report.data_combination_ms = combine / n;
    report.ml_prediction_ms = predict / n;
    report.total_ms = report.image_load_ms + report.image_reduction_ms + report.data_combination_ms +
                      report.ml_prediction_ms;
    return report;
}

std::string format_timing_report(const TimingReport& report) {
    std::ostringstream os;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%-18s %10s\n", "step", "mean (ms)");
    os << buf;
    const std::pair<const char*, double> rows[] = {{"ml_prediction", report.ml_prediction_ms},
                                                   {"data_combination", report.data_combination_ms},
                                                   {"image_reduction", report.image_reduction_ms},
                                                   {"image_load", report.image_load_ms},
                                                   {"total", report.total_ms}};
    for (const auto& [name, value] : rows) {
        std::snprintf(buf, sizeof(buf), "%-18s %10.3f\n", name, value);
        os << buf;
    }
    std::snprintf(buf, sizeof(buf), "ticks measured: %ld\n", report.ticks);
    os << buf;
    return os.str();
}

void write_timing_report(const std::filesystem::path& path, const TimingReport& report) {
    auto out = open_output(path);
    out << format_timing_report(report);
}

}  // namespace lqp
