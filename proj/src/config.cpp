#include "lqp/config.hpp"

#include <fstream>
#include <json.hpp>

namespace lqp {

namespace {

using nlohmann::json;

json parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

struct Cursor {
    const json& node;
    std::string path;
    std::string file;

    Cursor at(const std::string& key) const {
        if (!node.is_object() || !node.contains(key))
            throw ConfigError(file + ": missing field " + path + "." + key);
        return {node.at(key), path + "." + key, file};
    }
    bool has(const std::string& key) const { return node.is_object() && node.contains(key); }

    double number() const {
        if (!node.is_number()) throw ConfigError(file + ": " + path + " must be a number");
        return node.get<double>();
    }
    long integer() const {
        if (!node.is_number_integer()) throw ConfigError(file + ": " + path + " must be an integer");
        return node.get<long>();
    }
    std::string text() const {
        if (!node.is_string()) throw ConfigError(file + ": " + path + " must be a string");
        return node.get<std::string>();
    }
    const json& array() const {
        if (!node.is_array()) throw ConfigError(file + ": " + path + " must be an array");
        return node;
    }
    Cursor item(std::size_t i) const {
        return {node.at(i), path + "[" + std::to_string(i) + "]", file};
    }
};

Eigen::Vector2d read_vec2(const Cursor& c) {
    const json& a = c.array();
    if (a.size() != 2 || !a[0].is_number() || !a[1].is_number())
        throw ConfigError(c.file + ": " + c.path + " must be [x, y]");
    return {a[0].get<double>(), a[1].get<double>()};
}

}  // namespace

SceneConfig load_scene_config(const std::filesystem::path& path) {
    const json root_json = parse_file(path);
    const Cursor root{root_json, "$", path.string()};

    SceneConfig config;
    config.duration_s = root.at("duration_s").number();
    config.frame_rate = root.at("frame_rate").number();
    config.image_width = static_cast<int>(root.at("image_width").integer());
    config.image_height = static_cast<int>(root.at("image_height").integer());
    config.noise_stddev = root.at("noise_stddev_db").number();
    if (root.has("rng_seed")) config.rng_seed = static_cast<std::uint64_t>(root.at("rng_seed").integer());
    config.rx_position = read_vec2(root.at("rx_position"));

    const Cursor points = root.at("tx_points");
    for (std::size_t i = 0; i < points.array().size(); ++i) {
        const Cursor p = points.item(i);
        config.tx_points.emplace_back(p.at("id").text(), read_vec2(p.at("position")));
    }

    const Cursor baseline = root.at("baseline_power_dbm");
    if (!baseline.node.is_object())
        throw ConfigError(path.string() + ": $.baseline_power_dbm must be an object");
    for (const auto& [key, value] : baseline.node.items()) {
        if (!value.is_number())
            throw ConfigError(path.string() + ": $.baseline_power_dbm." + key + " must be a number");
        config.baseline_power_dbm[key] = value.get<double>();
    }

    const Cursor obstacle = root.at("obstacle");
    config.obstacle.width_m = obstacle.at("width_m").number();
    config.obstacle.height_m = obstacle.at("height_m").number();
    config.obstacle.attenuation_db = obstacle.at("attenuation_db").number();
    config.obstacle.track_y = obstacle.at("track_y").number();
    if (obstacle.has("sweep")) {
        const Cursor sweep = obstacle.at("sweep");
        config.obstacle.sweep = SweepSpec{sweep.at("x_min").number(), sweep.at("x_max").number(),
                                          sweep.at("speed_min").number(), sweep.at("speed_max").number()};
    }
    if (obstacle.has("waypoints")) {
        const Cursor wp = obstacle.at("waypoints");
        for (std::size_t i = 0; i < wp.array().size(); ++i) {
            const json& pair = wp.item(i).array();
            if (pair.size() != 2)
                throw ConfigError(path.string() + ": " + wp.path + " entries must be [t, x]");
            config.obstacle.trajectory.push_back({pair[0].get<double>(), pair[1].get<double>()});
        }
    }
    if (config.obstacle.sweep && !config.obstacle.trajectory.empty())
        throw ConfigError(path.string() + ": $.obstacle: give either sweep or waypoints, not both");

    const Cursor schedules = root.at("tx_assignments");
    for (std::size_t tx = 0; tx < schedules.array().size(); ++tx) {
        const Cursor sched = schedules.item(tx);
        std::vector<TxAssignment> intervals;
        for (std::size_t k = 0; k < sched.array().size(); ++k) {
            const Cursor iv = sched.item(k);
            intervals.push_back(
                {iv.at("from_s").number(), iv.at("to_s").number(), iv.at("point").text()});
        }
        config.tx_assignments.push_back(std::move(intervals));
    }

    try {
        // Sweep-based configs resolve later; validation of the trajectory
        // happens on a resolved copy then.
        if (config.obstacle.sweep) {
            validate(resolve_with_seed(config, config.rng_seed));
        } else {
            validate(config);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config;
}

EngineConfig load_engine_config(const std::filesystem::path& path) {
    const json root_json = parse_file(path);
    const Cursor root{root_json, "$", path.string()};

    EngineConfig config;
    const Cursor queue = root.at("queue");
    if (queue.has("n_q")) {
        config.queue_capacity = static_cast<std::size_t>(queue.at("n_q").integer());
    } else {
        const Cursor tq = queue.at("t_q_s");
        if (tq.node.is_string() && tq.text() == "inf") {
            config.queue_capacity.reset();
        } else {
            // N_q = T_q * F; the frame rate comes from the scene at run time,
            // so keep the seconds and defer. Stored via a sentinel below.
            config.queue_capacity = std::nullopt;
            config.queue_tq_s = tq.number();
        }
    }
    config.retrain_min_interval_s = root.at("retrain_min_interval_s").number();
    config.min_train_samples = static_cast<int>(root.at("min_train_samples").integer());

    const Cursor pipeline = root.at("pipeline");
    config.pipeline.reduced_side = static_cast<int>(pipeline.at("reduced_side").integer());
    config.pipeline.images_per_feature = static_cast<int>(pipeline.at("images_per_feature").integer());
    config.pipeline.image_interval_s = pipeline.at("image_interval_s").number();
    config.pipeline.power_values = static_cast<int>(pipeline.at("power_values").integer());
    config.pipeline.horizon_s = pipeline.at("horizon_s").number();

    const Cursor gbrt = root.at("gbrt");
    config.gbrt.num_leaves = static_cast<int>(gbrt.at("num_leaves").integer());
    config.gbrt.max_depth = static_cast<int>(gbrt.at("max_depth").integer());
    config.gbrt.num_rounds = static_cast<int>(gbrt.at("num_rounds").integer());
    config.gbrt.early_stop_rounds = static_cast<int>(gbrt.at("early_stop_rounds").integer());
    config.gbrt.learning_rate = gbrt.at("learning_rate").number();
    config.gbrt.min_samples_leaf = static_cast<int>(gbrt.at("min_samples_leaf").integer());
    config.gbrt.split_fraction = gbrt.at("split_fraction").number();
    if (gbrt.has("rng_seed")) config.gbrt.rng_seed = static_cast<std::uint64_t>(gbrt.at("rng_seed").integer());

    try {
        validate(config.gbrt);
        validate(config.pipeline);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config;
}

std::string scene_config_to_json(const SceneConfig& config) {
    json j;
    j["duration_s"] = config.duration_s;
    j["frame_rate"] = config.frame_rate;
    j["image_width"] = config.image_width;
    j["image_height"] = config.image_height;
    j["noise_stddev_db"] = config.noise_stddev;
    j["rng_seed"] = config.rng_seed;
    j["rx_position"] = {config.rx_position.x(), config.rx_position.y()};
    j["tx_points"] = json::array();
    for (const auto& [id, pos] : config.tx_points)
        j["tx_points"].push_back({{"id", id}, {"position", {pos.x(), pos.y()}}});
    j["baseline_power_dbm"] = config.baseline_power_dbm;
    json obstacle;
    obstacle["width_m"] = config.obstacle.width_m;
    obstacle["height_m"] = config.obstacle.height_m;
    obstacle["attenuation_db"] = config.obstacle.attenuation_db;
    obstacle["track_y"] = config.obstacle.track_y;
    if (config.obstacle.sweep) {
        obstacle["sweep"] = {{"x_min", config.obstacle.sweep->x_min},
                             {"x_max", config.obstacle.sweep->x_max},
                             {"speed_min", config.obstacle.sweep->speed_min},
                             {"speed_max", config.obstacle.sweep->speed_max}};
    } else {
        json wp = json::array();
        for (const Waypoint& w : config.obstacle.trajectory) wp.push_back({w.t, w.x});
        obstacle["waypoints"] = wp;
    }
    j["obstacle"] = obstacle;
    j["tx_assignments"] = json::array();
    for (const auto& sched : config.tx_assignments) {
        json intervals = json::array();
        for (const TxAssignment& iv : sched)
            intervals.push_back({{"from_s", iv.begin_s}, {"to_s", iv.end_s}, {"point", iv.point}});
        j["tx_assignments"].push_back(intervals);
    }
    return j.dump(2);
}

std::string engine_config_to_json(const EngineConfig& config) {
    json j;
    if (config.queue_tq_s)
        j["queue"] = {{"t_q_s", *config.queue_tq_s}};
    else if (config.queue_capacity)
        j["queue"] = {{"n_q", *config.queue_capacity}};
    else
        j["queue"] = {{"t_q_s", "inf"}};
    j["retrain_min_interval_s"] = config.retrain_min_interval_s;
    j["min_train_samples"] = config.min_train_samples;
    j["pipeline"] = {{"reduced_side", config.pipeline.reduced_side},
                     {"images_per_feature", config.pipeline.images_per_feature},
                     {"image_interval_s", config.pipeline.image_interval_s},
                     {"power_values", config.pipeline.power_values},
                     {"horizon_s", config.pipeline.horizon_s}};
    j["gbrt"] = {{"num_leaves", config.gbrt.num_leaves},
                 {"max_depth", config.gbrt.max_depth},
                 {"num_rounds", config.gbrt.num_rounds},
                 {"early_stop_rounds", config.gbrt.early_stop_rounds},
                 {"learning_rate", config.gbrt.learning_rate},
                 {"min_samples_leaf", config.gbrt.min_samples_leaf},
                 {"split_fraction", config.gbrt.split_fraction},
                 {"rng_seed", config.gbrt.rng_seed}};
    return j.dump(2);
}

}  // namespace lqp
