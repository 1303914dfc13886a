#include "lqp/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "lqp/rng.hpp"

namespace lqp {

namespace {

constexpr std::uint64_t kSweepStreamKey = 0x5feeb;
constexpr std::uint64_t kNoiseStreamKey = 0x401fe;

struct Rgb {
    std::uint8_t r, g, b;
};

constexpr Rgb kBackground{205, 205, 205};
constexpr Rgb kObstacle{45, 45, 45};
constexpr Rgb kRxMarker{60, 190, 90};
constexpr Rgb kTxPalette[] = {{210, 60, 50}, {60, 90, 210}, {200, 170, 40}, {150, 60, 190},
                              {230, 120, 30}, {40, 160, 180}};

void fill_rect(std::vector<std::uint8_t>& rgb, int width, int height, int x0, int x1, int y0, int y1,
               Rgb color) {
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, width - 1);
    y1 = std::min(y1, height - 1);
    for (int y = y0; y <= y1; ++y) {
        std::uint8_t* p = rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x0);
        for (int x = x0; x <= x1; ++x) {
            p[0] = color.r;
            p[1] = color.g;
            p[2] = color.b;
            p += 3;
        }
    }
}

long event_count(double duration_s, double period_s) {
    return static_cast<long>(std::floor(duration_s / period_s + 1e-9));
}

}  // namespace

const Eigen::Vector2d& SceneConfig::point_position(const std::string& label) const {
    for (const auto& [id, pos] : tx_points)
        if (id == label) return pos;
    throw std::invalid_argument("unknown point label '" + label + "'");
}

void validate(const SceneConfig& config) {
    if (!(config.duration_s > 0)) throw std::invalid_argument("duration_s must be > 0");
    if (!(config.frame_rate > 0)) throw std::invalid_argument("frame_rate must be > 0");
    if (config.image_width < 1 || config.image_height < 1)
        throw std::invalid_argument("image dimensions must be >= 1");
    if (config.tx_points.empty()) throw std::invalid_argument("tx_points must not be empty");
    if (config.tx_assignments.empty()) throw std::invalid_argument("tx_assignments must not be empty");
    if (!(config.noise_stddev >= 0)) throw std::invalid_argument("noise_stddev must be >= 0");
    if (!(config.obstacle.attenuation_db >= 0))
        throw std::invalid_argument("obstacle.attenuation_db must be >= 0");
    if (!(config.obstacle.width_m > 0)) throw std::invalid_argument("obstacle.width_m must be > 0");
    if (!(config.obstacle.height_m > 0)) throw std::invalid_argument("obstacle.height_m must be > 0");
    if (config.obstacle.trajectory.empty() && !config.obstacle.sweep)
        throw std::invalid_argument("obstacle needs a trajectory or a sweep spec");
    if (config.obstacle.sweep) {
        const auto& s = *config.obstacle.sweep;
        if (!(s.x_max > s.x_min)) throw std::invalid_argument("obstacle.sweep: x_max must exceed x_min");
        if (!(s.speed_min > 0) || !(s.speed_max >= s.speed_min))
            throw std::invalid_argument("obstacle.sweep: need 0 < speed_min <= speed_max");
    }
    for (std::size_t i = 0; i + 1 < config.obstacle.trajectory.size(); ++i) {
        if (!(config.obstacle.trajectory[i].t < config.obstacle.trajectory[i + 1].t))
            throw std::invalid_argument("obstacle.trajectory timestamps must be strictly increasing");
    }
    if (!config.obstacle.trajectory.empty()) {
        if (config.obstacle.trajectory.front().t < 0 ||
            config.obstacle.trajectory.back().t > config.duration_s + 1e-9)
            throw std::invalid_argument("obstacle.trajectory timestamps must lie within [0, duration_s]");
    }
    for (std::size_t tx = 0; tx < config.tx_assignments.size(); ++tx) {
        const auto& sched = config.tx_assignments[tx];
        const std::string ctx = "tx_assignments[" + std::to_string(tx) + "]";
        if (sched.empty()) throw std::invalid_argument(ctx + " is empty");
        if (std::abs(sched.front().begin_s) > 1e-9)
            throw std::invalid_argument(ctx + " must start at 0");
        for (std::size_t k = 0; k < sched.size(); ++k) {
            if (!(sched[k].end_s > sched[k].begin_s))
                throw std::invalid_argument(ctx + " has an empty interval");
            if (k + 1 < sched.size() && std::abs(sched[k].end_s - sched[k + 1].begin_s) > 1e-9)
                throw std::invalid_argument(ctx + " has a gap at t=" + std::to_string(sched[k].end_s));
            config.point_position(sched[k].point);  // throws on unknown labels
            if (config.baseline_power_dbm.find(sched[k].point) == config.baseline_power_dbm.end())
                throw std::invalid_argument("baseline_power_dbm missing point '" + sched[k].point + "'");
        }
        if (sched.back().end_s < config.duration_s - 1e-9)
            throw std::invalid_argument(ctx + " does not cover the full duration");
    }
}

SceneConfig resolve_with_seed(SceneConfig config, std::uint64_t seed) {
    config.rng_seed = seed;
    if (config.obstacle.sweep && config.obstacle.trajectory.empty()) {
        const SweepSpec s = *config.obstacle.sweep;
        SplitMix64 rng(mix_seed(seed, kSweepStreamKey));
        std::vector<Waypoint> path;
        double t = 0.0, x = s.x_min;
        int direction = 1;
        path.push_back({t, x});
        while (t < config.duration_s) {
            const double speed = rng.uniform(s.speed_min, s.speed_max);
            const double target = direction > 0 ? s.x_max : s.x_min;
            const double dt = std::abs(target - x) / speed;
            if (t + dt >= config.duration_s) {
                const double x_end = x + direction * speed * (config.duration_s - t);
                path.push_back({config.duration_s, x_end});
                break;
            }
            t += dt;
            x = target;
            path.push_back({t, x});
            direction = -direction;
        }
        config.obstacle.trajectory = std::move(path);
    }
    return config;
}

double obstacle_center_x(const ObstacleSpec& obstacle, double t) {
    const auto& path = obstacle.trajectory;
    if (path.empty()) throw std::invalid_argument("obstacle trajectory not resolved");
    if (t <= path.front().t) return path.front().x;
    if (t >= path.back().t) return path.back().x;
    auto it = std::upper_bound(path.begin(), path.end(), t,
                               [](double v, const Waypoint& w) { return v < w.t; });
    const Waypoint& hi = *it;
    const Waypoint& lo = *(it - 1);
    const double f = (t - lo.t) / (hi.t - lo.t);
    return lo.x + f * (hi.x - lo.x);
}

const std::string& assigned_point(const SceneConfig& config, int tx_id, double t) {
    if (tx_id < 0 || tx_id >= config.tx_count())
        throw std::domain_error("tx_id " + std::to_string(tx_id) + " out of range");
    if (t < -1e-9 || t > config.duration_s + 1e-9)
        throw std::domain_error("t=" + std::to_string(t) + " outside [0, duration_s]");
    const auto& sched = config.tx_assignments[tx_id];
    for (std::size_t k = 0; k < sched.size(); ++k) {
        const bool last = (k + 1 == sched.size());
        if (t >= sched[k].begin_s - 1e-9 && (t < sched[k].end_s - 1e-9 || last)) return sched[k].point;
    }
    throw std::domain_error("tx " + std::to_string(tx_id) + " unassigned at t=" + std::to_string(t));
}

double blockage_fraction(const SceneConfig& config, int tx_id, double t) {
    const Eigen::Vector2d tx = config.point_position(assigned_point(config, tx_id, t));
    const Eigen::Vector2d rx = config.rx_position;
    const ObstacleSpec& obstacle = config.obstacle;

    const double y_lo = std::min(tx.y(), rx.y());
    const double y_hi = std::max(tx.y(), rx.y());
    if (obstacle.track_y < y_lo - 1e-12 || obstacle.track_y > y_hi + 1e-12) return 0.0;

    const double half = obstacle.width_m / 2.0;
    const double center = obstacle_center_x(obstacle, t);
    const double x_lo = std::min(tx.x(), rx.x());
    const double x_hi = std::max(tx.x(), rx.x());
    if (x_hi == x_lo) return std::abs(x_lo - center) <= half ? 1.0 : 0.0;

    const double overlap = std::min(x_hi, center + half) - std::max(x_lo, center - half);
    return std::clamp(overlap / (x_hi - x_lo), 0.0, 1.0);
}

PowerSample measure_power(const SceneConfig& config, int tx_id, double t) {
    const std::string& point = assigned_point(config, tx_id, t);
    const double baseline = config.baseline_power_dbm.at(point);
    double dbm = baseline - config.obstacle.attenuation_db * blockage_fraction(config, tx_id, t);
    if (config.noise_stddev > 0) {
        const auto tick = static_cast<std::uint64_t>(std::llround(t / kBeaconPeriod));
        SplitMix64 rng(mix_seed(config.rng_seed, kNoiseStreamKey + static_cast<std::uint64_t>(tx_id), tick));
        dbm += config.noise_stddev * rng.gaussian();
    }
    return PowerSample{t, tx_id, dbm};
}

SceneView SceneView::from_config(const SceneConfig& config) {
    SceneView v;
    v.width = config.image_width;
    v.height = config.image_height;
    double x_lo = config.rx_position.x(), x_hi = config.rx_position.x();
    double y_lo = config.rx_position.y(), y_hi = config.rx_position.y();
    for (const auto& [label, pos] : config.tx_points) {
        x_lo = std::min(x_lo, pos.x());
        x_hi = std::max(x_hi, pos.x());
        y_lo = std::min(y_lo, pos.y());
        y_hi = std::max(y_hi, pos.y());
    }
    // The camera frames the transmitter/receiver area; the obstacle enters
    // and leaves this window as it sweeps.
    const double x_pad = std::max(1.0, 0.10 * (x_hi - x_lo));
    v.x_min = x_lo - x_pad;
    v.x_max = x_hi + x_pad;
    const double y_pad = std::max(0.5, 0.05 * (y_hi - y_lo));
    v.y_min = y_lo - y_pad;
    v.y_max = y_hi + y_pad;
    return v;
}

int SceneView::col_of(double x) const {
    const double f = (x - x_min) / (x_max - x_min);
    return std::clamp(static_cast<int>(std::lround(f * (width - 1))), 0, width - 1);
}

int SceneView::marker_row_of(double y) const {
    const int band_lo = (height - 1) / 8;
    const int band_hi = ground_row();
    const double f = (y - y_min) / (y_max - y_min);
    // Larger y (farther from the receiver) sits higher in the image.
    return std::clamp(band_hi - static_cast<int>(std::lround(f * (band_hi - band_lo))), 0, height - 1);
}

namespace {

std::vector<std::uint8_t> render_background(const SceneConfig& config, const SceneView& view) {
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(view.width) * view.height * 3);
    for (std::size_t i = 0; i < rgb.size(); i += 3) {
        rgb[i] = kBackground.r;
        rgb[i + 1] = kBackground.g;
        rgb[i + 2] = kBackground.b;
    }
    const int marker = std::max(2, view.width / 80);
    int palette_index = 0;
    for (const auto& [label, pos] : config.tx_points) {
        const Rgb color = kTxPalette[palette_index++ % (sizeof(kTxPalette) / sizeof(kTxPalette[0]))];
        const int cx = view.col_of(pos.x());
        const int cy = view.marker_row_of(pos.y());
        fill_rect(rgb, view.width, view.height, cx - marker, cx + marker, cy - marker, cy + marker, color);
    }
    const int rx_col = view.col_of(config.rx_position.x());
    const int rx_row = view.marker_row_of(config.rx_position.y());
    fill_rect(rgb, view.width, view.height, rx_col - marker, rx_col + marker, rx_row - marker,
              rx_row + marker, kRxMarker);
    return rgb;
}

void draw_obstacle(std::vector<std::uint8_t>& rgb, const SceneConfig& config, const SceneView& view,
                   double t) {
    const double center = obstacle_center_x(config.obstacle, t);
    const double half = config.obstacle.width_m / 2.0;
    if (center + half < view.x_min || center - half > view.x_max) return;  // out of frame
    const int x0 = view.col_of(center - half);
    const int x1 = view.col_of(center + half);
    const int ground = view.ground_row();
    const int height_px =
        static_cast<int>(std::lround(config.obstacle.height_m * view.vertical_px_per_meter()));
    const int top = std::max(0, ground - std::max(height_px, 1) + 1);
    fill_rect(rgb, view.width, view.height, x0, x1, top, ground, kObstacle);
}

}  // namespace

Frame render_frame(const SceneConfig& config, double t) {
    if (t < -1e-9 || t > config.duration_s + 1e-9)
        throw std::domain_error("render_frame: t outside [0, duration_s]");
    const SceneView view = SceneView::from_config(config);
    Frame frame;
    frame.t = t;
    frame.width = view.width;
    frame.height = view.height;
    frame.rgb = render_background(config, view);
    draw_obstacle(frame.rgb, config, view, t);
    return frame;
}

FrameRenderer::FrameRenderer(const SceneConfig& config)
    : config_(config), view_(SceneView::from_config(config)), background_(render_background(config, view_)) {}

Frame FrameRenderer::render(double t) const {
    Frame frame;
    frame.t = t;
    frame.width = view_.width;
    frame.height = view_.height;
    frame.rgb = background_;
    draw_obstacle(frame.rgb, config_, view_, t);
    return frame;
}

SceneSimulator::SceneSimulator(const SceneConfig& config)
    : config_(config),
      renderer_(config),
      frame_count_(event_count(config.duration_s, 1.0 / config.frame_rate)),
      beacon_count_(event_count(config.duration_s, kBeaconPeriod)) {}

void SceneSimulator::reset() {
    next_frame_ = 0;
    next_beacon_ = 0;
    next_tx_ = 0;
}

bool SceneSimulator::next(SceneEvent& event) {
    const double frame_t = next_frame_ < frame_count_
                               ? static_cast<double>(next_frame_) / config_.frame_rate
                               : std::numeric_limits<double>::infinity();
    const double beacon_t = next_beacon_ < beacon_count_
                                ? static_cast<double>(next_beacon_) * kBeaconPeriod
                                : std::numeric_limits<double>::infinity();
    if (std::isinf(frame_t) && std::isinf(beacon_t)) return false;

    // Power samples go first at equal timestamps so a frame's feature window
    // always includes the beacon of its own tick. The two grids round the
    // same instant to slightly different doubles, hence the tolerance.
    if (beacon_t <= frame_t + 1e-9) {
        event.t = beacon_t;
        event.payload = measure_power(config_, next_tx_, beacon_t);
        if (++next_tx_ >= config_.tx_count()) {
            next_tx_ = 0;
            ++next_beacon_;
        }
        return true;
    }
    event.t = frame_t;
    event.payload = renderer_.render(frame_t);
    ++next_frame_;
    return true;
}

std::vector<PowerSample> generate_power_trace(const SceneConfig& config) {
    std::vector<PowerSample> trace;
    const long beacons = event_count(config.duration_s, kBeaconPeriod);
    trace.reserve(static_cast<std::size_t>(beacons) * config.tx_count());
    for (long k = 0; k < beacons; ++k) {
        const double t = static_cast<double>(k) * kBeaconPeriod;
        for (int tx = 0; tx < config.tx_count(); ++tx) trace.push_back(measure_power(config, tx, t));
    }
    return trace;
}

}  // namespace lqp
