#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lqp/image.hpp"

namespace lqp {

// Beacon transmission period of the stations.
inline constexpr double kBeaconPeriod = 0.1;

struct PowerSample {
    double t = 0.0;
    int tx_id = 0;
    double power_dbm = 0.0;
};

struct Waypoint {
    double t = 0.0;
    double x = 0.0;
};

// Back-and-forth sweep between x_min and x_max; each pass draws its speed
// from [speed_min, speed_max] using the scene seed, so blockage events are
// learnable without being strictly periodic.
struct SweepSpec {
    double x_min = 0.0;
    double x_max = 0.0;
    double speed_min = 0.0;
    double speed_max = 0.0;
};

struct ObstacleSpec {
    double width_m = 0.0;
    double height_m = 0.0;
    double attenuation_db = 0.0;  // applied in full at blockage fraction 1
    double track_y = 0.0;         // y of the line the obstacle center moves along
    std::vector<Waypoint> trajectory;  // resolved piecewise-linear x(t)
    std::optional<SweepSpec> sweep;    // unresolved alternative to explicit waypoints
};

struct TxAssignment {
    double begin_s = 0.0;
    double end_s = 0.0;
    std::string point;
};

struct SceneConfig {
    double duration_s = 0.0;
    double frame_rate = 0.0;  // frames per second
    int image_width = 0;
    int image_height = 0;
    std::vector<std::pair<std::string, Eigen::Vector2d>> tx_points;  // ordered, labeled
    Eigen::Vector2d rx_position{0.0, 0.0};
    ObstacleSpec obstacle;
    std::vector<std::vector<TxAssignment>> tx_assignments;  // index = tx id
    double noise_stddev = 1.0;                              // dB
    std::map<std::string, double> baseline_power_dbm;       // keyed by point label
    std::uint64_t rng_seed = 0;

    int tx_count() const { return static_cast<int>(tx_assignments.size()); }
    const Eigen::Vector2d& point_position(const std::string& label) const;
};

// Throws std::invalid_argument naming the offending field.
void validate(const SceneConfig& config);

// Expands a sweep spec into explicit waypoints using the given seed and
// stores the seed on the config. Explicit waypoints are kept as-is.
SceneConfig resolve_with_seed(SceneConfig config, std::uint64_t seed);

double obstacle_center_x(const ObstacleSpec& obstacle, double t);

// Point label assigned to a transmitter at time t. Intervals are half-open,
// the last one closed. Throws std::domain_error outside the schedule.
const std::string& assigned_point(const SceneConfig& config, int tx_id, double t);

// Share of the LOS segment from the transmitter to the receiver that lies in
// the obstacle's x-shadow [center - width/2, center + width/2], gated on the
// obstacle track running between the endpoints' y range. Degenerate corridors
// (transmitter and receiver at the same x) block fully or not at all.
double blockage_fraction(const SceneConfig& config, int tx_id, double t);

// baseline - attenuation * blockage + seeded Gaussian noise.
PowerSample measure_power(const SceneConfig& config, int tx_id, double t);

// Static world->image mapping shared by all frames of a scene.
struct SceneView {
    double x_min = 0.0, x_max = 0.0;  // world x window
    double y_min = 0.0, y_max = 0.0;  // world y window (marker band)
    int width = 0, height = 0;

    static SceneView from_config(const SceneConfig& config);
    double pixels_per_meter() const { return (width - 1) / (x_max - x_min); }
    // Vertical scale is fixed relative to the image height, so obstacle
    // heights render proportionally at any resolution or horizontal span.
    double vertical_px_per_meter() const { return 0.18 * (height - 1); }
    int col_of(double x) const;
    int marker_row_of(double y) const;
    int ground_row() const { return 3 * (height - 1) / 4; }
};

// Deterministic synthetic frame: uniform background, one marker per labeled
// point plus the receiver, and the obstacle as a filled rectangle.
Frame render_frame(const SceneConfig& config, double t);

// Same output as render_frame with the static background cached.
class FrameRenderer {
  public:
    explicit FrameRenderer(const SceneConfig& config);
    Frame render(double t) const;

  private:
    const SceneConfig& config_;
    SceneView view_;
    std::vector<std::uint8_t> background_;
};

struct SceneEvent {
    double t = 0.0;
    std::variant<PowerSample, Frame> payload;

    bool is_frame() const { return std::holds_alternative<Frame>(payload); }
};

// Merged beacon/frame stream in deterministic order: time ascending, power
// samples before the frame at equal timestamps, power samples by tx id.
class SceneSimulator {
  public:
    explicit SceneSimulator(const SceneConfig& config);

    bool next(SceneEvent& event);
    void reset();

    long frame_count() const { return frame_count_; }
    long beacon_count() const { return beacon_count_; }  // per transmitter

  private:
    const SceneConfig& config_;
    FrameRenderer renderer_;
    long frame_count_ = 0;
    long beacon_count_ = 0;
    long next_frame_ = 0;
    long next_beacon_ = 0;
    int next_tx_ = 0;
};

std::vector<PowerSample> generate_power_trace(const SceneConfig& config);

}  // namespace lqp
