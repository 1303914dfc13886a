#pragma once

#include <Eigen/Core>
#include <deque>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "lqp/image.hpp"
#include "lqp/scene.hpp"

namespace lqp {

enum class FeatureKind { RpIm, Im, Rp };

struct PipelineParams {
    int reduced_side = 40;          // w
    int images_per_feature = 5;     // N_img
    double image_interval_s = 0.5;  // T0
    int power_values = 21;          // N_r
    double horizon_s = 1.0;         // T_f
    double frame_rate = 10.0;       // F
    double power_period_s = kBeaconPeriod;

    double window_s() const { return (images_per_feature - 1) * image_interval_s; }
};

void validate(const PipelineParams& params);
int feature_dim(const PipelineParams& params, FeatureKind kind);

struct FeatureVector {
    double t = 0.0;
    FeatureKind kind = FeatureKind::RpIm;
    Eigen::VectorXf values;
};

struct LabeledSample {
    std::shared_ptr<const FeatureVector> feature;
    double label_dbm = 0.0;
    double label_t = 0.0;
};

// Power history resampled to power_values points on the uniform closed grid
// over [t - window, t], nearest sample per grid point (ties take the later
// sample). Returns nothing if any grid point has no sample within one power
// period.
std::optional<Eigen::VectorXf> resample_power_window(std::span<const PowerSample> history, double t,
                                                     const PipelineParams& params);

// Combines the image window (oldest first) with the resampled power history
// into one flat vector. Image and power parts are validated only for the
// kinds that use them; insufficient history yields nothing (warm-up).
std::optional<FeatureVector> build_feature(std::span<const GrayImage* const> image_window,
                                           std::span<const PowerSample> power_history, double t,
                                           const PipelineParams& params, FeatureKind kind);

// Ring of reduced frames shared by every station pipeline.
class ImageBuffer {
  public:
    explicit ImageBuffer(const PipelineParams& params);

    void push(GrayImage image);

    // Nearest image per window slot t - k*T0 within half a frame period;
    // empty result while warming up. Oldest first.
    std::vector<const GrayImage*> select_window(double t) const;

  private:
    PipelineParams params_;
    double keep_span_;
    std::deque<GrayImage> images_;
};

// Per-station stream state: power history plus features awaiting labels.
class StaPipeline {
  public:
    StaPipeline(const PipelineParams& params, FeatureKind kind);

    // May complete pending labels; completed samples are queued for take_ready().
    void push_power(const PowerSample& sample);

    // Assembles the feature for frame time t, or nothing during warm-up.
    std::optional<FeatureVector> assemble(const ImageBuffer& images, double t) const;

    void submit_for_label(std::shared_ptr<const FeatureVector> feature);

    std::vector<LabeledSample> take_ready();

    // Power sample nearest to t among the buffered history.
    std::optional<PowerSample> nearest_power(double t) const;
    std::optional<PowerSample> latest_power() const;

    std::size_t pending_count() const { return pending_.size(); }
    std::span<const PowerSample> power_history() const { return power_; }

  private:
    PipelineParams params_;
    FeatureKind kind_;
    double keep_span_;
    std::vector<PowerSample> power_;
    std::deque<std::shared_ptr<const FeatureVector>> pending_;
    std::vector<LabeledSample> ready_;
};

// Offline interchange: t,label,v0,...,v{d-1} with full-precision values.
void write_samples_csv(const std::filesystem::path& path, std::span<const LabeledSample> samples);
std::vector<LabeledSample> read_samples_csv(const std::filesystem::path& path);

}  // namespace lqp
