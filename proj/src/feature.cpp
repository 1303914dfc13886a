#include "lqp/feature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "lqp/csv.hpp"

namespace lqp {

void validate(const PipelineParams& params) {
    if (params.reduced_side < 1) throw std::invalid_argument("reduced_side must be >= 1");
    if (params.images_per_feature < 1) throw std::invalid_argument("images_per_feature must be >= 1");
    if (params.power_values < 1) throw std::invalid_argument("power_values must be >= 1");
    if (!(params.image_interval_s > 0)) throw std::invalid_argument("image_interval_s must be > 0");
    if (!(params.horizon_s > 0)) throw std::invalid_argument("horizon_s must be > 0");
    if (!(params.frame_rate > 0)) throw std::invalid_argument("frame_rate must be > 0");
    const double ticks = params.image_interval_s * params.frame_rate;
    if (std::abs(ticks - std::round(ticks)) > 1e-6)
        throw std::invalid_argument("image_interval_s must be an integer multiple of the frame period");
}

int feature_dim(const PipelineParams& params, FeatureKind kind) {
    const int image_part = params.reduced_side * params.reduced_side * params.images_per_feature;
    switch (kind) {
        case FeatureKind::RpIm: return image_part + params.power_values;
        case FeatureKind::Im: return image_part;
        case FeatureKind::Rp: return params.power_values;
    }
    return 0;
}

namespace {

// Nearest sample to t; ties prefer the later sample.
const PowerSample* nearest_sample(std::span<const PowerSample> history, double t) {
    if (history.empty()) return nullptr;
    auto it = std::lower_bound(history.begin(), history.end(), t,
                               [](const PowerSample& s, double v) { return s.t < v; });
    if (it == history.end()) return &*(it - 1);
    if (it == history.begin()) return &*it;
    const double d_hi = std::abs(it->t - t);
    const double d_lo = std::abs((it - 1)->t - t);
    return d_lo < d_hi ? &*(it - 1) : &*it;
}

}  // namespace

std::optional<Eigen::VectorXf> resample_power_window(std::span<const PowerSample> history, double t,
                                                     const PipelineParams& params) {
    const double window = params.window_s();
    const int n = params.power_values;
    Eigen::VectorXf out(n);
    const double step = n > 1 ? window / (n - 1) : 0.0;
    for (int j = 0; j < n; ++j) {
        const double grid_t = t - window + step * j;
        const PowerSample* s = nearest_sample(history, grid_t);
        if (s == nullptr || std::abs(s->t - grid_t) > params.power_period_s + 1e-9) return std::nullopt;
        out[j] = static_cast<float>(s->power_dbm);
    }
    return out;
}

std::optional<FeatureVector> build_feature(std::span<const GrayImage* const> image_window,
                                           std::span<const PowerSample> power_history, double t,
                                           const PipelineParams& params, FeatureKind kind) {
    const bool needs_images = kind != FeatureKind::Rp;
    const bool needs_power = kind != FeatureKind::Im;

    FeatureVector fv;
    fv.t = t;
    fv.kind = kind;
    fv.values.resize(feature_dim(params, kind));
    Eigen::Index cursor = 0;

    if (needs_images) {
        if (static_cast<int>(image_window.size()) != params.images_per_feature) return std::nullopt;
        const double half_frame = 0.5 / params.frame_rate;
        for (int k = 0; k < params.images_per_feature; ++k) {
            const GrayImage* img = image_window[k];
            const double want = t - (params.images_per_feature - 1 - k) * params.image_interval_s;
            if (img == nullptr || img->side != params.reduced_side) return std::nullopt;
            if (std::abs(img->t - want) > half_frame + 1e-9) return std::nullopt;
            fv.values.segment(cursor, img->pixels.size()) = img->pixels;
            cursor += img->pixels.size();
        }
    }
    if (needs_power) {
        auto power = resample_power_window(power_history, t, params);
        if (!power) return std::nullopt;
        fv.values.segment(cursor, power->size()) = *power;
        cursor += power->size();
    }
    return fv;
}

ImageBuffer::ImageBuffer(const PipelineParams& params)
    : params_(params), keep_span_(params.window_s() + 2.0 / params.frame_rate) {}

void ImageBuffer::push(GrayImage image) {
    images_.push_back(std::move(image));
    while (!images_.empty() && images_.front().t < images_.back().t - keep_span_) images_.pop_front();
}

std::vector<const GrayImage*> ImageBuffer::select_window(double t) const {
    std::vector<const GrayImage*> out;
    out.reserve(params_.images_per_feature);
    const double half_frame = 0.5 / params_.frame_rate;
    for (int k = params_.images_per_feature - 1; k >= 0; --k) {
        const double want = t - k * params_.image_interval_s;
        const GrayImage* best = nullptr;
        double best_dist = half_frame + 1e-9;
        // The deque is time-ordered; binary search for the insertion point.
        auto it = std::lower_bound(images_.begin(), images_.end(), want,
                                   [](const GrayImage& img, double v) { return img.t < v; });
        for (auto probe : {it == images_.begin() ? images_.end() : it - 1, it}) {
            if (probe == images_.end()) continue;
            const double d = std::abs(probe->t - want);
            if (d <= best_dist) {
                best_dist = d;
                best = &*probe;
            }
        }
        if (best == nullptr) return {};
        out.push_back(best);
    }
    return out;
}

StaPipeline::StaPipeline(const PipelineParams& params, FeatureKind kind)
    : params_(params),
      kind_(kind),
      keep_span_(params.window_s() + params.horizon_s + 2.0 * params.power_period_s + 1.0) {}

void StaPipeline::push_power(const PowerSample& sample) {
    if (!power_.empty() && sample.t < power_.back().t - 1e-9)
        throw std::runtime_error("power stream timestamp regression");
    power_.push_back(sample);
    if (power_.front().t < sample.t - 2.0 * keep_span_) {
        const double cutoff = sample.t - keep_span_;
        auto first = std::lower_bound(power_.begin(), power_.end(), cutoff,
                                      [](const PowerSample& s, double v) { return s.t < v; });
        power_.erase(power_.begin(), first);
    }

    // Labels complete once a sample at or past t + T_f exists.
    while (!pending_.empty() && sample.t >= pending_.front()->t + params_.horizon_s - 1e-9) {
        auto feature = pending_.front();
        pending_.pop_front();
        const PowerSample* label = nearest_sample(power_, feature->t + params_.horizon_s);
        ready_.push_back(LabeledSample{std::move(feature), label->power_dbm, label->t});
    }
}

std::optional<FeatureVector> StaPipeline::assemble(const ImageBuffer& images, double t) const {
    std::vector<const GrayImage*> window;
    if (kind_ != FeatureKind::Rp) {
        window = images.select_window(t);
        if (window.empty()) return std::nullopt;
    }
    return build_feature(window, power_, t, params_, kind_);
}

void StaPipeline::submit_for_label(std::shared_ptr<const FeatureVector> feature) {
    pending_.push_back(std::move(feature));
}

std::vector<LabeledSample> StaPipeline::take_ready() {
    std::vector<LabeledSample> out;
    out.swap(ready_);
    return out;
}

std::optional<PowerSample> StaPipeline::nearest_power(double t) const {
    const PowerSample* s = nearest_sample(power_, t);
    if (s == nullptr) return std::nullopt;
    return *s;
}

std::optional<PowerSample> StaPipeline::latest_power() const {
    if (power_.empty()) return std::nullopt;
    return power_.back();
}

void write_samples_csv(const std::filesystem::path& path, std::span<const LabeledSample> samples) {
    auto out = open_output(path);
    out << "t,label";
    const Eigen::Index dim = samples.empty() ? 0 : samples.front().feature->values.size();
    for (Eigen::Index i = 0; i < dim; ++i) out << ",v" << i;
    out << "\n";
    for (const LabeledSample& s : samples) {
        out << format_double(s.feature->t) << ',' << format_double(s.label_dbm);
        for (Eigen::Index i = 0; i < s.feature->values.size(); ++i)
            out << ',' << format_double(s.feature->values[i]);
        out << "\n";
    }
}

std::vector<LabeledSample> read_samples_csv(const std::filesystem::path& path) {
    const auto rows = read_csv(path);
    if (rows.empty()) throw std::runtime_error("empty sample file " + path.string());
    std::vector<LabeledSample> samples;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() < 2) throw std::runtime_error("malformed sample row in " + path.string());
        auto fv = std::make_shared<FeatureVector>();
        fv->t = parse_double(row[0]);
        fv->values.resize(static_cast<Eigen::Index>(row.size()) - 2);
        for (std::size_t i = 2; i < row.size(); ++i)
            fv->values[static_cast<Eigen::Index>(i) - 2] = static_cast<float>(parse_double(row[i]));
        LabeledSample s;
        s.label_dbm = parse_double(row[1]);
        s.label_t = fv->t;
        s.feature = std::move(fv);
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace lqp
