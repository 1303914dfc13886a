#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "lqp/feature.hpp"

namespace lqp {

struct GbrtParams {
    int num_leaves = 100;
    int max_depth = 8;  // edges from root; a lone root has depth 0
    int num_rounds = 10;
    int early_stop_rounds = 2;
    double learning_rate = 0.1;
    int min_samples_leaf = 5;
    double split_fraction = 0.8;  // update : validation = split : (1 - split)
    std::uint64_t rng_seed = 0;
};

void validate(const GbrtParams& params);

// Internal nodes hold feature/threshold, leaves hold the response. Routing is
// x[feature] <= threshold -> left.
struct TreeNode {
    std::int32_t feature = -1;
    float threshold = 0.0f;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // root at index 0

    double evaluate(const float* x) const;
    // Row access into a column-major sample matrix.
    double evaluate_row(const Eigen::MatrixXf& X, Eigen::Index row) const;
    int leaf_count() const;
    int depth() const;
};

struct GbrtModel {
    double base_score = 0.0;
    double learning_rate = 0.1;
    int feature_dim = 0;
    int trained_rounds = 0;
    int best_round = 0;  // number of trees used at prediction time
    std::vector<RegressionTree> trees;
    std::vector<double> validation_rmse;  // one entry per completed round

    double predict(std::span<const float> x) const;
    double predict(const FeatureVector& feature) const { return predict({feature.values.data(),
                                                                         static_cast<std::size_t>(feature.values.size())}); }
};

// Seeded random partition into update/validation index sets. The update set
// has round(fraction * n) elements, clamped so neither side is empty.
std::pair<std::vector<int>, std::vector<int>> split_dataset(std::size_t n, double fraction,
                                                            std::uint64_t seed);

// Greedy leaf-wise growth by exact variance-reduction split search over all
// midpoints between consecutive distinct feature values. Column orders are
// sorted once and stably partitioned as leaves split, so refitting residuals
// round after round does not re-sort.
class TreeBuilder {
  public:
    TreeBuilder(const Eigen::MatrixXf& X, const GbrtParams& params);

    RegressionTree fit(std::span<const double> residuals);

  private:
    const Eigen::MatrixXf& X_;
    GbrtParams params_;
    std::vector<std::int32_t> active_features_;
    std::vector<std::int32_t> pristine_order_;  // active-feature-major, sorted by value
    std::vector<std::int32_t> order_;           // working copy, partitioned per leaf
    std::vector<std::int32_t> scratch_;
};

// One tree fitted to the residuals; the contract-level entry point.
RegressionTree fit_tree(const Eigen::MatrixXf& X, std::span<const double> residuals,
                        const GbrtParams& params);

// Boosting with validation-based early stopping. Returns nothing (training
// skipped) for fewer than five samples.
std::optional<GbrtModel> train(const Eigen::MatrixXf& X, std::span<const double> y,
                               const GbrtParams& params);
std::optional<GbrtModel> train(std::span<const LabeledSample> samples, const GbrtParams& params);

// Versioned binary serialization; bit-exact round trip.
void save_model(const GbrtModel& model, std::ostream& out);
void save_model(const GbrtModel& model, const std::filesystem::path& path);
GbrtModel load_model(std::istream& in);
GbrtModel load_model(const std::filesystem::path& path);

}  // namespace lqp
