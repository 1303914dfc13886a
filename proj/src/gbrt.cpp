#include "lqp/gbrt.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lqp/rng.hpp"

namespace lqp {

namespace {

constexpr std::uint64_t kSplitStreamKey = 0x8b1d;
constexpr char kModelMagic[4] = {'L', 'Q', 'P', 'M'};
constexpr std::uint32_t kModelVersion = 1;

double rmse(std::span<const double> truth, std::span<const double> pred) {
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = truth[i] - pred[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(truth.size()));
}

}  // namespace

void validate(const GbrtParams& params) {
    if (params.num_leaves < 2) throw std::invalid_argument("num_leaves must be >= 2");
    if (params.max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    if (params.num_rounds < 1) throw std::invalid_argument("num_rounds must be >= 1");
    if (params.early_stop_rounds < 1) throw std::invalid_argument("early_stop_rounds must be >= 1");
    if (!(params.learning_rate > 0) || params.learning_rate > 1)
        throw std::invalid_argument("learning_rate must be in (0, 1]");
    if (params.min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
    if (!(params.split_fraction > 0) || !(params.split_fraction < 1))
        throw std::invalid_argument("split_fraction must be in (0, 1)");
}

double RegressionTree::evaluate(const float* x) const {
    const TreeNode* node = nodes.data();
    while (!node->is_leaf()) node = nodes.data() + (x[node->feature] <= node->threshold ? node->left : node->right);
    return node->value;
}

double RegressionTree::evaluate_row(const Eigen::MatrixXf& X, Eigen::Index row) const {
    const TreeNode* node = nodes.data();
    while (!node->is_leaf())
        node = nodes.data() + (X(row, node->feature) <= node->threshold ? node->left : node->right);
    return node->value;
}

int RegressionTree::leaf_count() const {
    int count = 0;
    for (const TreeNode& n : nodes) count += n.is_leaf() ? 1 : 0;
    return count;
}

int RegressionTree::depth() const {
    if (nodes.empty()) return 0;
    std::vector<std::pair<std::int32_t, int>> stack{{0, 0}};
    int deepest = 0;
    while (!stack.empty()) {
        const auto [id, d] = stack.back();
        stack.pop_back();
        const TreeNode& n = nodes[static_cast<std::size_t>(id)];
        if (n.is_leaf()) {
            deepest = std::max(deepest, d);
        } else {
            stack.push_back({n.left, d + 1});
            stack.push_back({n.right, d + 1});
        }
    }
    return deepest;
}

double GbrtModel::predict(std::span<const float> x) const {
    if (static_cast<int>(x.size()) != feature_dim)
        throw std::invalid_argument("predict: feature has dimension " + std::to_string(x.size()) +
                                    ", model expects " + std::to_string(feature_dim));
    double acc = base_score;
    for (int k = 0; k < best_round; ++k) acc += learning_rate * trees[static_cast<std::size_t>(k)].evaluate(x.data());
    return acc;
}

std::pair<std::vector<int>, std::vector<int>> split_dataset(std::size_t n, double fraction,
                                                            std::uint64_t seed) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    SplitMix64 rng(mix_seed(seed, kSplitStreamKey));
    deterministic_shuffle(idx, rng);
    const auto update_size = static_cast<std::size_t>(
        std::clamp<long long>(std::llround(fraction * static_cast<double>(n)), 1, static_cast<long long>(n) - 1));
    std::vector<int> update(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(update_size));
    std::vector<int> validation(idx.begin() + static_cast<std::ptrdiff_t>(update_size), idx.end());
    std::sort(update.begin(), update.end());
    std::sort(validation.begin(), validation.end());
    return {std::move(update), std::move(validation)};
}

TreeBuilder::TreeBuilder(const Eigen::MatrixXf& X, const GbrtParams& params) : X_(X), params_(params) {
    const Eigen::Index n = X.rows();
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        if (n > 0 && X.col(j).minCoeff() < X.col(j).maxCoeff())
            active_features_.push_back(static_cast<std::int32_t>(j));
    }
    pristine_order_.resize(active_features_.size() * static_cast<std::size_t>(n));
    // Sorting (value, index) pairs keeps the comparator free of gathers.
    std::vector<std::pair<float, std::int32_t>> keyed(static_cast<std::size_t>(n));
    for (std::size_t a = 0; a < active_features_.size(); ++a) {
        const float* col = X.col(active_features_[a]).data();
        for (std::int32_t i = 0; i < n; ++i) keyed[static_cast<std::size_t>(i)] = {col[i], i};
        std::sort(keyed.begin(), keyed.end());
        std::int32_t* ord = pristine_order_.data() + a * static_cast<std::size_t>(n);
        for (std::int32_t i = 0; i < n; ++i) ord[i] = keyed[static_cast<std::size_t>(i)].second;
    }
    order_.resize(pristine_order_.size());
    scratch_.resize(static_cast<std::size_t>(n));
}

namespace {

struct BestSplit {
    double gain = 0.0;
    std::int32_t feature = -1;
    float threshold = 0.0f;
    std::int32_t left_count = 0;
    double left_sum = 0.0;
};

struct LeafState {
    std::int32_t node = 0;
    std::int32_t begin = 0;
    std::int32_t end = 0;
    int depth = 0;
    double sum = 0.0;
    BestSplit best;
    // Slots (into the active feature list) that still vary inside this node.
    // A feature constant here is constant in every descendant, so both the
    // split scan and the partition drop it for good.
    std::vector<std::int32_t> varying;
};

}  // namespace

RegressionTree TreeBuilder::fit(std::span<const double> residuals) {
    const auto n = static_cast<std::int32_t>(X_.rows());
    RegressionTree tree;
    if (n == 0) {
        tree.nodes.push_back(TreeNode{});
        return tree;
    }

    order_ = pristine_order_;

    const auto find_best = [&](std::int32_t begin, std::int32_t end, int depth, double sum,
                               std::span<const std::int32_t> candidates,
                               std::vector<std::int32_t>* varying_out) {
        BestSplit best;
        const std::int32_t m = end - begin;
        if (depth >= params_.max_depth || m < 2 * params_.min_samples_leaf) return best;
        const double parent_term = sum * sum / m;
        for (const std::int32_t a : candidates) {
            const std::int32_t f = active_features_[static_cast<std::size_t>(a)];
            const float* col = X_.col(f).data();
            const std::int32_t* ord =
                order_.data() + static_cast<std::size_t>(a) * static_cast<std::size_t>(n) + begin;
            if (col[ord[0]] == col[ord[m - 1]]) continue;  // constant here and below
            varying_out->push_back(a);
            double left_sum = 0.0;
            float prev_val = col[ord[0]];
            for (std::int32_t k = 0; k < m; ++k) {
                const std::int32_t i = ord[k];
                const float v = col[i];
                if (v != prev_val) {
                    if (k >= params_.min_samples_leaf && m - k >= params_.min_samples_leaf) {
                        const double right_sum = sum - left_sum;
                        const double gain =
                            left_sum * left_sum / k + right_sum * right_sum / (m - k) - parent_term;
                        if (gain > best.gain) {
                            const double mid =
                                static_cast<double>(prev_val) +
                                (static_cast<double>(v) - static_cast<double>(prev_val)) / 2.0;
                            float threshold = static_cast<float>(mid);
                            if (!(threshold < v)) threshold = prev_val;
                            best = BestSplit{gain, f, threshold, k, left_sum};
                        }
                    }
                    prev_val = v;
                }
                left_sum += residuals[static_cast<std::size_t>(i)];
            }
        }
        return best;
    };

    double root_sum = 0.0;
    for (std::int32_t i = 0; i < n; ++i) root_sum += residuals[static_cast<std::size_t>(i)];

    tree.nodes.push_back(TreeNode{-1, 0.0f, -1, -1, root_sum / n});
    std::vector<std::int32_t> all_slots(active_features_.size());
    std::iota(all_slots.begin(), all_slots.end(), 0);

    std::vector<LeafState> leaves;
    {
        LeafState root{0, 0, n, 0, root_sum, BestSplit{}, {}};
        root.best = find_best(0, n, 0, root_sum, all_slots, &root.varying);
        leaves.push_back(std::move(root));
    }

    while (static_cast<int>(leaves.size()) < params_.num_leaves) {
        std::size_t pick = leaves.size();
        double best_gain = 0.0;
        for (std::size_t li = 0; li < leaves.size(); ++li) {
            if (leaves[li].best.feature >= 0 && leaves[li].best.gain > best_gain) {
                best_gain = leaves[li].best.gain;
                pick = li;
            }
        }
        if (pick == leaves.size()) break;

        const LeafState parent = std::move(leaves[pick]);
        const BestSplit& split = parent.best;
        const float* split_col = X_.col(split.feature).data();

        // Stable partition of the order segments still varying here.
        for (const std::int32_t a : parent.varying) {
            std::int32_t* seg = order_.data() +
                                static_cast<std::size_t>(a) * static_cast<std::size_t>(n) + parent.begin;
            const std::int32_t m = parent.end - parent.begin;
            std::memcpy(scratch_.data(), seg, static_cast<std::size_t>(m) * sizeof(std::int32_t));
            std::int32_t lo = 0, hi = split.left_count;
            for (std::int32_t k = 0; k < m; ++k) {
                const std::int32_t i = scratch_[static_cast<std::size_t>(k)];
                if (split_col[i] <= split.threshold)
                    seg[lo++] = i;
                else
                    seg[hi++] = i;
            }
        }

        const std::int32_t mid = parent.begin + split.left_count;
        const double right_sum = parent.sum - split.left_sum;
        const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{-1, 0.0f, -1, -1, split.left_sum / split.left_count});
        const auto right_id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{-1, 0.0f, -1, -1, right_sum / (parent.end - mid)});
        TreeNode& parent_node = tree.nodes[static_cast<std::size_t>(parent.node)];
        parent_node.feature = split.feature;
        parent_node.threshold = split.threshold;
        parent_node.left = left_id;
        parent_node.right = right_id;

        LeafState left{left_id, parent.begin, mid, parent.depth + 1, split.left_sum, BestSplit{}, {}};
        left.best = find_best(parent.begin, mid, parent.depth + 1, split.left_sum, parent.varying,
                              &left.varying);
        LeafState right{right_id, mid, parent.end, parent.depth + 1, right_sum, BestSplit{}, {}};
        right.best =
            find_best(mid, parent.end, parent.depth + 1, right_sum, parent.varying, &right.varying);
        leaves[static_cast<std::size_t>(pick)] = std::move(left);
        leaves.push_back(std::move(right));
    }
    return tree;
}

RegressionTree fit_tree(const Eigen::MatrixXf& X, std::span<const double> residuals,
                        const GbrtParams& params) {
    return TreeBuilder(X, params).fit(residuals);
}

namespace {

std::optional<GbrtModel> train_on_split(const Eigen::MatrixXf& Xu, const std::vector<double>& yu,
                                        const Eigen::MatrixXf& Xv, const std::vector<double>& yv,
                                        const GbrtParams& params);

}  // namespace

std::optional<GbrtModel> train(const Eigen::MatrixXf& X, std::span<const double> y,
                               const GbrtParams& params) {
    validate(params);
    const Eigen::Index n = X.rows();
    if (n < 5) return std::nullopt;

    const auto [update_idx, validation_idx] =
        split_dataset(static_cast<std::size_t>(n), params.split_fraction, params.rng_seed);
    const auto nu = static_cast<Eigen::Index>(update_idx.size());
    const auto nv = static_cast<Eigen::Index>(validation_idx.size());

    Eigen::MatrixXf Xu(nu, X.cols()), Xv(nv, X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const float* src = X.col(j).data();
        float* du = Xu.col(j).data();
        float* dv = Xv.col(j).data();
        for (Eigen::Index r = 0; r < nu; ++r) du[r] = src[update_idx[static_cast<std::size_t>(r)]];
        for (Eigen::Index r = 0; r < nv; ++r) dv[r] = src[validation_idx[static_cast<std::size_t>(r)]];
    }
    std::vector<double> yu(static_cast<std::size_t>(nu)), yv(static_cast<std::size_t>(nv));
    for (Eigen::Index r = 0; r < nu; ++r) yu[static_cast<std::size_t>(r)] = y[static_cast<std::size_t>(update_idx[static_cast<std::size_t>(r)])];
    for (Eigen::Index r = 0; r < nv; ++r) yv[static_cast<std::size_t>(r)] = y[static_cast<std::size_t>(validation_idx[static_cast<std::size_t>(r)])];
    return train_on_split(Xu, yu, Xv, yv, params);
}

namespace {

std::optional<GbrtModel> train_on_split(const Eigen::MatrixXf& Xu, const std::vector<double>& yu,
                                        const Eigen::MatrixXf& Xv, const std::vector<double>& yv,
                                        const GbrtParams& params) {
    const auto nu = Xu.rows();
    const auto nv = Xv.rows();
    GbrtModel model;
    model.learning_rate = params.learning_rate;
    model.feature_dim = static_cast<int>(Xu.cols());
    model.base_score = std::accumulate(yu.begin(), yu.end(), 0.0) / static_cast<double>(nu);

    std::vector<double> pred_u(yu.size(), model.base_score), pred_v(yv.size(), model.base_score);
    std::vector<double> residual(yu.size());
    TreeBuilder builder(Xu, params);

    double best_rmse = std::numeric_limits<double>::infinity();
    int stall = 0;
    for (int round = 1; round <= params.num_rounds; ++round) {
        for (std::size_t i = 0; i < yu.size(); ++i) residual[i] = yu[i] - pred_u[i];
        RegressionTree tree = builder.fit(residual);
        for (Eigen::Index i = 0; i < nu; ++i)
            pred_u[static_cast<std::size_t>(i)] += params.learning_rate * tree.evaluate_row(Xu, i);
        for (Eigen::Index i = 0; i < nv; ++i)
            pred_v[static_cast<std::size_t>(i)] += params.learning_rate * tree.evaluate_row(Xv, i);
        model.trees.push_back(std::move(tree));
        const double round_rmse = rmse(yv, pred_v);
        model.validation_rmse.push_back(round_rmse);
        if (round_rmse < best_rmse) {
            best_rmse = round_rmse;
            model.best_round = round;
            stall = 0;
        } else if (++stall >= params.early_stop_rounds) {
            break;
        }
    }
    model.trained_rounds = static_cast<int>(model.trees.size());
    return model;
}

// Column-major fill from shared feature rows in feature-blocked tiles.
void gather_rows(Eigen::MatrixXf& dst, std::span<const LabeledSample> samples,
                 const std::vector<int>& rows) {
    const Eigen::Index d = dst.cols();
    constexpr Eigen::Index kBlock = 32;
    for (Eigen::Index j0 = 0; j0 < d; j0 += kBlock) {
        const Eigen::Index j1 = std::min(j0 + kBlock, d);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const float* src = samples[static_cast<std::size_t>(rows[r])].feature->values.data();
            for (Eigen::Index j = j0; j < j1; ++j) dst(static_cast<Eigen::Index>(r), j) = src[j];
        }
    }
}

}  // namespace

std::optional<GbrtModel> train(std::span<const LabeledSample> samples, const GbrtParams& params) {
    validate(params);
    if (samples.size() < 5) return std::nullopt;
    const Eigen::Index dim = samples.front().feature->values.size();
    for (const LabeledSample& s : samples)
        if (s.feature->values.size() != dim)
            throw std::invalid_argument("train: inconsistent feature dimensions");

    const auto [update_idx, validation_idx] =
        split_dataset(samples.size(), params.split_fraction, params.rng_seed);
    Eigen::MatrixXf Xu(static_cast<Eigen::Index>(update_idx.size()), dim);
    Eigen::MatrixXf Xv(static_cast<Eigen::Index>(validation_idx.size()), dim);
    gather_rows(Xu, samples, update_idx);
    gather_rows(Xv, samples, validation_idx);
    std::vector<double> yu, yv;
    yu.reserve(update_idx.size());
    yv.reserve(validation_idx.size());
    for (int i : update_idx) yu.push_back(samples[static_cast<std::size_t>(i)].label_dbm);
    for (int i : validation_idx) yv.push_back(samples[static_cast<std::size_t>(i)].label_dbm);
    return train_on_split(Xu, yu, Xv, yv, params);
}

namespace {

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error("truncated model stream");
    return value;
}

}  // namespace

void save_model(const GbrtModel& model, std::ostream& out) {
    out.write(kModelMagic, 4);
    write_raw(out, kModelVersion);
    write_raw(out, static_cast<std::int32_t>(model.feature_dim));
    write_raw(out, model.base_score);
    write_raw(out, model.learning_rate);
    write_raw(out, static_cast<std::int32_t>(model.trained_rounds));
    write_raw(out, static_cast<std::int32_t>(model.best_round));
    write_raw(out, static_cast<std::uint64_t>(model.validation_rmse.size()));
    for (double v : model.validation_rmse) write_raw(out, v);
    write_raw(out, static_cast<std::uint64_t>(model.trees.size()));
    for (const RegressionTree& tree : model.trees) {
        write_raw(out, static_cast<std::uint64_t>(tree.nodes.size()));
        for (const TreeNode& node : tree.nodes) {
            write_raw(out, node.feature);
            write_raw(out, node.threshold);
            write_raw(out, node.left);
            write_raw(out, node.right);
            write_raw(out, node.value);
        }
    }
}

void save_model(const GbrtModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    save_model(model, out);
}

GbrtModel load_model(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kModelMagic, 4) != 0)
        throw std::runtime_error("not a model file (bad magic)");
    const auto version = read_raw<std::uint32_t>(in);
    if (version != kModelVersion)
        throw std::runtime_error("unsupported model version " + std::to_string(version));
    GbrtModel model;
    model.feature_dim = read_raw<std::int32_t>(in);
    model.base_score = read_raw<double>(in);
    model.learning_rate = read_raw<double>(in);
    model.trained_rounds = read_raw<std::int32_t>(in);
    model.best_round = read_raw<std::int32_t>(in);
    const auto n_val = read_raw<std::uint64_t>(in);
    model.validation_rmse.resize(n_val);
    for (auto& v : model.validation_rmse) v = read_raw<double>(in);
    const auto n_trees = read_raw<std::uint64_t>(in);
    model.trees.resize(n_trees);
    for (RegressionTree& tree : model.trees) {
        const auto n_nodes = read_raw<std::uint64_t>(in);
        tree.nodes.resize(n_nodes);
        for (TreeNode& node : tree.nodes) {
            node.feature = read_raw<std::int32_t>(in);
            node.threshold = read_raw<float>(in);
            node.left = read_raw<std::int32_t>(in);
            node.right = read_raw<std::int32_t>(in);
            node.value = read_raw<double>(in);
        }
    }
    return model;
}

GbrtModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return load_model(in);
}

}  // namespace lqp
