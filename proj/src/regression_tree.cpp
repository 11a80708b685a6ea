#include "blendrec/regression_tree.hpp"

#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

namespace blendrec {

namespace {

struct Builder {
    const Eigen::Ref<const Eigen::MatrixXd>& X;
    const Eigen::Ref<const Eigen::VectorXd>& y;
    TreeOptions options;
    std::mt19937_64& rng;
    std::vector<RegressionTree::Node> nodes;
    std::vector<int> features;
    std::vector<std::pair<double, double>> scratch;  // (feature value, target)

    int build(std::vector<Index>& rows, std::size_t begin, std::size_t end, int depth)
    {
        const std::size_t n = end - begin;
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t k = begin; k < end; ++k) {
            double t = y[rows[k]];
            sum += t;
            sum_sq += t * t;
        }
        const int id = static_cast<int>(nodes.size());
        nodes.push_back({});
        nodes.back().value = sum / static_cast<double>(n);

        const auto min_leaf = static_cast<std::size_t>(std::max(1, options.min_leaf));
        if (n < 2 * min_leaf || (options.max_depth > 0 && depth >= options.max_depth))
            return id;
        const double parent_sse = sum_sq - sum * sum / static_cast<double>(n);
        if (parent_sse <= 1e-12 * std::max(1.0, sum_sq))
            return id;

        // Partial Fisher-Yates draws the sampled feature subset.
        const int total = static_cast<int>(X.cols());
        const int draw = options.max_features > 0 ? std::min(options.max_features, total) : total;
        std::iota(features.begin(), features.end(), 0);
        for (int f = 0; f < draw; ++f) {
            int g = f + static_cast<int>(rng() % static_cast<std::uint64_t>(total - f));
            std::swap(features[static_cast<std::size_t>(f)], features[static_cast<std::size_t>(g)]);
        }

        double best_gain = 0.0;
        int best_feature = -1;
        double best_threshold = 0.0;
        for (int f = 0; f < draw; ++f) {
            const int feature = features[static_cast<std::size_t>(f)];
            scratch.resize(n);
            for (std::size_t k = 0; k < n; ++k) {
                Index r = rows[begin + k];
                scratch[k] = {X(r, feature), y[r]};
            }
            std::sort(scratch.begin(), scratch.end());
            if (scratch.front().first == scratch.back().first)
                continue;
            double left_sum = 0.0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                left_sum += scratch[k].second;
                const std::size_t left_n = k + 1;
                if (left_n < min_leaf)
                    continue;
                if (n - left_n < min_leaf)
                    break;
                if (scratch[k].first == scratch[k + 1].first)
                    continue;
                const double right_sum = sum - left_sum;
                // SSE reduction = sum_L^2/n_L + sum_R^2/n_R - sum^2/n
                const double gain = left_sum * left_sum / static_cast<double>(left_n) +
                                    right_sum * right_sum / static_cast<double>(n - left_n) -
                                    sum * sum / static_cast<double>(n);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = feature;
                    best_threshold = 0.5 * (scratch[k].first + scratch[k + 1].first);
                    // Midpoints can round onto the upper value.
                    if (!(best_threshold < scratch[k + 1].first))
                        best_threshold = scratch[k].first;
                }
            }
        }
        if (best_feature < 0 || best_gain <= 1e-12 * parent_sse)
            return id;

        auto mid = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                  rows.begin() + static_cast<std::ptrdiff_t>(end),
                                  [&](Index r) { return X(r, best_feature) <= best_threshold; });
        const auto split = static_cast<std::size_t>(mid - rows.begin());
        int left = build(rows, begin, split, depth + 1);
        int right = build(rows, split, end, depth + 1);
        auto& node = nodes[static_cast<std::size_t>(id)];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = left;
        node.right = right;
        return id;
    }
};

} // namespace

RegressionTree RegressionTree::fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                   const Eigen::Ref<const Eigen::VectorXd>& y,
                                   std::span<const Index> sample, const TreeOptions& options,
                                   std::mt19937_64& rng)
{
    if (sample.empty())
        throw TrainingError("regression tree needs at least one sample");
    if (X.rows() != y.size())
        throw InvalidArgument("feature/target row mismatch");
    Builder b{X, y, options, rng, {}, std::vector<int>(static_cast<std::size_t>(X.cols())), {}};
    std::vector<Index> rows(sample.begin(), sample.end());
    b.build(rows, 0, rows.size(), 0);
    RegressionTree tree;
    tree.nodes_ = std::move(b.nodes);
    return tree;
}

std::size_t RegressionTree::leaf_count() const
{
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

int RegressionTree::depth() const
{
    std::vector<int> d(nodes_.size(), 0);
    int best = 0;
    // Children are always created after their parent.
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
        best = std::max(best, d[n]);
        if (nodes_[n].feature >= 0) {
            d[static_cast<std::size_t>(nodes_[n].left)] = d[n] + 1;
            d[static_cast<std::size_t>(nodes_[n].right)] = d[n] + 1;
        }
    }
    return best;
}

nlohmann::json RegressionTree::to_json() const
{
    nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                   left = nlohmann::json::array(), right = nlohmann::json::array(),
                   value = nlohmann::json::array();
    for (const auto& n : nodes_) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(n.value);
    }
    return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

RegressionTree RegressionTree::from_json(const nlohmann::json& j)
{
    RegressionTree t;
    const auto& feature = j.at("feature");
    t.nodes_.resize(feature.size());
    for (std::size_t n = 0; n < feature.size(); ++n) {
        auto& node = t.nodes_[n];
        node.feature = feature[n].get<int>();
        node.threshold = j.at("threshold")[n].get<double>();
        node.left = j.at("left")[n].get<int>();
        node.right = j.at("right")[n].get<int>();
        node.value = j.at("value")[n].get<double>();
    }
    return t;
}

std::vector<Index> bootstrap_sample(Index n, std::mt19937_64& rng)
{
    std::vector<Index> s(static_cast<std::size_t>(n));
    for (auto& r : s)
        r = static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
    return s;
}

} // namespace blendrec
