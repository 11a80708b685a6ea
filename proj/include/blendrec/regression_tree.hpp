#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "blendrec/common.hpp"

namespace blendrec {

struct TreeOptions {
    int max_features = 0;  // <= 0 means all features
    int min_leaf = 1;
    int max_depth = 0;     // <= 0 means unlimited
};

// CART regression tree split by variance reduction. Features are sampled
// without replacement at every node.
class RegressionTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
    };

    RegressionTree() = default;

    // `sample` lists training row indices into X/y and may repeat rows
    // (bootstrap). Rows of X are observations.
    static RegressionTree fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                              const Eigen::Ref<const Eigen::VectorXd>& y,
                              std::span<const Index> sample, const TreeOptions& options,
                              std::mt19937_64& rng);

    template <typename Row>
    double predict(const Row& x) const
    {
        int n = 0;
        while (nodes_[static_cast<std::size_t>(n)].feature >= 0) {
            const auto& node = nodes_[static_cast<std::size_t>(n)];
            n = x[node.feature] <= node.threshold ? node.left : node.right;
        }
        return nodes_[static_cast<std::size_t>(n)].value;
    }

    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t leaf_count() const;
    int depth() const;

    nlohmann::json to_json() const;
    static RegressionTree from_json(const nlohmann::json& j);

private:
    std::vector<Node> nodes_;
};

// Bootstrap sample of size n drawn with replacement from [0, n).
std::vector<Index> bootstrap_sample(Index n, std::mt19937_64& rng);

} // namespace blendrec
