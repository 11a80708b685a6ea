#include <cmath>
#include <numeric>
#include <random>

#include "blendrec/blenders.hpp"
#include "blendrec/parallel.hpp"

namespace blendrec {

ForestBlenderModel fit_forest_blender(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                      const Eigen::Ref<const Eigen::VectorXd>& y, const ForestParams& params,
                                      std::uint64_t seed, int threads)
{
    if (params.trees < 1)
        throw InvalidArgument("forest needs at least one tree");
    if (X.rows() < 1)
        throw TrainingError("forest blender needs at least one row");
    ForestBlenderModel model;
    model.features_per_split = params.max_features > 0
                                   ? params.max_features
                                   : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(X.cols())))));
    TreeOptions options;
    options.max_features = model.features_per_split;
    options.min_leaf = params.min_leaf;

    model.trees.resize(static_cast<std::size_t>(params.trees));
    parallel_for(model.trees.size(), threads, [&](std::size_t t) {
        std::mt19937_64 rng(derive_seed(seed, "forest-tree", t));
        std::vector<Index> sample;
        if (params.bootstrap) {
            sample = bootstrap_sample(X.rows(), rng);
        } else {
            sample.resize(static_cast<std::size_t>(X.rows()));
            std::iota(sample.begin(), sample.end(), Index{0});
        }
        model.trees[t] = RegressionTree::fit(X, y, sample, options, rng);
    });
    return model;
}

double ForestBlenderModel::predict_raw(const Eigen::Ref<const Eigen::VectorXd>& features) const
{
    double sum = 0.0;
    for (const auto& tree : trees)
        sum += tree.predict(features);
    return sum / static_cast<double>(trees.size());
}

} // namespace blendrec
