#include <cmath>
#include <random>

#include "blendrec/recommenders.hpp"

namespace blendrec {

UserForestModel train_rfcb(const RatingsView& train, const Eigen::MatrixXd& item_features,
                           const RfcbParams& params, std::uint64_t seed)
{
    const Index M = train.num_users();
    const Index G = item_features.cols();
    UserForestModel model;
    model.item_features = item_features;
    model.forests.resize(static_cast<std::size_t>(M));
    model.fallback = Eigen::VectorXd::Zero(M);
    model.has_ratings = Eigen::VectorXi::Zero(M);

    std::vector<std::vector<std::size_t>> per_user(static_cast<std::size_t>(M));
    for (std::size_t k = 0; k < train.size(); ++k)
        per_user[static_cast<std::size_t>(train.user(k))].push_back(k);

    TreeOptions options;
    options.max_features = std::max<int>(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(G)))));
    options.min_leaf = params.min_leaf;
    options.max_depth = params.max_depth;

    for (Index u = 0; u < M; ++u) {
        const auto& rows = per_user[static_cast<std::size_t>(u)];
        if (rows.empty())
            continue;
        const auto n = static_cast<Index>(rows.size());
        Eigen::MatrixXd X(n, G);
        Eigen::VectorXd y(n);
        for (Index r = 0; r < n; ++r) {
            X.row(r) = item_features.row(train.item(rows[static_cast<std::size_t>(r)]));
            y[r] = train.value(rows[static_cast<std::size_t>(r)]);
        }
        model.has_ratings[u] = 1;
        model.fallback[u] = y.mean();

        std::mt19937_64 rng(derive_seed(seed, "rfcb-user", static_cast<std::uint64_t>(u)));
        auto& forest = model.forests[static_cast<std::size_t>(u)];
        forest.reserve(static_cast<std::size_t>(params.trees));
        for (int t = 0; t < params.trees; ++t) {
            auto sample = bootstrap_sample(n, rng);
            forest.push_back(RegressionTree::fit(X, y, sample, options, rng));
        }
    }
    return model;
}

std::optional<double> UserForestModel::predict_raw(Index u, const Eigen::Ref<const Eigen::VectorXd>& genres) const
{
    if (u < 0 || u >= has_ratings.size() || !has_ratings[u])
        return std::nullopt;
    const auto& forest = forests[static_cast<std::size_t>(u)];
    if (forest.empty())
        return fallback[u];
    double sum = 0.0;
    for (const auto& tree : forest)
        sum += tree.predict(genres);
    return sum / static_cast<double>(forest.size());
}

std::optional<double> UserForestModel::predict_raw(Index u, Index i) const
{
    if (i < 0 || i >= item_features.rows())
        return std::nullopt;
    return predict_raw(u, item_features.row(i).transpose());
}

} // namespace blendrec
