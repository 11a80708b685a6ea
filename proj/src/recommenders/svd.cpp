#include <cmath>
#include <numeric>
#include <random>

#include "blendrec/recommenders.hpp"

namespace blendrec {

double svd_objective(const LatentFactorModel& model, const RatingsView& data, double regularization)
{
    if (data.empty())
        return 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        const Index u = data.user(k), i = data.item(k);
        const double e = data.value(k) - model.predict_raw(u, i);
        total += e * e + regularization * (model.P.row(u).squaredNorm() + model.Q.row(i).squaredNorm());
    }
    return total / static_cast<double>(data.size());
}

LatentFactorModel train_svd(const RatingsView& train, const SvdParams& params, std::uint64_t seed,
                            SvdTrainingTrace* trace)
{
    const Index F = params.factors;
    double mean = 0.0;
    for (std::size_t k = 0; k < train.size(); ++k)
        mean += train.value(k);
    mean /= static_cast<double>(train.size());

    // Centre initial factors so that q_i . p_u starts near the global mean;
    // the model has no bias terms to absorb it.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> init(std::sqrt(mean / static_cast<double>(F)), params.init_stddev);
    LatentFactorModel model;
    model.P = Eigen::MatrixXd::NullaryExpr(train.num_users(), F, [&] { return init(rng); });
    model.Q = Eigen::MatrixXd::NullaryExpr(train.num_items(), F, [&] { return init(rng); });

    if (trace)
        trace->objective.push_back(svd_objective(model, train, params.regularization));

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const double lr = params.learning_rate, reg = params.regularization;
    Eigen::RowVectorXd p_old(F);
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        for (std::size_t p = order.size(); p > 1; --p)
            std::swap(order[p - 1], order[rng() % p]);
        for (std::size_t k : order) {
            const Index u = train.user(k), i = train.item(k);
            auto pu = model.P.row(u);
            auto qi = model.Q.row(i);
            const double e = train.value(k) - qi.dot(pu);
            p_old = pu;
            pu += lr * (e * qi - reg * pu);
            qi += lr * (e * p_old - reg * qi);
        }
        if (!model.P.allFinite() || !model.Q.allFinite())
            throw TrainingError("SVD diverged in epoch " + std::to_string(epoch + 1));
        if (trace)
            trace->objective.push_back(svd_objective(model, train, params.regularization));
    }
    return model;
}

} // namespace blendrec
