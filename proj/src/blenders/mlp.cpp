#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "blendrec/blenders.hpp"

namespace blendrec {

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z)
{
    return (1.0 + (-z.array()).exp()).inverse().matrix();
}

struct Adam {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    double bc1 = 1.0, bc2 = 1.0;

    explicit Adam(const MlpParameters& p)
    {
        for (std::size_t l = 0; l < p.weights.size(); ++l) {
            mw.push_back(Eigen::MatrixXd::Zero(p.weights[l].rows(), p.weights[l].cols()));
            vw.push_back(mw.back());
            mb.push_back(Eigen::VectorXd::Zero(p.biases[l].size()));
            vb.push_back(mb.back());
        }
    }

    template <typename T>
    static void update(T& param, const T& grad, T& m, T& v, double lr, double c1, double c2)
    {
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
        param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }

    void step(MlpParameters& p, const MlpParameters& g, double lr)
    {
        bc1 *= 0.9;
        bc2 *= 0.999;
        for (std::size_t l = 0; l < p.weights.size(); ++l) {
            update(p.weights[l], g.weights[l], mw[l], vw[l], lr, 1.0 - bc1, 1.0 - bc2);
            update(p.biases[l], g.biases[l], mb[l], vb[l], lr, 1.0 - bc1, 1.0 - bc2);
        }
    }
};

} // namespace

double mlp_loss(const MlpParameters& params, const Eigen::Ref<const Eigen::MatrixXd>& X,
                const Eigen::Ref<const Eigen::VectorXd>& y, MlpParameters* grad)
{
    const std::size_t L = params.weights.size();
    const auto n = static_cast<double>(X.rows());
    // Activations are stored one column per row of X.
    std::vector<Eigen::MatrixXd> act(L + 1);
    act[0] = X.transpose();
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::MatrixXd z = params.weights[l] * act[l];
        z.colwise() += params.biases[l];
        act[l + 1] = l + 1 < L ? sigmoid(z) : z;
    }
    const Eigen::RowVectorXd err = act[L].row(0) - y.transpose();
    const double loss = err.squaredNorm() / n;
    if (!grad)
        return loss;

    grad->weights.resize(L);
    grad->biases.resize(L);
    Eigen::MatrixXd delta = (2.0 / n) * err;
    for (std::size_t l = L; l-- > 0;) {
        grad->weights[l] = delta * act[l].transpose();
        grad->biases[l] = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back = params.weights[l].transpose() * delta;
            delta = back.array() * act[l].array() * (1.0 - act[l].array());
        }
    }
    return loss;
}

double MlpBlenderModel::predict_raw(const Eigen::Ref<const Eigen::VectorXd>& features) const
{
    Eigen::VectorXd a = standardizer.apply_row(features);
    const std::size_t L = params.weights.size();
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::VectorXd z = params.weights[l] * a + params.biases[l];
        a = l + 1 < L ? Eigen::VectorXd(sigmoid(z)) : z;
    }
    return a[0];
}

MlpBlenderModel init_mlp(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                         const std::vector<int>& layers, std::uint64_t seed)
{
    if (layers.empty())
        throw InvalidArgument("mlp needs at least one hidden layer");
    if (X.rows() < 1)
        throw TrainingError("mlp blender needs at least one row");
    MlpBlenderModel model;
    model.layers = layers;
    model.standardizer = Standardizer::fit(X);
    std::mt19937_64 rng(seed);
    Index fan_in = X.cols();
    for (int width : layers) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + width));
        std::uniform_real_distribution<double> init(-bound, bound);
        model.params.weights.push_back(Eigen::MatrixXd::NullaryExpr(width, fan_in, [&] { return init(rng); }));
        model.params.biases.push_back(Eigen::VectorXd::Zero(width));
        fan_in = width;
    }
    model.params.weights.push_back(Eigen::MatrixXd::Zero(1, fan_in));
    model.params.biases.push_back(Eigen::VectorXd::Constant(1, y.mean()));
    return model;
}

MlpBlenderModel fit_mlp_blender(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& y, const MlpParams& params,
                                std::uint64_t seed)
{
    auto model = init_mlp(X, y, params.layers, seed);
    const Eigen::MatrixXd Z = model.standardizer.apply(X);
    std::mt19937_64 rng(derive_seed(seed, "mlp-batches"));
    std::vector<Index> order(static_cast<std::size_t>(X.rows()));
    std::iota(order.begin(), order.end(), Index{0});

    Adam adam(model.params);
    MlpParameters grad;
    double lr = params.learning_rate;
    double best = std::numeric_limits<double>::infinity();
    const auto batch = static_cast<std::size_t>(params.batch_size);
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        for (std::size_t p = order.size(); p > 1; --p)
            std::swap(order[p - 1], order[rng() % p]);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t len = std::min(batch, order.size() - start);
            std::vector<Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(start + len));
            const double loss = mlp_loss(model.params, Z(idx, Eigen::placeholders::all), y(idx), &grad);
            if (!std::isfinite(loss))
                throw TrainingError("mlp training diverged in epoch " + std::to_string(epoch + 1));
            epoch_loss += loss * static_cast<double>(len);
            adam.step(model.params, grad, lr);
        }
        epoch_loss /= static_cast<double>(order.size());
        if (epoch_loss < best * (1.0 - 1e-4))
            best = epoch_loss;
        else
            lr *= 0.5;
    }
    return model;
}

} // namespace blendrec
