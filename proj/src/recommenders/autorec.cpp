#include <cmath>
#include <numeric>
#include <random>

#include "blendrec/recommenders.hpp"

namespace blendrec {

namespace {

using SparseCol = Eigen::SparseMatrix<double>;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Eigen::VectorXd encode(const AutoRecModel& m, Index i)
{
    Eigen::VectorXd z = m.mu;
    for (SparseCol::InnerIterator it(m.inputs, i); it; ++it)
        z.noalias() += m.V.col(it.row()) * (it.value() - m.offset);
    return z.unaryExpr([](double x) { return sigmoid(x); });
}

// Adam state for one parameter block.
template <typename Matrix>
struct AdamSlot {
    Matrix m, v;
    explicit AdamSlot(const Matrix& like) : m(Matrix::Zero(like.rows(), like.cols())), v(m) {}

    template <typename Param, typename Grad>
    void step(Param& param, const Grad& grad, double lr, double bc1, double bc2)
    {
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
        param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
    }
};

} // namespace

void AutoRecModel::refresh_hidden()
{
    hidden.resize(V.rows(), inputs.cols());
    for (Index i = 0; i < inputs.cols(); ++i)
        hidden.col(i) = encode(*this, i);
}

Eigen::VectorXd AutoRecModel::reconstruct(Index i) const
{
    return W * encode(*this, i) + b;
}

std::optional<double> AutoRecModel::predict_raw(Index u, Index i) const
{
    if (u < 0 || i < 0 || u >= W.rows() || i >= inputs.cols())
        return std::nullopt;
    if (inputs.col(i).nonZeros() == 0)
        return std::nullopt;
    return W.row(u).dot(hidden.col(i)) + b[u] + offset;
}

double autorec_loss(const AutoRecModel& model, std::span<const Index> items, double regularization,
                    double weight_scale, AutoRecGradient* grad)
{
    const Index K = model.V.rows();
    if (grad) {
        grad->V.setZero(model.V.rows(), model.V.cols());
        grad->W.setZero(model.W.rows(), model.W.cols());
        grad->mu.setZero(K);
        grad->b.setZero(model.b.size());
    }
    double loss = 0.0;
    Eigen::VectorXd dh(K), dz(K);
    for (Index i : items) {
        const Eigen::VectorXd h = encode(model, i);
        if (grad)
            dh.setZero();
        for (SparseCol::InnerIterator it(model.inputs, i); it; ++it) {
            const Index u = it.row();
            const double target = it.value() - model.offset;
            const double out = model.W.row(u).dot(h) + model.b[u];
            const double e = out - target;
            loss += e * e;
            if (grad) {
                grad->W.row(u).noalias() += 2.0 * e * h.transpose();
                grad->b[u] += 2.0 * e;
                dh.noalias() += 2.0 * e * model.W.row(u).transpose();
            }
        }
        if (grad) {
            dz = dh.array() * h.array() * (1.0 - h.array());
            grad->mu += dz;
            for (SparseCol::InnerIterator it(model.inputs, i); it; ++it)
                grad->V.col(it.row()).noalias() += dz * (it.value() - model.offset);
        }
    }
    const double reg = weight_scale * regularization;
    loss += 0.5 * reg * (model.V.squaredNorm() + model.W.squaredNorm());
    if (grad) {
        grad->V += reg * model.V;
        grad->W += reg * model.W;
    }
    return loss;
}

AutoRecModel train_autorec(const RatingsView& train, const AutoRecParams& params, std::uint64_t seed)
{
    const Index M = train.num_users(), N = train.num_items(), K = params.hidden;
    AutoRecModel model;
    model.inputs = train.matrix();
    model.inputs.makeCompressed();
    model.offset = model.inputs.sum() / static_cast<double>(train.size());

    std::mt19937_64 rng(seed);
    const double bound = std::sqrt(6.0 / static_cast<double>(M + K));
    std::uniform_real_distribution<double> init(-bound, bound);
    model.V = Eigen::MatrixXd::NullaryExpr(K, M, [&] { return init(rng); });
    model.W = Eigen::MatrixXd::NullaryExpr(M, K, [&] { return init(rng); });
    model.mu = Eigen::VectorXd::Zero(K);
    model.b = Eigen::VectorXd::Zero(M);

    std::vector<Index> items;
    for (Index i = 0; i < N; ++i)
        if (model.inputs.col(i).nonZeros() > 0)
            items.push_back(i);

    AdamSlot<Eigen::MatrixXd> adam_v(model.V);
    AdamSlot<RowMatrix> adam_w(model.W);
    AdamSlot<Eigen::VectorXd> adam_mu(model.mu), adam_b(model.b);
    AutoRecGradient grad;
    const auto batch = static_cast<std::size_t>(params.batch_size);
    double bc1 = 1.0, bc2 = 1.0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        for (std::size_t p = items.size(); p > 1; --p)
            std::swap(items[p - 1], items[rng() % p]);
        for (std::size_t start = 0; start < items.size(); start += batch) {
            std::span<const Index> chunk(items.data() + start, std::min(batch, items.size() - start));
            const double scale = static_cast<double>(chunk.size()) / static_cast<double>(items.size());
            autorec_loss(model, chunk, params.regularization, scale, &grad);
            bc1 *= 0.9;
            bc2 *= 0.999;
            adam_v.step(model.V, grad.V, params.learning_rate, 1.0 - bc1, 1.0 - bc2);
            adam_w.step(model.W, grad.W, params.learning_rate, 1.0 - bc1, 1.0 - bc2);
            adam_mu.step(model.mu, grad.mu, params.learning_rate, 1.0 - bc1, 1.0 - bc2);
            adam_b.step(model.b, grad.b, params.learning_rate, 1.0 - bc1, 1.0 - bc2);
        }
        if (!model.V.allFinite() || !model.W.allFinite())
            throw TrainingError("AutoRec diverged in epoch " + std::to_string(epoch + 1));
    }
    model.refresh_hidden();
    return model;
}

} // namespace blendrec
