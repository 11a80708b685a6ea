#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "blendrec/blenders.hpp"

namespace blendrec {

Standardizer Standardizer::fit(const Eigen::Ref<const Eigen::MatrixXd>& X)
{
    Standardizer s;
    s.mean = X.colwise().mean();
    s.scale.resize(X.cols());
    for (Index c = 0; c < X.cols(); ++c) {
        const double var = (X.col(c).array() - s.mean[c]).square().mean();
        s.scale[c] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
    return s;
}

Standardizer Standardizer::identity(Index columns)
{
    return {Eigen::RowVectorXd::Zero(columns), Eigen::RowVectorXd::Ones(columns)};
}

Eigen::MatrixXd Standardizer::apply(const Eigen::Ref<const Eigen::MatrixXd>& X) const
{
    return (X.rowwise() - mean).array().rowwise() / scale.array();
}

Eigen::VectorXd Standardizer::apply_row(const Eigen::Ref<const Eigen::VectorXd>& x) const
{
    return (x.array() - mean.transpose().array()) / scale.transpose().array();
}

RidgeSolution fit_ridge(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                        double lambda)
{
    if (X.rows() < 1 || X.rows() != y.size())
        throw InvalidArgument("ridge needs at least one row and matching targets");
    if (lambda < 0)
        throw InvalidArgument("ridge lambda must be non-negative");
    const Eigen::RowVectorXd x_mean = X.colwise().mean();
    const double y_mean = y.mean();
    const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
    const Eigen::VectorXd yc = y.array() - y_mean;

    RidgeSolution s;
    if (lambda > 0) {
        Eigen::MatrixXd A = Xc.transpose() * Xc;
        A.diagonal().array() += lambda;
        s.weights = A.llt().solve(Xc.transpose() * yc);
    } else {
        s.weights = Xc.completeOrthogonalDecomposition().solve(yc);
    }
    s.intercept = y_mean - x_mean.dot(s.weights);
    return s;
}

std::vector<double> quantile_edges(std::span<const double> values, int bins)
{
    if (bins < 1)
        throw InvalidArgument("bin count must be at least 1");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> edges;
    const auto n = sorted.size();
    for (int k = 1; k < bins && n > 0; ++k) {
        // Last row of bin k-1 when rows are dealt out in equal shares.
        const auto end = (n * static_cast<std::size_t>(k) + static_cast<std::size_t>(bins) - 1) /
                         static_cast<std::size_t>(bins);
        if (end == 0 || end >= n)
            continue;
        const double edge = sorted[end - 1];
        if (edges.empty() || edge > edges.back())
            edges.push_back(edge);
    }
    // An edge at the maximum would leave the last bin empty.
    while (!edges.empty() && edges.back() >= sorted.back())
        edges.pop_back();
    return edges;
}

int bin_index(std::span<const double> edges, double value)
{
    return static_cast<int>(std::lower_bound(edges.begin(), edges.end(), value) - edges.begin());
}

LinearBlenderModel fit_binned_lr(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                 const Eigen::Ref<const Eigen::VectorXd>& y, const FeatureLayout& layout,
                                 const LinearParams& params)
{
    if (X.cols() != layout.columns())
        throw InvalidArgument("feature matrix does not match blendset layout");
    if (X.rows() < 1)
        throw TrainingError("linear blender needs at least one row");
    LinearBlenderModel model;
    model.layout = layout;
    model.criterion = params.criterion;
    model.lambda = params.lambda;
    model.standardizer = params.standardize ? Standardizer::fit(X) : Standardizer::identity(X.cols());

    const Eigen::VectorXd criterion = X.col(criterion_column(layout, params.criterion));
    model.edges = quantile_edges(std::span<const double>(criterion.data(), static_cast<std::size_t>(criterion.size())),
                                 params.bins);
    if (static_cast<int>(model.edges.size()) + 1 < params.bins)
        model.warnings.push_back("criterion ties reduced " + std::to_string(params.bins) + " bins to " +
                                 std::to_string(model.edges.size() + 1));

    // Bins with fewer rows than parameters merge into a neighbour.
    const auto min_rows = static_cast<std::size_t>(layout.columns() + 1);
    std::vector<int> assignment(static_cast<std::size_t>(X.rows()));
    while (true) {
        std::vector<std::size_t> counts(model.edges.size() + 1, 0);
        for (Index r = 0; r < X.rows(); ++r) {
            assignment[static_cast<std::size_t>(r)] = bin_index(model.edges, criterion[r]);
            ++counts[static_cast<std::size_t>(assignment[static_cast<std::size_t>(r)])];
        }
        auto small = std::find_if(counts.begin(), counts.end(), [&](std::size_t c) { return c < min_rows; });
        if (small == counts.end() || model.edges.empty())
            break;
        const auto b = static_cast<std::size_t>(small - counts.begin());
        model.warnings.push_back("bin " + std::to_string(b) + " had " + std::to_string(*small) +
                                 " rows (< " + std::to_string(min_rows) + "), merged with a neighbour");
        model.edges.erase(model.edges.begin() + static_cast<std::ptrdiff_t>(b < model.edges.size() ? b : b - 1));
    }

    const Eigen::MatrixXd Z = model.standardizer.apply(X);
    const std::size_t bin_count = model.edges.size() + 1;
    for (std::size_t b = 0; b < bin_count; ++b) {
        std::vector<Index> rows;
        for (Index r = 0; r < X.rows(); ++r)
            if (assignment[static_cast<std::size_t>(r)] == static_cast<int>(b))
                rows.push_back(r);
        model.bins.push_back(fit_ridge(Z(rows, Eigen::placeholders::all), y(rows), params.lambda));
    }
    return model;
}

double LinearBlenderModel::predict_raw(const Eigen::Ref<const Eigen::VectorXd>& features) const
{
    const int b = bin_index(edges, features[criterion_column(layout, criterion)]);
    return bins[static_cast<std::size_t>(b)].predict(standardizer.apply_row(features));
}

} // namespace blendrec
