#include "blendrec/blenders.hpp"
#include "../json_eigen.hpp"

namespace blendrec {

using detail::matrix_from_json;
using detail::matrix_to_json;
using detail::vector_from_json;
using detail::vector_to_json;

namespace {

constexpr int kBlenderFormatVersion = 1;

nlohmann::json standardizer_to_json(const Standardizer& s)
{
    return {{"mean", vector_to_json(s.mean)}, {"scale", vector_to_json(s.scale)}};
}

Standardizer standardizer_from_json(const nlohmann::json& j)
{
    return {vector_from_json<Eigen::RowVectorXd>(j.at("mean")), vector_from_json<Eigen::RowVectorXd>(j.at("scale"))};
}

} // namespace

std::vector<std::string> BlenderModel::warnings() const
{
    if (const auto* linear = std::get_if<LinearBlenderModel>(&body_))
        return linear->warnings;
    return {};
}

double BlenderModel::predict_raw(const Eigen::Ref<const Eigen::VectorXd>& features) const
{
    if (features.size() != layout_.columns())
        throw InvalidArgument("blend row has " + std::to_string(features.size()) + " features, model expects " +
                              std::to_string(layout_.columns()));
    return std::visit([&](const auto& m) { return m.predict_raw(features); }, body_);
}

Eigen::VectorXd BlenderModel::predict_all(const Eigen::Ref<const Eigen::MatrixXd>& X) const
{
    Eigen::VectorXd out(X.rows());
    for (Index r = 0; r < X.rows(); ++r)
        out[r] = predict(X.row(r).transpose());
    return out;
}

BlenderModel fit_blender(const BlenderSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                         const Eigen::Ref<const Eigen::VectorXd>& y, const FeatureLayout& layout, int threads)
{
    if (X.cols() != layout.columns())
        throw InvalidArgument("feature matrix does not match blendset layout");
    switch (spec.family) {
    case BlenderFamily::Linear:
        return {spec, layout, fit_binned_lr(X, y, layout, std::get<LinearParams>(spec.params))};
    case BlenderFamily::Forest:
        return {spec, layout, fit_forest_blender(X, y, std::get<ForestParams>(spec.params), spec.seed, threads)};
    case BlenderFamily::Mlp:
        return {spec, layout, fit_mlp_blender(X, y, std::get<MlpParams>(spec.params), spec.seed)};
    }
    throw InvalidArgument("unhandled blender family");
}

nlohmann::json BlenderModel::to_json() const
{
    nlohmann::json body = std::visit(
        [](const auto& m) -> nlohmann::json {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, LinearBlenderModel>) {
                nlohmann::json bins = nlohmann::json::array();
                for (const auto& b : m.bins)
                    bins.push_back({{"weights", vector_to_json(b.weights)}, {"intercept", b.intercept}});
                return {{"criterion", bin_criterion_name(m.criterion)},
                        {"lambda", m.lambda},
                        {"edges", m.edges},
                        {"bins", bins},
                        {"standardizer", standardizer_to_json(m.standardizer)},
                        {"warnings", m.warnings}};
            } else if constexpr (std::is_same_v<M, ForestBlenderModel>) {
                nlohmann::json trees = nlohmann::json::array();
                for (const auto& t : m.trees)
                    trees.push_back(t.to_json());
                return {{"features_per_split", m.features_per_split}, {"trees", trees}};
            } else {
                nlohmann::json weights = nlohmann::json::array(), biases = nlohmann::json::array();
                for (std::size_t l = 0; l < m.params.weights.size(); ++l) {
                    weights.push_back(matrix_to_json(m.params.weights[l]));
                    biases.push_back(vector_to_json(m.params.biases[l]));
                }
                return {{"layers", m.layers},
                        {"standardizer", standardizer_to_json(m.standardizer)},
                        {"weights", weights},
                        {"biases", biases}};
            }
        },
        body_);
    return {{"format", "blendrec-blender"},
            {"version", kBlenderFormatVersion},
            {"spec", spec_.to_json()},
            {"prediction_columns", layout_.predictions},
            {"model", body}};
}

BlenderModel BlenderModel::from_json(const nlohmann::json& j)
{
    if (j.value("format", "") != "blendrec-blender" || j.value("version", 0) != kBlenderFormatVersion)
        throw InvalidArgument("not a version 1 blender model");
    auto spec = BlenderSpec::from_json(j.at("spec"));
    FeatureLayout layout{j.at("prediction_columns").get<int>()};
    const auto& m = j.at("model");
    switch (spec.family) {
    case BlenderFamily::Linear: {
        LinearBlenderModel lm;
        lm.layout = layout;
        lm.criterion = parse_bin_criterion(m.at("criterion").get<std::string>());
        lm.lambda = m.at("lambda").get<double>();
        lm.edges = m.at("edges").get<std::vector<double>>();
        for (const auto& b : m.at("bins"))
            lm.bins.push_back({vector_from_json<Eigen::VectorXd>(b.at("weights")), b.at("intercept").get<double>()});
        lm.standardizer = standardizer_from_json(m.at("standardizer"));
        lm.warnings = m.at("warnings").get<std::vector<std::string>>();
        return {std::move(spec), layout, std::move(lm)};
    }
    case BlenderFamily::Forest: {
        ForestBlenderModel fm;
        fm.features_per_split = m.at("features_per_split").get<int>();
        for (const auto& t : m.at("trees"))
            fm.trees.push_back(RegressionTree::from_json(t));
        return {std::move(spec), layout, std::move(fm)};
    }
    case BlenderFamily::Mlp: {
        MlpBlenderModel mm;
        mm.layers = m.at("layers").get<std::vector<int>>();
        mm.standardizer = standardizer_from_json(m.at("standardizer"));
        for (const auto& w : m.at("weights"))
            mm.params.weights.push_back(matrix_from_json<Eigen::MatrixXd>(w));
        for (const auto& b : m.at("biases"))
            mm.params.biases.push_back(vector_from_json<Eigen::VectorXd>(b));
        return {std::move(spec), layout, std::move(mm)};
    }
    }
    throw InvalidArgument("unhandled blender family");
}

} // namespace blendrec
