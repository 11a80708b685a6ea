#include <cstdio>

#include "blendrec/blenders.hpp"

namespace blendrec {

std::string blender_family_name(BlenderFamily f)
{
    switch (f) {
    case BlenderFamily::Linear: return "linear";
    case BlenderFamily::Forest: return "forest";
    case BlenderFamily::Mlp: return "mlp";
    }
    return "unknown";
}

BlenderFamily parse_blender_family(const std::string& name)
{
    if (name == "linear")
        return BlenderFamily::Linear;
    if (name == "forest")
        return BlenderFamily::Forest;
    if (name == "mlp")
        return BlenderFamily::Mlp;
    throw InvalidArgument("unknown blender family '" + name + "' (valid: linear, forest, mlp)");
}

std::string bin_criterion_name(BinCriterion c)
{
    return c == BinCriterion::UserSupport ? "user_support" : "movie_support";
}

BinCriterion parse_bin_criterion(const std::string& name)
{
    if (name == "user_support")
        return BinCriterion::UserSupport;
    if (name == "movie_support")
        return BinCriterion::MovieSupport;
    throw InvalidArgument("unknown bin criterion '" + name + "' (valid: user_support, movie_support)");
}

int criterion_column(const FeatureLayout& layout, BinCriterion c)
{
    return layout.predictions + (c == BinCriterion::UserSupport ? 0 : 1);
}

Eigen::VectorXd BlendRow::features() const
{
    Eigen::VectorXd x(predictions.size() + kMetaFeatureCount);
    x << predictions, meta.as_vector();
    return x;
}

BlenderSpec BlenderSpec::linear(double lambda, BinCriterion criterion, int bins, std::uint64_t seed)
{
    LinearParams p;
    p.lambda = lambda;
    p.criterion = criterion;
    p.bins = bins;
    return {BlenderFamily::Linear, p, seed};
}

BlenderSpec BlenderSpec::forest(int trees, std::uint64_t seed)
{
    ForestParams p;
    p.trees = trees;
    return {BlenderFamily::Forest, p, seed};
}

BlenderSpec BlenderSpec::mlp(std::vector<int> layers, std::uint64_t seed)
{
    MlpParams p;
    p.layers = std::move(layers);
    return {BlenderFamily::Mlp, p, seed};
}

std::string BlenderSpec::label() const
{
    return std::visit(
        [](const auto& p) -> std::string {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, LinearParams>) {
                char buf[96];
                std::snprintf(buf, sizeof buf, "linear(lambda=%g,%s,bins=%d)", p.lambda,
                              bin_criterion_name(p.criterion).c_str(), p.bins);
                return buf;
            } else if constexpr (std::is_same_v<P, ForestParams>) {
                return "forest(trees=" + std::to_string(p.trees) + ")";
            } else {
                std::string s = "mlp(";
                for (std::size_t l = 0; l < p.layers.size(); ++l)
                    s += (l ? "," : "") + std::to_string(p.layers[l]);
                return s + ")";
            }
        },
        params);
}

nlohmann::json BlenderSpec::to_json() const
{
    nlohmann::json params_json = std::visit(
        [](const auto& p) -> nlohmann::json {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, LinearParams>)
                return {{"lambda", p.lambda},
                        {"criterion", bin_criterion_name(p.criterion)},
                        {"bins", p.bins},
                        {"standardize", p.standardize}};
            else if constexpr (std::is_same_v<P, ForestParams>)
                return {{"trees", p.trees},
                        {"min_leaf", p.min_leaf},
                        {"max_features", p.max_features},
                        {"bootstrap", p.bootstrap}};
            else
                return {{"layers", p.layers},
                        {"epochs", p.epochs},
                        {"batch_size", p.batch_size},
                        {"learning_rate", p.learning_rate}};
        },
        params);
    return {{"family", blender_family_name(family)}, {"params", params_json}, {"seed", seed}};
}

BlenderSpec BlenderSpec::from_json(const nlohmann::json& j)
{
    BlenderSpec s;
    s.family = parse_blender_family(j.at("family").get<std::string>());
    s.seed = j.value("seed", std::uint64_t{0});
    const nlohmann::json p = j.value("params", nlohmann::json::object());
    switch (s.family) {
    case BlenderFamily::Linear: {
        LinearParams lp;
        lp.lambda = p.value("lambda", lp.lambda);
        lp.criterion = parse_bin_criterion(p.value("criterion", bin_criterion_name(lp.criterion)));
        lp.bins = p.value("bins", lp.bins);
        lp.standardize = p.value("standardize", lp.standardize);
        if (lp.lambda < 0 || lp.bins < 1)
            throw InvalidArgument("linear blender needs lambda >= 0 and bins >= 1");
        s.params = lp;
        break;
    }
    case BlenderFamily::Forest: {
        ForestParams fp;
        fp.trees = p.value("trees", fp.trees);
        fp.min_leaf = p.value("min_leaf", fp.min_leaf);
        fp.max_features = p.value("max_features", fp.max_features);
        fp.bootstrap = p.value("bootstrap", fp.bootstrap);
        if (fp.trees < 1 || fp.min_leaf < 1)
            throw InvalidArgument("forest blender needs trees >= 1 and min_leaf >= 1");
        s.params = fp;
        break;
    }
    case BlenderFamily::Mlp: {
        MlpParams mp;
        mp.layers = p.value("layers", mp.layers);
        mp.epochs = p.value("epochs", mp.epochs);
        mp.batch_size = p.value("batch_size", mp.batch_size);
        mp.learning_rate = p.value("learning_rate", mp.learning_rate);
        if (mp.layers.empty() || mp.layers.size() > 3)
            throw InvalidArgument("mlp blender needs 1 to 3 hidden layers");
        for (int width : mp.layers)
            if (width < 1)
                throw InvalidArgument("mlp layer sizes must be positive");
        if (mp.epochs < 0 || mp.batch_size < 1 || !(mp.learning_rate > 0))
            throw InvalidArgument("mlp blender needs epochs >= 0, batch_size >= 1, learning_rate > 0");
        s.params = mp;
        break;
    }
    }
    return s;
}

} // namespace blendrec
