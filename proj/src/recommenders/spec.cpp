#include <array>
#include <utility>

#include "blendrec/recommenders.hpp"

namespace blendrec {

namespace {

constexpr std::array<std::pair<Family, const char*>, 7> kFamilies{{
    {Family::Ubcf, "ubcf"},
    {Family::Ibcf, "ibcf"},
    {Family::Svd, "svd"},
    {Family::AutoRec, "autorec"},
    {Family::Rfcb, "rfcb"},
    {Family::UserAverage, "user_avg"},
    {Family::MovieAverage, "movie_avg"},
}};

template <typename T>
void read_positive(const nlohmann::json& j, const char* key, T& out)
{
    if (!j.contains(key))
        return;
    out = j.at(key).get<T>();
    if (!(out > 0))
        throw InvalidArgument(std::string("hyper-parameter '") + key + "' must be positive");
}

} // namespace

std::string family_name(Family f)
{
    for (const auto& [family, name] : kFamilies)
        if (family == f)
            return name;
    return "unknown";
}

std::string valid_family_names()
{
    std::string out;
    for (const auto& [family, name] : kFamilies) {
        if (!out.empty())
            out += ", ";
        out += name;
    }
    return out;
}

Family parse_family(const std::string& name)
{
    for (const auto& [family, n] : kFamilies)
        if (name == n)
            return family;
    throw InvalidArgument("unknown recommender family '" + name + "' (valid: " + valid_family_names() + ")");
}

RecommenderSpec RecommenderSpec::defaults(Family family, std::uint64_t seed)
{
    RecommenderSpec s;
    s.family = family;
    s.seed = seed;
    switch (family) {
    case Family::Ubcf:
    case Family::Ibcf: s.params = NeighborhoodParams{}; break;
    case Family::Svd: s.params = SvdParams{}; break;
    case Family::AutoRec: s.params = AutoRecParams{}; break;
    case Family::Rfcb: s.params = RfcbParams{}; break;
    case Family::UserAverage:
    case Family::MovieAverage: s.params = BaselineParams{}; break;
    }
    return s;
}

std::string RecommenderSpec::label() const
{
    const std::string name = family_name(family);
    return std::visit(
        [&](const auto& p) -> std::string {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, NeighborhoodParams>)
                return name + "-" + std::to_string(p.neighbors);
            else if constexpr (std::is_same_v<P, SvdParams>)
                return name + "-" + std::to_string(p.factors);
            else if constexpr (std::is_same_v<P, AutoRecParams>)
                return name + "-" + std::to_string(p.hidden);
            else if constexpr (std::is_same_v<P, RfcbParams>)
                return name + "-" + std::to_string(p.trees);
            else
                return name;
        },
        params);
}

nlohmann::json RecommenderSpec::to_json() const
{
    nlohmann::json params_json = std::visit(
        [](const auto& p) -> nlohmann::json {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, NeighborhoodParams>)
                return {{"neighbors", p.neighbors}, {"min_overlap", p.min_overlap}};
            else if constexpr (std::is_same_v<P, SvdParams>)
                return {{"factors", p.factors},
                        {"learning_rate", p.learning_rate},
                        {"regularization", p.regularization},
                        {"epochs", p.epochs},
                        {"init_stddev", p.init_stddev}};
            else if constexpr (std::is_same_v<P, AutoRecParams>)
                return {{"hidden", p.hidden},
                        {"regularization", p.regularization},
                        {"epochs", p.epochs},
                        {"learning_rate", p.learning_rate},
                        {"batch_size", p.batch_size}};
            else if constexpr (std::is_same_v<P, RfcbParams>)
                return {{"trees", p.trees}, {"max_depth", p.max_depth}, {"min_leaf", p.min_leaf}};
            else
                return nlohmann::json::object();
        },
        params);
    return {{"family", family_name(family)}, {"params", params_json}, {"seed", seed}};
}

RecommenderSpec RecommenderSpec::from_json(const nlohmann::json& j)
{
    auto spec = defaults(parse_family(j.at("family").get<std::string>()),
                         j.value("seed", std::uint64_t{0}));
    const nlohmann::json params = j.value("params", nlohmann::json::object());
    std::visit(
        [&](auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, NeighborhoodParams>) {
                read_positive(params, "neighbors", p.neighbors);
                read_positive(params, "min_overlap", p.min_overlap);
            } else if constexpr (std::is_same_v<P, SvdParams>) {
                read_positive(params, "factors", p.factors);
                read_positive(params, "learning_rate", p.learning_rate);
                read_positive(params, "epochs", p.epochs);
                read_positive(params, "init_stddev", p.init_stddev);
                if (params.contains("regularization")) {
                    p.regularization = params.at("regularization").get<double>();
                    if (p.regularization < 0)
                        throw InvalidArgument("hyper-parameter 'regularization' must be non-negative");
                }
            } else if constexpr (std::is_same_v<P, AutoRecParams>) {
                read_positive(params, "hidden", p.hidden);
                read_positive(params, "epochs", p.epochs);
                read_positive(params, "learning_rate", p.learning_rate);
                read_positive(params, "batch_size", p.batch_size);
                if (params.contains("regularization")) {
                    p.regularization = params.at("regularization").get<double>();
                    if (p.regularization < 0)
                        throw InvalidArgument("hyper-parameter 'regularization' must be non-negative");
                }
            } else if constexpr (std::is_same_v<P, RfcbParams>) {
                read_positive(params, "trees", p.trees);
                read_positive(params, "max_depth", p.max_depth);
                read_positive(params, "min_leaf", p.min_leaf);
            }
        },
        spec.params);
    return spec;
}

} // namespace blendrec
