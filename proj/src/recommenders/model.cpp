#include <algorithm>
#include <numeric>

#include "blendrec/recommenders.hpp"
#include "../json_eigen.hpp"

namespace blendrec {

using detail::matrix_from_json;
using detail::matrix_to_json;
using detail::sparse_from_json;
using detail::sparse_to_json;
using detail::vector_from_json;
using detail::vector_to_json;

RatingStats RatingStats::from(const RatingsView& train)
{
    RatingStats s;
    s.user_sum = Eigen::VectorXd::Zero(train.num_users());
    s.item_sum = Eigen::VectorXd::Zero(train.num_items());
    s.user_count = Eigen::VectorXi::Zero(train.num_users());
    s.item_count = Eigen::VectorXi::Zero(train.num_items());
    double total = 0.0;
    for (std::size_t k = 0; k < train.size(); ++k) {
        const double r = train.value(k);
        s.user_sum[train.user(k)] += r;
        s.item_sum[train.item(k)] += r;
        ++s.user_count[train.user(k)];
        ++s.item_count[train.item(k)];
        total += r;
    }
    s.global_mean = train.empty() ? 0.0 : total / static_cast<double>(train.size());
    return s;
}

std::optional<double> RatingStats::user_mean(Index u) const
{
    if (u < 0 || u >= user_count.size() || user_count[u] == 0)
        return std::nullopt;
    return user_sum[u] / user_count[u];
}

std::optional<double> RatingStats::item_mean(Index i) const
{
    if (i < 0 || i >= item_count.size() || item_count[i] == 0)
        return std::nullopt;
    return item_sum[i] / item_count[i];
}

double RatingStats::fallback(Index u, Index i) const
{
    if (auto m = user_mean(u))
        return *m;
    if (auto m = item_mean(i))
        return *m;
    return global_mean;
}

BaselineModel train_baseline(const RatingsView& train)
{
    const auto stats = RatingStats::from(train);
    BaselineModel m;
    m.global_mean = stats.global_mean;
    m.user_seen = (stats.user_count.array() > 0).cast<int>();
    m.item_seen = (stats.item_count.array() > 0).cast<int>();
    m.user_means = Eigen::VectorXd::Constant(train.num_users(), stats.global_mean);
    m.item_means = Eigen::VectorXd::Constant(train.num_items(), stats.global_mean);
    for (Index u = 0; u < train.num_users(); ++u)
        if (m.user_seen[u])
            m.user_means[u] = stats.user_sum[u] / stats.user_count[u];
    for (Index i = 0; i < train.num_items(); ++i)
        if (m.item_seen[i])
            m.item_means[i] = stats.item_sum[i] / stats.item_count[i];
    return m;
}

double BaselineModel::predict(Family kind, Index u, Index i) const
{
    if (kind == Family::UserAverage)
        return u >= 0 && u < user_seen.size() && user_seen[u] ? user_means[u] : global_mean;
    return i >= 0 && i < item_seen.size() && item_seen[i] ? item_means[i] : global_mean;
}

RecommenderModel::RecommenderModel(RecommenderSpec spec, Body body, RatingStats stats)
    : spec_(std::move(spec)), body_(std::move(body)), stats_(std::move(stats))
{
}

std::optional<double> RecommenderModel::predict_raw(Index u, Index i) const
{
    return std::visit(
        [&](const auto& m) -> std::optional<double> {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, LatentFactorModel>) {
                if (u < 0 || i < 0 || u >= m.P.rows() || i >= m.Q.rows())
                    return std::nullopt;
                // untrained factors are just the random initialisation
                if (stats_.user_count[u] == 0 || stats_.item_count[i] == 0)
                    return std::nullopt;
                return m.predict_raw(u, i);
            } else if constexpr (std::is_same_v<M, AutoRecModel>) {
                if (u < 0 || u >= stats_.user_count.size() || stats_.user_count[u] == 0)
                    return std::nullopt;
                return m.predict_raw(u, i);
            } else if constexpr (std::is_same_v<M, BaselineModel>) {
                return m.predict(spec_.family, u, i);
            } else {
                return m.predict_raw(u, i);
            }
        },
        body_);
}

std::optional<double> RecommenderModel::predict(Index u, Index i) const
{
    auto raw = predict_raw(u, i);
    if (!raw)
        return std::nullopt;
    return clamp_rating(*raw);
}

double RecommenderModel::predict_or_fallback(Index u, Index i) const
{
    if (auto p = predict(u, i))
        return *p;
    return clamp_rating(stats_.fallback(u, i));
}

RecommenderModel train(const RecommenderSpec& spec, const RatingsView& train_data, const GenreCatalog* genres)
{
    if (train_data.empty())
        throw TrainingError("cannot train " + spec.label() + " on empty data");
    auto stats = RatingStats::from(train_data);
    switch (spec.family) {
    case Family::Ubcf:
    case Family::Ibcf: {
        const auto& p = std::get<NeighborhoodParams>(spec.params);
        SimilarityModel m;
        m.user_based = spec.family == Family::Ubcf;
        m.neighborhood_size = p.neighbors;
        m.by_user = train_data.matrix();
        m.by_user.makeCompressed();
        m.by_item = m.by_user;
        m.by_item.makeCompressed();
        m.has_mean = (stats.user_count.array() > 0).cast<int>();
        m.means = Eigen::VectorXd::Zero(train_data.num_users());
        for (Index u = 0; u < m.means.size(); ++u)
            if (m.has_mean[u])
                m.means[u] = stats.user_sum[u] / stats.user_count[u];
        m.similarities = m.user_based ? pearson_user_similarity(m.by_user, p.min_overlap)
                                      : adjusted_cosine_item_similarity(m.by_user, m.means, p.min_overlap);
        return {spec, std::move(m), std::move(stats)};
    }
    case Family::Svd:
        return {spec, train_svd(train_data, std::get<SvdParams>(spec.params), spec.seed), std::move(stats)};
    case Family::AutoRec:
        return {spec, train_autorec(train_data, std::get<AutoRecParams>(spec.params), spec.seed),
                std::move(stats)};
    case Family::Rfcb: {
        if (!genres)
            throw MissingInput("rfcb requires a genre catalog (movies file)");
        return {spec,
                train_rfcb(train_data, genres->feature_matrix(train_data.parent()),
                           std::get<RfcbParams>(spec.params), spec.seed),
                std::move(stats)};
    }
    case Family::UserAverage:
    case Family::MovieAverage: return {spec, train_baseline(train_data), std::move(stats)};
    }
    throw InvalidArgument("unhandled recommender family");
}

std::vector<Index> rank_recommendations(const RecommenderModel& model, Index u, std::span<const Index> candidates)
{
    std::vector<std::pair<double, Index>> scored;
    scored.reserve(candidates.size());
    for (Index i : candidates)
        scored.emplace_back(model.predict_or_fallback(u, i), i);
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<Index> out;
    out.reserve(scored.size());
    for (const auto& s : scored)
        out.push_back(s.second);
    return out;
}

namespace {

nlohmann::json stats_to_json(const RatingStats& s)
{
    return {{"user_sum", vector_to_json(s.user_sum)},
            {"item_sum", vector_to_json(s.item_sum)},
            {"user_count", vector_to_json(s.user_count)},
            {"item_count", vector_to_json(s.item_count)},
            {"global_mean", s.global_mean}};
}

RatingStats stats_from_json(const nlohmann::json& j)
{
    RatingStats s;
    s.user_sum = vector_from_json<Eigen::VectorXd>(j.at("user_sum"));
    s.item_sum = vector_from_json<Eigen::VectorXd>(j.at("item_sum"));
    s.user_count = vector_from_json<Eigen::VectorXi>(j.at("user_count"));
    s.item_count = vector_from_json<Eigen::VectorXi>(j.at("item_count"));
    s.global_mean = j.at("global_mean").get<double>();
    return s;
}

nlohmann::json body_to_json(const RecommenderModel::Body& body)
{
    return std::visit(
        [](const auto& m) -> nlohmann::json {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, SimilarityModel>) {
                return {{"user_based", m.user_based},
                        {"similarities", matrix_to_json(m.similarities)},
                        {"means", vector_to_json(m.means)},
                        {"has_mean", vector_to_json(m.has_mean)},
                        {"neighborhood_size", m.neighborhood_size},
                        {"ratings", sparse_to_json(m.by_user)}};
            } else if constexpr (std::is_same_v<M, LatentFactorModel>) {
                return {{"P", matrix_to_json(m.P)}, {"Q", matrix_to_json(m.Q)}};
            } else if constexpr (std::is_same_v<M, AutoRecModel>) {
                return {{"V", matrix_to_json(m.V)},    {"W", matrix_to_json(m.W)},
                        {"mu", vector_to_json(m.mu)},  {"b", vector_to_json(m.b)},
                        {"offset", m.offset},          {"inputs", sparse_to_json(m.inputs)}};
            } else if constexpr (std::is_same_v<M, UserForestModel>) {
                nlohmann::json forests = nlohmann::json::array();
                for (const auto& f : m.forests) {
                    nlohmann::json trees = nlohmann::json::array();
                    for (const auto& t : f)
                        trees.push_back(t.to_json());
                    forests.push_back(std::move(trees));
                }
                return {{"forests", forests},
                        {"fallback", vector_to_json(m.fallback)},
                        {"has_ratings", vector_to_json(m.has_ratings)},
                        {"item_features", matrix_to_json(m.item_features)}};
            } else {
                return {{"user_means", vector_to_json(m.user_means)},
                        {"item_means", vector_to_json(m.item_means)},
                        {"user_seen", vector_to_json(m.user_seen)},
                        {"item_seen", vector_to_json(m.item_seen)},
                        {"global_mean", m.global_mean}};
            }
        },
        body);
}

RecommenderModel::Body body_from_json(Family family, const nlohmann::json& j)
{
    switch (family) {
    case Family::Ubcf:
    case Family::Ibcf: {
        SimilarityModel m;
        m.user_based = j.at("user_based").get<bool>();
        m.similarities = matrix_from_json<Eigen::MatrixXd>(j.at("similarities"));
        m.means = vector_from_json<Eigen::VectorXd>(j.at("means"));
        m.has_mean = vector_from_json<Eigen::VectorXi>(j.at("has_mean"));
        m.neighborhood_size = j.at("neighborhood_size").get<int>();
        m.by_user = sparse_from_json<Eigen::SparseMatrix<double, Eigen::RowMajor>>(j.at("ratings"));
        m.by_item = m.by_user;
        return m;
    }
    case Family::Svd:
        return LatentFactorModel{matrix_from_json<Eigen::MatrixXd>(j.at("P")),
                                 matrix_from_json<Eigen::MatrixXd>(j.at("Q"))};
    case Family::AutoRec: {
        AutoRecModel m;
        m.V = matrix_from_json<Eigen::MatrixXd>(j.at("V"));
        m.W = matrix_from_json<RowMatrix>(j.at("W"));
        m.mu = vector_from_json<Eigen::VectorXd>(j.at("mu"));
        m.b = vector_from_json<Eigen::VectorXd>(j.at("b"));
        m.offset = j.at("offset").get<double>();
        m.inputs = sparse_from_json<Eigen::SparseMatrix<double>>(j.at("inputs"));
        m.refresh_hidden();
        return m;
    }
    case Family::Rfcb: {
        UserForestModel m;
        for (const auto& f : j.at("forests")) {
            std::vector<RegressionTree> trees;
            for (const auto& t : f)
                trees.push_back(RegressionTree::from_json(t));
            m.forests.push_back(std::move(trees));
        }
        m.fallback = vector_from_json<Eigen::VectorXd>(j.at("fallback"));
        m.has_ratings = vector_from_json<Eigen::VectorXi>(j.at("has_ratings"));
        m.item_features = matrix_from_json<Eigen::MatrixXd>(j.at("item_features"));
        return m;
    }
    case Family::UserAverage:
    case Family::MovieAverage: {
        BaselineModel m;
        m.user_means = vector_from_json<Eigen::VectorXd>(j.at("user_means"));
        m.item_means = vector_from_json<Eigen::VectorXd>(j.at("item_means"));
        m.user_seen = vector_from_json<Eigen::VectorXi>(j.at("user_seen"));
        m.item_seen = vector_from_json<Eigen::VectorXi>(j.at("item_seen"));
        m.global_mean = j.at("global_mean").get<double>();
        return m;
    }
    }
    throw InvalidArgument("unhandled recommender family");
}

constexpr int kModelFormatVersion = 1;

} // namespace

nlohmann::json RecommenderModel::to_json() const
{
    return {{"format", "blendrec-recommender"},
            {"version", kModelFormatVersion},
            {"spec", spec_.to_json()},
            {"stats", stats_to_json(stats_)},
            {"model", body_to_json(body_)}};
}

RecommenderModel RecommenderModel::from_json(const nlohmann::json& j)
{
    if (j.value("format", "") != "blendrec-recommender" || j.value("version", 0) != kModelFormatVersion)
        throw InvalidArgument("not a version 1 recommender model");
    auto spec = RecommenderSpec::from_json(j.at("spec"));
    auto body = body_from_json(spec.family, j.at("model"));
    return {std::move(spec), std::move(body), stats_from_json(j.at("stats"))};
}

} // namespace blendrec
