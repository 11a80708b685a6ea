#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <nlohmann/json.hpp>

#include "blendrec/common.hpp"
#include "blendrec/data.hpp"
#include "blendrec/regression_tree.hpp"

namespace blendrec {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Family { Ubcf, Ibcf, Svd, AutoRec, Rfcb, UserAverage, MovieAverage };

std::string family_name(Family f);
// Throws InvalidArgument listing the valid names.
Family parse_family(const std::string& name);
std::string valid_family_names();

struct NeighborhoodParams {
    int neighbors = 20;
    int min_overlap = 2;
};

struct SvdParams {
    int factors = 50;
    double learning_rate = 0.005;
    double regularization = 0.02;
    int epochs = 30;
    double init_stddev = 0.1;
};

struct AutoRecParams {
    int hidden = 300;
    double regularization = 1.0;
    int epochs = 100;
    double learning_rate = 0.001;
    int batch_size = 32;
};

struct RfcbParams {
    int trees = 30;
    int max_depth = 8;
    int min_leaf = 2;
};

struct BaselineParams {};

using RecommenderParams =
    std::variant<NeighborhoodParams, SvdParams, AutoRecParams, RfcbParams, BaselineParams>;

struct RecommenderSpec {
    Family family = Family::UserAverage;
    RecommenderParams params = BaselineParams{};
    std::uint64_t seed = 0;

    // Spec with the family's default hyper-parameters.
    static RecommenderSpec defaults(Family family, std::uint64_t seed = 0);

    std::string label() const;
    nlohmann::json to_json() const;
    // Missing hyper-parameters take their defaults; non-positive values throw.
    static RecommenderSpec from_json(const nlohmann::json& j);
};

// Per-user / per-item rating statistics of a training set; used for the
// baselines, the cold-start fallback chain, and meta-features.
struct RatingStats {
    Eigen::VectorXd user_sum, item_sum;
    Eigen::VectorXi user_count, item_count;
    double global_mean = 0.0;

    static RatingStats from(const RatingsView& train);
    std::optional<double> user_mean(Index u) const;
    std::optional<double> item_mean(Index i) const;
    // user mean -> item mean -> global mean
    double fallback(Index u, Index i) const;
};

// UBCF and IBCF share the same representation; `user_based` selects which
// side the similarity matrix lives on.
struct SimilarityModel {
    bool user_based = true;
    Eigen::MatrixXd similarities;
    Eigen::VectorXd means;       // per-user average rating
    Eigen::VectorXi has_mean;    // 1 where the user has training ratings
    int neighborhood_size = 20;
    Eigen::SparseMatrix<double, Eigen::RowMajor> by_user;  // M x N training ratings
    Eigen::SparseMatrix<double, Eigen::ColMajor> by_item;  // same, column access

    std::optional<double> predict_raw(Index u, Index i) const;
};

// Pearson correlation over co-rated items between users.
Eigen::MatrixXd pearson_user_similarity(const Eigen::SparseMatrix<double, Eigen::RowMajor>& ratings,
                                        int min_overlap);
// Cosine over co-rating users of user-mean-centred ratings between items.
Eigen::MatrixXd adjusted_cosine_item_similarity(const Eigen::SparseMatrix<double, Eigen::RowMajor>& ratings,
                                                const Eigen::VectorXd& user_means, int min_overlap);

struct LatentFactorModel {
    Eigen::MatrixXd P;  // M x F user factors
    Eigen::MatrixXd Q;  // N x F item factors

    Index factors() const { return P.cols(); }
    double predict_raw(Index u, Index i) const { return Q.row(i).dot(P.row(u)); }
};

// Mean squared error over the view plus reg * (|p_u|^2 + |q_i|^2) averaged over ratings.
double svd_objective(const LatentFactorModel& model, const RatingsView& data, double regularization);

struct SvdTrainingTrace {
    std::vector<double> objective;  // after init, then after each epoch
};

LatentFactorModel train_svd(const RatingsView& train, const SvdParams& params, std::uint64_t seed,
                            SvdTrainingTrace* trace = nullptr);

// Item-based single-hidden-layer autoencoder. Inputs are item columns over
// users, centred by `offset`; unobserved entries are zero.
struct AutoRecModel {
    Eigen::MatrixXd V;  // K x M encoder
    RowMatrix W;        // M x K decoder
    Eigen::VectorXd mu;  // K hidden biases
    Eigen::VectorXd b;   // M output biases
    double offset = 0.0;
    Eigen::SparseMatrix<double> inputs;  // M x N centred training ratings
    Eigen::MatrixXd hidden;              // K x N cached g(V r_i + mu)

    Index hidden_size() const { return V.rows(); }
    // Recomputes `hidden` from the parameters and inputs.
    void refresh_hidden();
    Eigen::VectorXd reconstruct(Index i) const;
    std::optional<double> predict_raw(Index u, Index i) const;
};

struct AutoRecGradient {
    Eigen::MatrixXd V;
    RowMatrix W;
    Eigen::VectorXd mu;
    Eigen::VectorXd b;
};

// Sum over observed entries of the selected items of squared reconstruction
// error plus (weight_scale * regularization / 2)(|V|^2 + |W|^2).
double autorec_loss(const AutoRecModel& model, std::span<const Index> items, double regularization,
                    double weight_scale = 1.0, AutoRecGradient* grad = nullptr);

AutoRecModel train_autorec(const RatingsView& train, const AutoRecParams& params, std::uint64_t seed);

struct UserForestModel {
    std::vector<std::vector<RegressionTree>> forests;  // per user, empty when untrained
    Eigen::VectorXd fallback;                          // per-user mean
    Eigen::VectorXi has_ratings;
    Eigen::MatrixXd item_features;                     // N x G genre vectors

    std::optional<double> predict_raw(Index u, Index i) const;
    std::optional<double> predict_raw(Index u, const Eigen::Ref<const Eigen::VectorXd>& genres) const;
};

UserForestModel train_rfcb(const RatingsView& train, const Eigen::MatrixXd& item_features,
                           const RfcbParams& params, std::uint64_t seed);

struct BaselineModel {
    Eigen::VectorXd user_means;
    Eigen::VectorXd item_means;
    Eigen::VectorXi user_seen, item_seen;
    double global_mean = 0.0;

    double predict(Family kind, Index u, Index i) const;
};

BaselineModel train_baseline(const RatingsView& train);

class RecommenderModel {
public:
    using Body = std::variant<SimilarityModel, LatentFactorModel, AutoRecModel, UserForestModel, BaselineModel>;

    RecommenderModel(RecommenderSpec spec, Body body, RatingStats stats);

    const RecommenderSpec& spec() const { return spec_; }
    const Body& body() const { return body_; }
    const RatingStats& stats() const { return stats_; }

    // Family prediction before clamping; nullopt signals cold start.
    std::optional<double> predict_raw(Index u, Index i) const;
    // Clamped family prediction; nullopt signals cold start.
    std::optional<double> predict(Index u, Index i) const;
    // Total: family -> user mean -> item mean -> global mean, clamped.
    double predict_or_fallback(Index u, Index i) const;

    nlohmann::json to_json() const;
    static RecommenderModel from_json(const nlohmann::json& j);

private:
    RecommenderSpec spec_;
    Body body_;
    RatingStats stats_;
};

// Throws TrainingError on empty data and MissingInput for RFCB without genres.
RecommenderModel train(const RecommenderSpec& spec, const RatingsView& train_data,
                       const GenreCatalog* genres);

// Candidates sorted by score descending, ties by ascending item index.
std::vector<Index> rank_recommendations(const RecommenderModel& model, Index u,
                                        std::span<const Index> candidates);

} // namespace blendrec
