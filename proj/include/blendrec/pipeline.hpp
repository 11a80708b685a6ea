#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "blendrec/blenders.hpp"
#include "blendrec/data.hpp"
#include "blendrec/recommenders.hpp"

namespace blendrec {

class PipelineError : public Error {
public:
    using Error::Error;
};

// Throws InvalidArgument on empty or mismatched inputs.
double rmse(std::span<const double> predicted, std::span<const double> actual);
double rmse(const Eigen::Ref<const Eigen::VectorXd>& predicted, const Eigen::Ref<const Eigen::VectorXd>& actual);

// Out-of-fold recommender predictions, meta-features and targets, one row per
// rating of the source dataset in dataset order.
struct Blendset {
    std::vector<RecommenderSpec> specs;
    FoldPlan fold_plan;
    Eigen::MatrixXd features;  // rows x (m + 4)
    Eigen::VectorXd actual;
    std::vector<Index> users;  // dense indices
    std::vector<Index> items;

    std::size_t size() const { return static_cast<std::size_t>(actual.size()); }
    int predictions() const { return static_cast<int>(features.cols()) - kMetaFeatureCount; }
    FeatureLayout layout() const { return {predictions()}; }
    BlendRow row(std::size_t r) const;
};

FoldPlan trainer_fold_plan(const RatingsDataset& dataset, int k, std::uint64_t seed);

// Seed a recommender is trained with in trainer fold j.
std::uint64_t fold_training_seed(const RecommenderSpec& spec, int fold);

// Throws PipelineError naming the spec when one fails to train.
Blendset build_blendset(const RatingsDataset& dataset, const std::vector<RecommenderSpec>& specs,
                        const GenreCatalog* genres, int k, std::uint64_t seed, int threads = 1);

// Header `user,item,actual,p_1..p_m,user_support,movie_support,user_average,movie_average`,
// 17 significant digits.
void write_blendset_csv(const Blendset& blendset, std::ostream& out);
// Recovers rows only; specs and fold plan are left empty.
Blendset read_blendset_csv(std::istream& in);

struct RecommenderEvaluation {
    RecommenderSpec spec;
    std::vector<double> fold_rmse;
    double mean_rmse = 0.0;

    nlohmann::json to_json() const;
};

// Plain k-fold CV over the trainer fold plan; mean of per-fold RMSEs.
RecommenderEvaluation evaluate_recommender(const RatingsDataset& dataset, const RecommenderSpec& spec,
                                           const GenreCatalog* genres, int k, std::uint64_t seed, int threads = 1);

// Per-fold RMSEs of the blendset's own prediction columns; identical to
// evaluate_recommender on the same dataset, spec and seed.
std::vector<double> blendset_column_fold_rmse(const Blendset& blendset, int column);

struct BlenderSelection {
    std::size_t index = 0;  // position in the grid
    BlenderSpec spec;
    std::vector<double> scores;  // mean inner RMSE per candidate, NaN when excluded
    std::vector<std::string> warnings;
};

// Model selection on one training set: every candidate is cross-validated
// over `folds` disjoint folds drawn with `fold_seed`; lowest mean RMSE wins,
// ties go to the earlier candidate.
BlenderSelection select_blender(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                                const FeatureLayout& layout, const std::vector<BlenderSpec>& grid, int folds,
                                std::uint64_t fold_seed, int threads = 1);

std::uint64_t outer_training_seed(const BlenderSpec& spec, int fold);

struct NestedCvFold {
    int fold = 0;
    BlenderSpec selected;
    double rmse = 0.0;
    std::vector<double> candidate_scores;
};

struct NestedCvReport {
    int k = 0;
    int inner_k = 0;
    std::vector<BlenderSpec> grid;
    std::vector<NestedCvFold> per_fold;
    double mean_rmse = 0.0;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
    static NestedCvReport from_json(const nlohmann::json& j);
};

struct NestedCvOptions {
    int outer_folds = 5;
    int inner_folds = 4;
    std::uint64_t seed = 0;
    int threads = 1;
};

FoldPlan outer_fold_plan(std::size_t rows, int k, std::uint64_t seed);
std::uint64_t inner_fold_seed(std::uint64_t seed, int outer_fold);

NestedCvReport nested_cv(const Blendset& blendset, const std::vector<BlenderSpec>& grid,
                         const NestedCvOptions& options);

// Plain k-fold CV of one blender over the outer fold plan nested_cv uses.
std::vector<double> cross_validate_blender(const Blendset& blendset, const BlenderSpec& spec,
                                           const NestedCvOptions& options);

struct FinalBlender {
    BlenderSelection selection;
    BlenderModel model;
    double cv_rmse = 0.0;
};

// Model selection over the whole blendset, then a refit of the winner on all
// rows for serving.
FinalBlender finalize_blender(const Blendset& blendset, const std::vector<BlenderSpec>& grid, int folds,
                              std::uint64_t seed, int threads = 1);

// Two instances per family with the hyper-parameters of the reference roster.
std::vector<RecommenderSpec> default_roster(std::uint64_t seed);

struct BlenderGridConfig {
    std::vector<double> lambdas{0.0001, 0.001, 0.01, 0.1, 1, 10};
    std::vector<BinCriterion> criteria{BinCriterion::UserSupport, BinCriterion::MovieSupport};
    std::vector<int> bin_counts{1, 2, 4, 8, 12};
    std::vector<int> tree_counts{10, 50, 100, 250, 500};
    std::vector<std::vector<int>> mlp_layers = default_mlp_layers();
    int mlp_epochs = 200;
    int forest_min_leaf = 5;

    // 1-3 hidden layers of {8, 12, 24} nodes; with three layers the second
    // and third are limited to {8, 12}.
    static std::vector<std::vector<int>> default_mlp_layers();
};

// Enumerates the candidates in family order linear, forest, mlp; candidate
// seeds derive from `seed` and the candidate's position.
std::vector<BlenderSpec> make_blender_grid(const BlenderGridConfig& config, std::uint64_t seed);

std::vector<BlenderSpec> restrict_grid(const std::vector<BlenderSpec>& grid, BlenderFamily family);

} // namespace blendrec
