#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "blendrec/common.hpp"
#include "blendrec/metafeatures.hpp"
#include "blendrec/regression_tree.hpp"

namespace blendrec {

// One blendset row: m recommender predictions followed by the meta-features.
struct BlendRow {
    Eigen::VectorXd predictions;
    MetaVector meta;
    double actual = 0.0;
    Index user = 0;
    Index item = 0;

    Eigen::VectorXd features() const;
};

// Blender inputs are `predictions` recommender columns followed by the four
// meta-feature columns in kMetaFeatureNames order.
struct FeatureLayout {
    int predictions = 0;

    int columns() const { return predictions + kMetaFeatureCount; }
};

enum class BlenderFamily { Linear, Forest, Mlp };
enum class BinCriterion { UserSupport, MovieSupport };

std::string blender_family_name(BlenderFamily f);
BlenderFamily parse_blender_family(const std::string& name);
std::string bin_criterion_name(BinCriterion c);
BinCriterion parse_bin_criterion(const std::string& name);
int criterion_column(const FeatureLayout& layout, BinCriterion c);

struct LinearParams {
    double lambda = 0.1;
    BinCriterion criterion = BinCriterion::MovieSupport;
    int bins = 1;
    bool standardize = true;
};

struct ForestParams {
    int trees = 100;
    int min_leaf = 5;
    int max_features = 0;  // <= 0 means floor(sqrt(columns))
    bool bootstrap = true;
};

struct MlpParams {
    std::vector<int> layers{24, 12, 12};
    int epochs = 200;
    int batch_size = 128;
    double learning_rate = 0.01;
};

using BlenderParams = std::variant<LinearParams, ForestParams, MlpParams>;

struct BlenderSpec {
    BlenderFamily family = BlenderFamily::Linear;
    BlenderParams params = LinearParams{};
    std::uint64_t seed = 0;

    static BlenderSpec linear(double lambda, BinCriterion criterion, int bins, std::uint64_t seed = 0);
    static BlenderSpec forest(int trees, std::uint64_t seed = 0);
    static BlenderSpec mlp(std::vector<int> layers, std::uint64_t seed = 0);

    std::string label() const;
    nlohmann::json to_json() const;
    static BlenderSpec from_json(const nlohmann::json& j);
    bool operator==(const BlenderSpec& other) const { return to_json() == other.to_json(); }
};

// Zero-mean, unit-variance transform with statistics from training rows.
// Constant columns keep scale 1.
struct Standardizer {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;

    static Standardizer fit(const Eigen::Ref<const Eigen::MatrixXd>& X);
    static Standardizer identity(Index columns);
    Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& X) const;
    Eigen::VectorXd apply_row(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

struct RidgeSolution {
    Eigen::VectorXd weights;
    double intercept = 0.0;

    double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const { return weights.dot(x) + intercept; }
};

// argmin |y - Xw - c|^2 + lambda |w|^2 with unpenalised intercept c, via the
// normal equations. With lambda = 0 and a rank-deficient X the minimum-norm
// least-squares solution is returned.
RidgeSolution fit_ridge(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                        double lambda);

// Upper-inclusive bin thresholds splitting `values` into `bins` groups of
// equal row count (up to ties); duplicate thresholds are dropped.
std::vector<double> quantile_edges(std::span<const double> values, int bins);
// Bin of a criterion value: the first edge >= value, or the last bin.
int bin_index(std::span<const double> edges, double value);

struct LinearBlenderModel {
    FeatureLayout layout;
    BinCriterion criterion = BinCriterion::MovieSupport;
    double lambda = 0.0;
    std::vector<double> edges;
    std::vector<RidgeSolution> bins;  // edges.size() + 1 entries
    Standardizer standardizer;
    std::vector<std::string> warnings;

    double predict_raw(const Eigen::Ref<const Eigen::VectorXd>& features) const;
};

LinearBlenderModel fit_binned_lr(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                 const Eigen::Ref<const Eigen::VectorXd>& y, const FeatureLayout& layout,
                                 const LinearParams& params);

struct ForestBlenderModel {
    std::vector<RegressionTree> trees;
    int features_per_split = 1;

    double predict_raw(const Eigen::Ref<const Eigen::VectorXd>& features) const;
};

ForestBlenderModel fit_forest_blender(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                      const Eigen::Ref<const Eigen::VectorXd>& y, const ForestParams& params,
                                      std::uint64_t seed, int threads = 1);

// weights[l] maps layer l inputs to outputs (rows = outputs). Hidden layers
// use the sigmoid, the output layer is linear with one unit.
struct MlpParameters {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

// Mean squared error of the network on rows of X (already standardised).
// Fills `grad` with the exact gradient when given.
double mlp_loss(const MlpParameters& params, const Eigen::Ref<const Eigen::MatrixXd>& X,
                const Eigen::Ref<const Eigen::VectorXd>& y, MlpParameters* grad = nullptr);

struct MlpBlenderModel {
    std::vector<int> layers;
    Standardizer standardizer;
    MlpParameters params;

    double predict_raw(const Eigen::Ref<const Eigen::VectorXd>& features) const;
};

// Initial network: Xavier-uniform hidden weights, zero output weights and the
// target mean as output bias.
MlpBlenderModel init_mlp(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                         const std::vector<int>& layers, std::uint64_t seed);

// Adam on mini-batches; the step size halves when an epoch fails to improve
// the training loss. Throws TrainingError on a non-finite loss.
MlpBlenderModel fit_mlp_blender(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& y, const MlpParams& params,
                                std::uint64_t seed);

class BlenderModel {
public:
    using Body = std::variant<LinearBlenderModel, ForestBlenderModel, MlpBlenderModel>;

    BlenderModel(BlenderSpec spec, FeatureLayout layout, Body body)
        : spec_(std::move(spec)), layout_(layout), body_(std::move(body)) {}

    const BlenderSpec& spec() const { return spec_; }
    const FeatureLayout& layout() const { return layout_; }
    const Body& body() const { return body_; }
    std::vector<std::string> warnings() const;

    // Throws InvalidArgument when the feature length does not match the layout.
    double predict_raw(const Eigen::Ref<const Eigen::VectorXd>& features) const;
    double predict(const Eigen::Ref<const Eigen::VectorXd>& features) const { return clamp_rating(predict_raw(features)); }
    double predict(const BlendRow& row) const { return predict(row.features()); }
    Eigen::VectorXd predict_all(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

    nlohmann::json to_json() const;
    static BlenderModel from_json(const nlohmann::json& j);

private:
    BlenderSpec spec_;
    FeatureLayout layout_;
    Body body_;
};

BlenderModel fit_blender(const BlenderSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                         const Eigen::Ref<const Eigen::VectorXd>& y, const FeatureLayout& layout, int threads = 1);

} // namespace blendrec
