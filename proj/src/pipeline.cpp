#include "blendrec/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "blendrec/parallel.hpp"

namespace blendrec {

double rmse(std::span<const double> predicted, std::span<const double> actual)
{
    if (predicted.size() != actual.size())
        throw InvalidArgument("rmse: " + std::to_string(predicted.size()) + " predictions for " +
                              std::to_string(actual.size()) + " targets");
    if (predicted.empty())
        throw InvalidArgument("rmse of an empty set");
    double sum = 0.0;
    for (std::size_t k = 0; k < predicted.size(); ++k) {
        const double d = predicted[k] - actual[k];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(predicted.size()));
}

double rmse(const Eigen::Ref<const Eigen::VectorXd>& predicted, const Eigen::Ref<const Eigen::VectorXd>& actual)
{
    return rmse(std::span<const double>(predicted.data(), static_cast<std::size_t>(predicted.size())),
                std::span<const double>(actual.data(), static_cast<std::size_t>(actual.size())));
}

BlendRow Blendset::row(std::size_t r) const
{
    const auto i = static_cast<Index>(r);
    const int m = predictions();
    BlendRow row;
    row.predictions = features.row(i).head(m).transpose();
    row.meta = {features(i, m), features(i, m + 1), features(i, m + 2), features(i, m + 3)};
    row.actual = actual[i];
    row.user = users[r];
    row.item = items[r];
    return row;
}

FoldPlan trainer_fold_plan(const RatingsDataset& dataset, int k, std::uint64_t seed)
{
    return make_folds(dataset, k, derive_seed(seed, "trainer-folds"));
}

std::uint64_t fold_training_seed(const RecommenderSpec& spec, int fold)
{
    return derive_seed(spec.seed, "trainer-fold", static_cast<std::uint64_t>(fold));
}

namespace {

RecommenderModel train_for_fold(const RecommenderSpec& spec, const RatingsView& train_view,
                                const GenreCatalog* genres, int fold)
{
    auto fold_spec = spec;
    fold_spec.seed = fold_training_seed(spec, fold);
    try {
        return train(fold_spec, train_view, genres);
    } catch (const Error& e) {
        throw PipelineError("recommender " + spec.label() + " failed on trainer fold " + std::to_string(fold) +
                            ": " + e.what());
    }
}

} // namespace

Blendset build_blendset(const RatingsDataset& dataset, const std::vector<RecommenderSpec>& specs,
                        const GenreCatalog* genres, int k, std::uint64_t seed, int threads)
{
    if (specs.empty())
        throw InvalidArgument("blendset needs at least one recommender");
    Blendset b;
    b.specs = specs;
    b.fold_plan = trainer_fold_plan(dataset, k, seed);
    const auto m = static_cast<Index>(specs.size());
    const auto n = static_cast<Index>(dataset.size());
    b.features.resize(n, m + kMetaFeatureCount);
    b.actual.resize(n);
    b.users.resize(dataset.size());
    b.items.resize(dataset.size());
    for (std::size_t r = 0; r < dataset.size(); ++r) {
        b.actual[static_cast<Index>(r)] = dataset.value(r);
        b.users[r] = dataset.user(r);
        b.items[r] = dataset.item(r);
    }

    std::vector<std::pair<RatingsView, RatingsView>> folds;
    for (int j = 0; j < k; ++j)
        folds.push_back(split(dataset, b.fold_plan, j));

    // One unit per (fold, recommender); each writes a disjoint block of cells.
    const auto units = static_cast<std::size_t>(k) * specs.size();
    parallel_for(units, threads, [&](std::size_t unit) {
        const int j = static_cast<int>(unit / specs.size());
        const auto s = unit % specs.size();
        const auto& [train_view, test_view] = folds[static_cast<std::size_t>(j)];
        const auto model = train_for_fold(specs[s], train_view, genres, j);
        for (std::size_t t = 0; t < test_view.size(); ++t) {
            const auto r = static_cast<Index>(test_view.rows()[t]);
            b.features(r, static_cast<Index>(s)) = model.predict_or_fallback(test_view.user(t), test_view.item(t));
        }
    });
    for (int j = 0; j < k; ++j) {
        const auto& [train_view, test_view] = folds[static_cast<std::size_t>(j)];
        const MetaFeatureTable meta(train_view);
        for (std::size_t t = 0; t < test_view.size(); ++t) {
            const auto r = static_cast<Index>(test_view.rows()[t]);
            b.features.row(r).tail(kMetaFeatureCount) = meta(test_view.user(t), test_view.item(t)).as_vector();
        }
    }
    return b;
}

void write_blendset_csv(const Blendset& blendset, std::ostream& out)
{
    const int m = blendset.predictions();
    out << "user,item,actual";
    for (int p = 1; p <= m; ++p)
        out << ",p_" << p;
    for (const char* name : kMetaFeatureNames)
        out << ',' << name;
    out << '\n';
    char buf[40];
    auto number = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (std::size_t r = 0; r < blendset.size(); ++r) {
        const auto i = static_cast<Index>(r);
        out << blendset.users[r] << ',' << blendset.items[r] << ',';
        number(blendset.actual[i]);
        for (Index c = 0; c < blendset.features.cols(); ++c) {
            out << ',';
            number(blendset.features(i, c));
        }
        out << '\n';
    }
}

Blendset read_blendset_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw ParseError("blendset file is empty", 1);
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ','))
            header.push_back(field);
    }
    const int m = static_cast<int>(header.size()) - 3 - kMetaFeatureCount;
    bool ok = m >= 1 && header[0] == "user" && header[1] == "item" && header[2] == "actual";
    for (int p = 0; ok && p < m; ++p)
        ok = header[static_cast<std::size_t>(3 + p)] == "p_" + std::to_string(p + 1);
    for (int f = 0; ok && f < kMetaFeatureCount; ++f)
        ok = header[static_cast<std::size_t>(3 + m + f)] == kMetaFeatureNames[static_cast<std::size_t>(f)];
    if (!ok)
        throw ParseError("unexpected blendset header", 1);

    const auto cols = static_cast<std::size_t>(3 + m + kMetaFeatureCount);
    std::vector<double> values;
    std::vector<Index> users, items;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::size_t field = 0, start = 0;
        while (start <= line.size()) {
            auto end = line.find(',', start);
            if (end == std::string::npos)
                end = line.size();
            const char* first = line.data() + start;
            const char* last = line.data() + end;
            if (field < 2) {
                Index id = 0;
                auto [ptr, ec] = std::from_chars(first, last, id);
                if (ec != std::errc() || ptr != last)
                    throw ParseError("bad index in column " + std::to_string(field + 1), line_no);
                (field == 0 ? users : items).push_back(id);
            } else if (field < cols) {
                double v = 0.0;
                auto [ptr, ec] = std::from_chars(first, last, v);
                if (ec != std::errc() || ptr != last || !std::isfinite(v))
                    throw ParseError("bad number in column " + std::to_string(field + 1), line_no);
                values.push_back(v);
            }
            ++field;
            start = end + 1;
        }
        if (field != cols)
            throw ParseError("expected " + std::to_string(cols) + " fields, got " + std::to_string(field), line_no);
    }

    Blendset b;
    const auto n = static_cast<Index>(users.size());
    const auto width = static_cast<Index>(cols - 2);
    b.actual.resize(n);
    b.features.resize(n, width - 1);
    for (Index r = 0; r < n; ++r) {
        b.actual[r] = values[static_cast<std::size_t>(r * width)];
        for (Index c = 1; c < width; ++c)
            b.features(r, c - 1) = values[static_cast<std::size_t>(r * width + c)];
    }
    b.users = std::move(users);
    b.items = std::move(items);
    return b;
}

nlohmann::json RecommenderEvaluation::to_json() const
{
    return {{"spec", spec.to_json()}, {"label", spec.label()}, {"fold_rmse", fold_rmse}, {"mean_rmse", mean_rmse}};
}

RecommenderEvaluation evaluate_recommender(const RatingsDataset& dataset, const RecommenderSpec& spec,
                                           const GenreCatalog* genres, int k, std::uint64_t seed, int threads)
{
    const auto plan = trainer_fold_plan(dataset, k, seed);
    RecommenderEvaluation ev;
    ev.spec = spec;
    ev.fold_rmse.resize(static_cast<std::size_t>(k));
    parallel_for(static_cast<std::size_t>(k), threads, [&](std::size_t fold) {
        const int j = static_cast<int>(fold);
        const auto [train_view, test_view] = split(dataset, plan, j);
        const auto model = train_for_fold(spec, train_view, genres, j);
        std::vector<double> predicted(test_view.size()), actual(test_view.size());
        for (std::size_t t = 0; t < test_view.size(); ++t) {
            predicted[t] = model.predict_or_fallback(test_view.user(t), test_view.item(t));
            actual[t] = test_view.value(t);
        }
        ev.fold_rmse[fold] = rmse(predicted, actual);
    });
    ev.mean_rmse = std::accumulate(ev.fold_rmse.begin(), ev.fold_rmse.end(), 0.0) / k;
    return ev;
}

std::vector<double> blendset_column_fold_rmse(const Blendset& blendset, int column)
{
    std::vector<double> out;
    for (int j = 0; j < blendset.fold_plan.k; ++j) {
        std::vector<double> predicted, actual;
        for (std::size_t r : blendset.fold_plan.fold(j)) {
            predicted.push_back(blendset.features(static_cast<Index>(r), column));
            actual.push_back(blendset.actual[static_cast<Index>(r)]);
        }
        out.push_back(rmse(predicted, actual));
    }
    return out;
}

namespace {

std::vector<Index> to_index(const std::vector<std::size_t>& rows)
{
    return {rows.begin(), rows.end()};
}

double fit_and_score(const BlenderSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                     const Eigen::Ref<const Eigen::VectorXd>& y, const FeatureLayout& layout,
                     const std::vector<Index>& train_rows, const std::vector<Index>& test_rows)
{
    const auto model = fit_blender(spec, X(train_rows, Eigen::placeholders::all), y(train_rows), layout);
    const Eigen::VectorXd predicted = model.predict_all(X(test_rows, Eigen::placeholders::all));
    return rmse(predicted, y(test_rows));
}

} // namespace

BlenderSelection select_blender(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                                const FeatureLayout& layout, const std::vector<BlenderSpec>& grid, int folds,
                                std::uint64_t fold_seed, int threads)
{
    if (grid.empty())
        throw InvalidArgument("blender grid is empty");
    const auto plan = make_folds(static_cast<std::size_t>(X.rows()), folds, fold_seed);
    std::vector<std::vector<Index>> train_rows, test_rows;
    for (int i = 0; i < folds; ++i) {
        train_rows.push_back(to_index(plan.complement(i)));
        test_rows.push_back(to_index(plan.fold(i)));
    }

    BlenderSelection sel;
    sel.scores.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<std::string> failures(grid.size());
    const auto units = grid.size() * static_cast<std::size_t>(folds);
    std::vector<double> fold_scores(units, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::string> unit_errors(units);
    parallel_for(units, threads, [&](std::size_t unit) {
        const auto c = unit / static_cast<std::size_t>(folds);
        const auto i = unit % static_cast<std::size_t>(folds);
        auto spec = grid[c];
        spec.seed = derive_seed(grid[c].seed, "inner-fold", i);
        try {
            fold_scores[unit] = fit_and_score(spec, X, y, layout, train_rows[i], test_rows[i]);
        } catch (const Error& e) {
            unit_errors[unit] = e.what();
        }
    });

    bool any = false;
    for (std::size_t c = 0; c < grid.size(); ++c) {
        double sum = 0.0;
        std::string failure;
        for (int i = 0; i < folds; ++i) {
            const auto unit = c * static_cast<std::size_t>(folds) + static_cast<std::size_t>(i);
            if (!unit_errors[unit].empty() && failure.empty())
                failure = "inner fold " + std::to_string(i) + ": " + unit_errors[unit];
            sum += fold_scores[unit];
        }
        if (!failure.empty()) {
            sel.warnings.push_back("candidate " + grid[c].label() + " excluded (" + failure + ")");
            continue;
        }
        sel.scores[c] = sum / folds;
        if (!any || sel.scores[c] < sel.scores[sel.index]) {
            sel.index = c;
            any = true;
        }
    }
    if (!any)
        throw PipelineError("every blender candidate failed to train");
    sel.spec = grid[sel.index];
    return sel;
}

std::uint64_t outer_training_seed(const BlenderSpec& spec, int fold)
{
    return derive_seed(spec.seed, "outer-fold", static_cast<std::uint64_t>(fold));
}

FoldPlan outer_fold_plan(std::size_t rows, int k, std::uint64_t seed)
{
    return make_folds(rows, k, derive_seed(seed, "outer-folds"));
}

std::uint64_t inner_fold_seed(std::uint64_t seed, int outer_fold)
{
    return derive_seed(seed, "inner-folds", static_cast<std::uint64_t>(outer_fold));
}

NestedCvReport nested_cv(const Blendset& blendset, const std::vector<BlenderSpec>& grid,
                         const NestedCvOptions& options)
{
    if (grid.empty())
        throw InvalidArgument("blender grid is empty");
    if (options.inner_folds < 2)
        throw InvalidArgument("inner fold count must be at least 2");
    const auto plan = outer_fold_plan(blendset.size(), options.outer_folds, options.seed);
    const auto layout = blendset.layout();

    NestedCvReport report;
    report.k = options.outer_folds;
    report.inner_k = options.inner_folds;
    report.grid = grid;
    for (int j = 0; j < options.outer_folds; ++j) {
        const auto train_rows = to_index(plan.complement(j));
        const auto test_rows = to_index(plan.fold(j));
        const Eigen::MatrixXd X_train = blendset.features(train_rows, Eigen::placeholders::all);
        const Eigen::VectorXd y_train = blendset.actual(train_rows);
        auto sel = select_blender(X_train, y_train, layout, grid, options.inner_folds,
                                  inner_fold_seed(options.seed, j), options.threads);
        for (auto& w : sel.warnings)
            report.warnings.push_back("outer fold " + std::to_string(j) + ": " + w);

        auto spec = sel.spec;
        spec.seed = outer_training_seed(sel.spec, j);
        const auto model = fit_blender(spec, X_train, y_train, layout, options.threads);
        for (const auto& w : model.warnings())
            report.warnings.push_back("outer fold " + std::to_string(j) + ": " + w);
        const Eigen::VectorXd predicted = model.predict_all(blendset.features(test_rows, Eigen::placeholders::all));
        report.per_fold.push_back({j, sel.spec, rmse(predicted, blendset.actual(test_rows)), sel.scores});
    }
    double sum = 0.0;
    for (const auto& f : report.per_fold)
        sum += f.rmse;
    report.mean_rmse = sum / static_cast<double>(report.per_fold.size());
    return report;
}

std::vector<double> cross_validate_blender(const Blendset& blendset, const BlenderSpec& spec,
                                           const NestedCvOptions& options)
{
    const auto plan = outer_fold_plan(blendset.size(), options.outer_folds, options.seed);
    std::vector<double> out;
    for (int j = 0; j < options.outer_folds; ++j) {
        auto fold_spec = spec;
        fold_spec.seed = outer_training_seed(spec, j);
        out.push_back(fit_and_score(fold_spec, blendset.features, blendset.actual, blendset.layout(),
                                    to_index(plan.complement(j)), to_index(plan.fold(j))));
    }
    return out;
}

FinalBlender finalize_blender(const Blendset& blendset, const std::vector<BlenderSpec>& grid, int folds,
                              std::uint64_t seed, int threads)
{
    auto sel = select_blender(blendset.features, blendset.actual, blendset.layout(), grid, folds,
                              derive_seed(seed, "final-folds"), threads);
    auto spec = sel.spec;
    spec.seed = derive_seed(sel.spec.seed, "final");
    auto model = fit_blender(spec, blendset.features, blendset.actual, blendset.layout(), threads);
    const double cv = sel.scores[sel.index];
    return {std::move(sel), std::move(model), cv};
}

nlohmann::json NestedCvReport::to_json() const
{
    nlohmann::json grid_json = nlohmann::json::array();
    for (const auto& g : grid)
        grid_json.push_back(g.to_json());
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : per_fold) {
        nlohmann::json scores = nlohmann::json::array();
        for (double s : f.candidate_scores)
            scores.push_back(std::isnan(s) ? nlohmann::json(nullptr) : nlohmann::json(s));
        folds.push_back({{"fold", f.fold},
                         {"selected", f.selected.to_json()},
                         {"selected_label", f.selected.label()},
                         {"rmse", f.rmse},
                         {"candidate_inner_rmse", scores}});
    }
    return {{"k", k},       {"inner_k", inner_k},     {"grid", grid_json},
            {"per_fold", folds}, {"mean_rmse", mean_rmse}, {"warnings", warnings}};
}

NestedCvReport NestedCvReport::from_json(const nlohmann::json& j)
{
    NestedCvReport r;
    r.k = j.at("k").get<int>();
    r.inner_k = j.value("inner_k", 0);
    for (const auto& g : j.at("grid"))
        r.grid.push_back(BlenderSpec::from_json(g));
    for (const auto& f : j.at("per_fold")) {
        NestedCvFold fold;
        fold.fold = f.at("fold").get<int>();
        fold.selected = BlenderSpec::from_json(f.at("selected"));
        fold.rmse = f.at("rmse").get<double>();
        for (const auto& s : f.value("candidate_inner_rmse", nlohmann::json::array()))
            fold.candidate_scores.push_back(s.is_null() ? std::numeric_limits<double>::quiet_NaN() : s.get<double>());
        r.per_fold.push_back(std::move(fold));
    }
    r.mean_rmse = j.at("mean_rmse").get<double>();
    r.warnings = j.value("warnings", std::vector<std::string>{});
    return r;
}

std::vector<RecommenderSpec> default_roster(std::uint64_t seed)
{
    std::vector<RecommenderSpec> roster;
    auto add = [&](Family f, auto tweak) {
        auto spec = RecommenderSpec::defaults(f, derive_seed(seed, "recommender", roster.size()));
        tweak(spec);
        roster.push_back(spec);
    };
    for (int neighbors : {20, 80})
        add(Family::Ubcf, [&](RecommenderSpec& s) { std::get<NeighborhoodParams>(s.params).neighbors = neighbors; });
    for (int neighbors : {20, 80})
        add(Family::Ibcf, [&](RecommenderSpec& s) { std::get<NeighborhoodParams>(s.params).neighbors = neighbors; });
    for (int factors : {50, 500})
        add(Family::Svd, [&](RecommenderSpec& s) { std::get<SvdParams>(s.params).factors = factors; });
    for (int hidden : {100, 300})
        add(Family::AutoRec, [&](RecommenderSpec& s) { std::get<AutoRecParams>(s.params).hidden = hidden; });
    for (int trees : {20, 30})
        add(Family::Rfcb, [&](RecommenderSpec& s) { std::get<RfcbParams>(s.params).trees = trees; });
    return roster;
}

std::vector<std::vector<int>> BlenderGridConfig::default_mlp_layers()
{
    std::vector<std::vector<int>> out;
    const int wide[] = {8, 12, 24};
    const int narrow[] = {8, 12};
    for (int a : wide)
        out.push_back({a});
    for (int a : wide)
        for (int b : wide)
            out.push_back({a, b});
    for (int a : wide)
        for (int b : narrow)
            for (int c : narrow)
                out.push_back({a, b, c});
    return out;
}

std::vector<BlenderSpec> make_blender_grid(const BlenderGridConfig& config, std::uint64_t seed)
{
    std::vector<BlenderSpec> grid;
    auto next_seed = [&] { return derive_seed(seed, "blender", grid.size()); };
    for (auto criterion : config.criteria)
        for (int bins : config.bin_counts)
            for (double lambda : config.lambdas)
                grid.push_back(BlenderSpec::linear(lambda, criterion, bins, next_seed()));
    for (int trees : config.tree_counts) {
        auto spec = BlenderSpec::forest(trees, next_seed());
        std::get<ForestParams>(spec.params).min_leaf = config.forest_min_leaf;
        grid.push_back(spec);
    }
    for (const auto& layers : config.mlp_layers) {
        auto spec = BlenderSpec::mlp(layers, next_seed());
        std::get<MlpParams>(spec.params).epochs = config.mlp_epochs;
        grid.push_back(spec);
    }
    return grid;
}

std::vector<BlenderSpec> restrict_grid(const std::vector<BlenderSpec>& grid, BlenderFamily family)
{
    std::vector<BlenderSpec> out;
    std::copy_if(grid.begin(), grid.end(), std::back_inserter(out),
                 [&](const BlenderSpec& s) { return s.family == family; });
    return out;
}

} // namespace blendrec
