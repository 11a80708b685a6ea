#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "blendrec/pipeline.hpp"
#include "checks.hpp"
#include "oracles.hpp"
#include "toy.hpp"

using namespace blendrec;

namespace {

GenreCatalog twenty_genres()
{
    return GenreCatalog({"Action", "Comedy", "Drama"}, {{1, {"Action"}},
                                                        {2, {"Comedy"}},
                                                        {3, {"Action", "Drama"}},
                                                        {4, {"Drama"}},
                                                        {5, {"Comedy", "Drama"}},
                                                        {6, {"Action", "Comedy"}}});
}

std::vector<RecommenderSpec> small_roster()
{
    auto svd = RecommenderSpec::defaults(Family::Svd, 5);
    std::get<SvdParams>(svd.params).factors = 2;
    auto ar = RecommenderSpec::defaults(Family::AutoRec, 6);
    std::get<AutoRecParams>(ar.params).hidden = 3;
    std::get<AutoRecParams>(ar.params).epochs = 5;
    auto rf = RecommenderSpec::defaults(Family::Rfcb, 7);
    std::get<RfcbParams>(rf.params).trees = 3;
    return {RecommenderSpec::defaults(Family::Ubcf, 1),
            RecommenderSpec::defaults(Family::Ibcf, 2),
            svd,
            ar,
            rf,
            RecommenderSpec::defaults(Family::UserAverage, 3),
            RecommenderSpec::defaults(Family::MovieAverage, 4)};
}

Blendset perfect_blendset(std::size_t n)
{
    std::mt19937_64 rng(3);
    Blendset b;
    b.features.resize(static_cast<Index>(n), 2 + kMetaFeatureCount);
    b.actual.resize(static_cast<Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const auto i = static_cast<Index>(r);
        b.actual[i] = 1 + static_cast<double>(rng() % 5);
        b.features.row(i) << b.actual[i], 1 + static_cast<double>(rng() % 5), static_cast<double>(rng() % 30),
            static_cast<double>(rng() % 90), 3.0 + static_cast<double>(rng() % 10) / 10, 3.3;
        b.users.push_back(0);
        b.items.push_back(0);
    }
    return b;
}

} // namespace

TEST(Rmse, Examples)
{
    const std::vector<double> a{1, 2, 3};
    EXPECT_EQ(rmse(a, a), 0.0);
    EXPECT_NEAR(rmse(std::vector<double>{1, 3}, std::vector<double>{3, 3}), std::sqrt(2.0), 1e-15);
    EXPECT_THROW(rmse(std::vector<double>{1}, std::vector<double>{1, 2}), InvalidArgument);
    EXPECT_THROW(rmse(std::vector<double>{}, std::vector<double>{}), InvalidArgument);
}

TEST(Rmse, TwoPassOracle)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(1, 5);
    std::vector<double> p(1000), a(1000);
    for (std::size_t k = 0; k < 1000; ++k) {
        p[k] = u(rng);
        a[k] = u(rng);
    }
    std::vector<double> sq(1000);
    for (std::size_t k = 0; k < 1000; ++k)
        sq[k] = (p[k] - a[k]) * (p[k] - a[k]);
    double mean = 0;
    for (double s : sq)
        mean += s / 1000.0;
    EXPECT_NEAR(rmse(p, a), std::sqrt(mean), 1e-12);
}

TEST(Blendset, UserAverageOppositeFold)
{
    const auto d = toy::twenty_ratings();
    const auto b = build_blendset(d, {RecommenderSpec::defaults(Family::UserAverage)}, nullptr, 2, 4);
    ASSERT_EQ(b.size(), d.size());
    for (std::size_t r = 0; r < d.size(); ++r) {
        double sum = 0, all = 0;
        int n = 0, total = 0;
        for (std::size_t s = 0; s < d.size(); ++s)
            if (b.fold_plan.assignment[s] != b.fold_plan.assignment[r]) {
                all += d.value(s);
                ++total;
                if (d.user(s) == d.user(r)) {
                    sum += d.value(s);
                    ++n;
                }
            }
        EXPECT_DOUBLE_EQ(b.features(static_cast<Index>(r), 0), n ? sum / n : all / total);
    }
}

TEST(Blendset, EndToEndOracleOnTwentyRatings)
{
    const auto d = toy::twenty_ratings();
    const auto genres = twenty_genres();
    const auto specs = small_roster();
    const auto b = build_blendset(d, specs, &genres, 5, 99);
    ASSERT_EQ(b.size(), 20u);
    ASSERT_EQ(b.predictions(), static_cast<int>(specs.size()));
    for (int j = 0; j < 5; ++j) {
        const auto [train_view, test_view] = split(d, b.fold_plan, j);
        const auto R = oracle::dense(train_view);
        const auto Su = oracle::pearson(R, 2);
        const auto Si = oracle::adjusted_cosine(R, 2);
        const double g = oracle::global_mean(R);
        auto fallback = [&](Index u, Index i) {
            const double um = oracle::user_mean(R, u), im = oracle::item_mean(R, i);
            return clamp_rating(!std::isnan(um) ? um : !std::isnan(im) ? im : g);
        };
        auto resolve = [&](std::optional<double> p, Index u, Index i) {
            return p ? clamp_rating(*p) : fallback(u, i);
        };
        // Stochastic families are retrained here with the fold seed and
        // evaluated through the oracle formulas.
        std::vector<RecommenderModel> models;
        for (const auto& s : specs) {
            auto fs = s;
            fs.seed = fold_training_seed(s, j);
            models.push_back(train(fs, train_view, &genres));
        }
        for (std::size_t t = 0; t < test_view.size(); ++t) {
            const auto r = static_cast<Index>(test_view.rows()[t]);
            const Index u = test_view.user(t), i = test_view.item(t);
            const bool known_u = !std::isnan(oracle::user_mean(R, u));
            const bool known_i = !std::isnan(oracle::item_mean(R, i));
            std::vector<double> expect;
            expect.push_back(resolve(oracle::ubcf(R, Su, 20, u, i), u, i));
            expect.push_back(resolve(oracle::ibcf(R, Si, 20, u, i), u, i));
            const auto& lf = std::get<LatentFactorModel>(models[2].body());
            expect.push_back(resolve(known_u && known_i ? std::optional(oracle::dot(lf.P, lf.Q, u, i)) : std::nullopt, u, i));
            const auto& am = std::get<AutoRecModel>(models[3].body());
            expect.push_back(resolve(known_u && known_i ? std::optional(oracle::autorec(am, R, u, i)) : std::nullopt, u, i));
            const auto& fm = std::get<UserForestModel>(models[4].body());
            expect.push_back(resolve(known_u ? std::optional(oracle::forest(fm.forests[static_cast<std::size_t>(u)],
                                                                            genres.genre_vector(d.item_id(i))))
                                             : std::nullopt,
                                     u, i));
            const double um = oracle::user_mean(R, u), im = oracle::item_mean(R, i);
            expect.push_back(clamp_rating(std::isnan(um) ? g : um));
            expect.push_back(clamp_rating(std::isnan(im) ? g : im));
            for (std::size_t c = 0; c < expect.size(); ++c)
                EXPECT_NEAR(b.features(r, static_cast<Index>(c)), expect[c], 1e-10)
                    << "row " << r << " column " << specs[c].label();
        }
    }
}

TEST(Blendset, CsvRoundTripAndErrors)
{
    const auto d = toy::twenty_ratings();
    const auto b = build_blendset(d, {RecommenderSpec::defaults(Family::MovieAverage)}, nullptr, 4, 2);
    std::ostringstream out;
    write_blendset_csv(b, out);
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
              "user,item,actual,p_1,user_support,movie_support,user_average,movie_average");
    std::istringstream in(out.str());
    const auto back = read_blendset_csv(in);
    EXPECT_EQ(back.features, b.features);
    EXPECT_EQ(back.actual, b.actual);
    EXPECT_EQ(back.users, b.users);

    std::istringstream bad_header("user,item,rating,p_1\n");
    EXPECT_THROW(read_blendset_csv(bad_header), ParseError);
    std::string truncated = out.str();
    truncated.resize(truncated.size() - 5);
    truncated += ",\n";
    std::istringstream cut(truncated);
    EXPECT_THROW(read_blendset_csv(cut), ParseError);
    std::istringstream empty("");
    EXPECT_THROW(read_blendset_csv(empty), ParseError);
}

TEST(Blendset, TrainingFailureNamesSpec)
{
    const auto d = toy::twenty_ratings();
    try {
        build_blendset(d, {RecommenderSpec::defaults(Family::Rfcb, 1)}, nullptr, 2, 1);
        FAIL();
    } catch (const PipelineError& e) {
        EXPECT_NE(std::string(e.what()).find("rfcb-30"), std::string::npos);
    }
    EXPECT_THROW(build_blendset(d, {}, nullptr, 2, 1), InvalidArgument);
}

TEST(Blendset, ThreadCountDoesNotChangeOutput)
{
    const auto d = toy::random_toy(3);
    auto specs = small_roster();
    specs.erase(specs.begin() + 4);  // rfcb needs matching genres
    const auto a = build_blendset(d, specs, nullptr, 3, 8, 1);
    const auto b = build_blendset(d, specs, nullptr, 3, 8, 4);
    std::ostringstream sa, sb;
    write_blendset_csv(a, sa);
    write_blendset_csv(b, sb);
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(Evaluate, ConstantDataGivesZero)
{
    std::vector<Rating> r;
    for (int u = 1; u <= 6; ++u)
        for (int i = 1; i <= 4; ++i)
            r.push_back({u, i, 4.0, 0});
    const auto d = RatingsDataset::from_ratings(r);
    const auto ev = evaluate_recommender(d, RecommenderSpec::defaults(Family::UserAverage), nullptr, 4, 1);
    EXPECT_EQ(ev.mean_rmse, 0.0);
}

TEST(Evaluate, MatchesBlendsetColumns)
{
    const auto d = toy::random_toy(5);
    const auto specs = std::vector<RecommenderSpec>{RecommenderSpec::defaults(Family::Ubcf, 1),
                                                    RecommenderSpec::defaults(Family::Svd, 2)};
    const auto b = build_blendset(d, specs, nullptr, 3, 6);
    for (int c = 0; c < 2; ++c) {
        const auto ev = evaluate_recommender(d, specs[static_cast<std::size_t>(c)], nullptr, 3, 6);
        EXPECT_EQ(ev.fold_rmse, blendset_column_fold_rmse(b, c));
    }
}

TEST(NestedCv, CorrectnessProperties)
{
    const auto r = checks::nested_cv_checks();
    EXPECT_TRUE(r.ok) << r.detail;
}

TEST(NestedCv, PerfectFeature)
{
    const auto b = perfect_blendset(300);
    const auto report = nested_cv(b, {BlenderSpec::linear(0.0001, BinCriterion::MovieSupport, 1)}, {5, 4, 1, 1});
    EXPECT_LT(report.mean_rmse, 0.01);
    ASSERT_EQ(report.per_fold.size(), 5u);
    const auto j = nlohmann::json::parse(report.to_json().dump());
    double sum = 0;
    for (const auto& f : j["per_fold"])
        sum += f["rmse"].get<double>();
    EXPECT_EQ(j["mean_rmse"].get<double>(), sum / 5);
    EXPECT_EQ(NestedCvReport::from_json(j).to_json(), report.to_json());
}

TEST(NestedCv, SelectsLowestInnerRmseAndBreaksTiesByOrder)
{
    const auto b = perfect_blendset(200);
    const auto good = BlenderSpec::linear(0.0001, BinCriterion::MovieSupport, 1, 1);
    auto bad = BlenderSpec::mlp({2}, 2);
    std::get<MlpParams>(bad.params).epochs = 0;
    const auto report = nested_cv(b, {bad, good, good}, {4, 3, 2, 1});
    for (const auto& f : report.per_fold) {
        EXPECT_TRUE(f.selected == good);
        EXPECT_EQ(f.candidate_scores[1], f.candidate_scores[2]);
    }
    const auto sel = select_blender(b.features, b.actual, b.layout(), {bad, good, good}, 3, 5);
    EXPECT_EQ(sel.index, 1u);
}

TEST(NestedCv, FailingCandidatesAreExcluded)
{
    const auto b = perfect_blendset(200);
    auto diverging = BlenderSpec::mlp({4}, 3);
    std::get<MlpParams>(diverging.params).learning_rate = 1e300;
    std::get<MlpParams>(diverging.params).epochs = 3;
    const auto good = BlenderSpec::linear(0.01, BinCriterion::UserSupport, 1, 1);
    const auto report = nested_cv(b, {diverging, good}, {3, 3, 1, 1});
    EXPECT_FALSE(report.warnings.empty());
    for (const auto& f : report.per_fold) {
        EXPECT_TRUE(f.selected == good);
        EXPECT_TRUE(std::isnan(f.candidate_scores[0]));
    }
    EXPECT_THROW(nested_cv(b, {diverging}, {3, 3, 1, 1}), PipelineError);
    EXPECT_THROW(nested_cv(b, {}, {3, 3, 1, 1}), InvalidArgument);
}

TEST(NestedCv, ThreadCountDoesNotChangeReport)
{
    const auto b = perfect_blendset(150);
    auto mlp = BlenderSpec::mlp({4}, 3);
    std::get<MlpParams>(mlp.params).epochs = 3;
    const std::vector<BlenderSpec> grid{BlenderSpec::linear(1, BinCriterion::UserSupport, 2, 1), BlenderSpec::forest(4, 2),
                                        mlp};
    EXPECT_EQ(nested_cv(b, grid, {5, 4, 9, 1}).to_json().dump(), nested_cv(b, grid, {5, 4, 9, 3}).to_json().dump());
}

TEST(Finalize, SingleCandidateAndPerfectFeature)
{
    const auto b = perfect_blendset(200);
    const auto only = BlenderSpec::forest(3, 4);
    const auto f1 = finalize_blender(b, {only}, 4, 1);
    EXPECT_TRUE(f1.selection.spec == only);
    EXPECT_EQ(std::get<ForestBlenderModel>(f1.model.body()).trees.size(), 3u);

    auto mlp = BlenderSpec::mlp({4}, 3);
    std::get<MlpParams>(mlp.params).epochs = 2;
    const auto f2 = finalize_blender(b, {BlenderSpec::forest(3, 4), mlp, BlenderSpec::linear(0.0001, BinCriterion::MovieSupport, 1)}, 4, 1);
    EXPECT_EQ(f2.selection.spec.family, BlenderFamily::Linear);
    EXPECT_LT(f2.cv_rmse, 0.01);
}

TEST(Grid, DefaultRosterAndGrid)
{
    const auto roster = default_roster(42);
    ASSERT_EQ(roster.size(), 10u);
    std::vector<std::string> labels;
    for (const auto& s : roster)
        labels.push_back(s.label());
    EXPECT_EQ(labels, (std::vector<std::string>{"ubcf-20", "ubcf-80", "ibcf-20", "ibcf-80", "svd-50", "svd-500",
                                                "autorec-100", "autorec-300", "rfcb-20", "rfcb-30"}));
    EXPECT_EQ(BlenderGridConfig::default_mlp_layers().size(), 24u);
}
