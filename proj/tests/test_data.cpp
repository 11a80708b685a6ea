#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "blendrec/data.hpp"
#include "toy.hpp"

using namespace blendrec;

namespace {

RatingsDataset parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_ratings(in);
}

GenreCatalog movies(const std::string& text)
{
    std::istringstream in(text);
    return parse_movies(in);
}

} // namespace

TEST(ParseRatings, TwoLines)
{
    const auto d = parse("1::10::5::964982703\n2::10::3::964982931\n");
    EXPECT_EQ(d.num_users(), 2);
    EXPECT_EQ(d.num_items(), 1);
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d.rating(0).timestamp, 964982703);
    EXPECT_EQ(d.value(1), 3.0);
    EXPECT_EQ(d.user_index(2), 1);
    EXPECT_EQ(d.item_index(10), 0);
    EXPECT_EQ(d.user_index(99), -1);
}

TEST(ParseRatings, EmptyFile)
{
    const auto d = parse("");
    EXPECT_TRUE(d.empty());
    EXPECT_EQ(d.num_users(), 0);
    EXPECT_EQ(d.num_items(), 0);
}

TEST(ParseRatings, FirstAppearanceOrderAndCrlf)
{
    const auto d = parse("7::3::4::0\r\n5::3::2::0\r\n\r\n7::9::1::0\r\n");
    EXPECT_EQ(d.user_id(0), 7);
    EXPECT_EQ(d.user_id(1), 5);
    EXPECT_EQ(d.item_id(1), 9);
    EXPECT_EQ(d.size(), 3u);
}

TEST(ParseRatings, MalformedLinesNameTheLine)
{
    const char* bad[] = {"1::2::3\n", "1::x::3::4\n", "1::2::6::0\n", "1::2::0::0\n", "-1::2::3::0\n",
                         "1::2::3::0::5\n"};
    for (const char* text : bad) {
        try {
            parse(std::string("1::1::1::0\n") + text);
            ADD_FAILURE() << "accepted " << text;
        } catch (const ParseError& e) {
            EXPECT_EQ(e.line(), 2u) << text;
        }
    }
}

TEST(ParseRatings, DuplicatePair)
{
    EXPECT_THROW(parse("1::2::3::0\n1::2::4::0\n"), DuplicateError);
}

TEST(ParseRatings, RoundTrip)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto d = toy::random_toy(seed);
        std::ostringstream out;
        write_ratings(d, out);
        EXPECT_EQ(parse(out.str()), d);
    }
}

TEST(ParseRatings, MissingFile)
{
    EXPECT_THROW(parse_ratings(std::filesystem::path("/nonexistent/ratings.dat")), Error);
}

TEST(ParseMovies, SingleLine)
{
    const auto c = movies("1::Toy Story (1995)::Animation|Comedy\n");
    ASSERT_EQ(c.num_genres(), 2);
    EXPECT_EQ(c.genres()[0], "Animation");
    EXPECT_EQ(c.genre_vector(1), Eigen::Vector2d(1, 1));
}

TEST(ParseMovies, SortedUnion)
{
    const auto c = movies("1::A::Drama|Comedy\n2::B::Comedy|Action\n");
    ASSERT_EQ(c.num_genres(), 3);
    EXPECT_EQ(c.genres(), (std::vector<std::string>{"Action", "Comedy", "Drama"}));
    EXPECT_EQ(c.genre_vector(2), Eigen::Vector3d(1, 1, 0));
    EXPECT_EQ(c.genre_vector(42), Eigen::Vector3d::Zero());
    EXPECT_FALSE(c.contains(42));
}

TEST(ParseMovies, TitleWithSeparator)
{
    const auto c = movies("5::Face::Off (1997)::Action\n");
    EXPECT_TRUE(c.contains(5));
    EXPECT_EQ(c.num_genres(), 1);
}

TEST(ParseMovies, Malformed)
{
    EXPECT_THROW(movies("1::A::Drama\nabc\n"), ParseError);
    EXPECT_THROW(movies("1::A::\n"), ParseError);
    try {
        movies("1::A::Drama\nx::B::Drama\n");
        ADD_FAILURE();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(ParseMovies, FeatureMatrixFollowsDenseItems)
{
    const auto c = movies("10::A::Drama\n20::B::Comedy\n");
    const auto d = parse("1::20::4::0\n1::10::3::0\n1::30::2::0\n");
    const auto F = c.feature_matrix(d);
    ASSERT_EQ(F.rows(), 3);
    EXPECT_EQ(F.row(0), Eigen::RowVector2d(1, 0));  // item 20 -> Comedy
    EXPECT_EQ(F.row(1), Eigen::RowVector2d(0, 1));
    EXPECT_EQ(F.row(2), Eigen::RowVector2d(0, 0));
}

TEST(Folds, EqualDivision)
{
    const auto plan = make_folds(10, 5, 1);
    EXPECT_EQ(plan.fold_sizes(), std::vector<std::size_t>(5, 2));
}

TEST(Folds, Remainder)
{
    auto sizes = make_folds(11, 5, 3).fold_sizes();
    std::sort(sizes.begin(), sizes.end());
    EXPECT_EQ(sizes, (std::vector<std::size_t>{2, 2, 2, 2, 3}));
}

TEST(Folds, Determinism)
{
    EXPECT_EQ(make_folds(100, 7, 9), make_folds(100, 7, 9));
    EXPECT_NE(make_folds(100, 7, 9).assignment, make_folds(100, 7, 10).assignment);
    std::ostringstream a, b;
    write_fold_plan(make_folds(50, 4, 2), a);
    write_fold_plan(make_folds(50, 4, 2), b);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(a.str().substr(0, 17), "rating_index,fold");
}

TEST(Folds, PartitionProperty)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed)
        for (int k : {2, 3, 5, 13}) {
            const std::size_t n = 13 + seed * 7;
            const auto plan = make_folds(n, k, seed);
            std::multiset<std::size_t> all;
            for (int j = 0; j < k; ++j) {
                const auto f = plan.fold(j);
                all.insert(f.begin(), f.end());
            }
            ASSERT_EQ(all.size(), n);
            std::size_t expect = 0;
            for (auto v : all)
                ASSERT_EQ(v, expect++);  // each index exactly once
            const auto sizes = plan.fold_sizes();
            EXPECT_LE(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()),
                      1u);
        }
}

TEST(Folds, InvalidK)
{
    EXPECT_THROW(make_folds(10, 1, 0), InvalidArgument);
    EXPECT_THROW(make_folds(3, 4, 0), InvalidArgument);
    EXPECT_THROW(make_folds(RatingsDataset{}, 2, 0), InvalidArgument);
}

TEST(Split, Definition)
{
    const auto d = toy::twenty_ratings();
    const auto plan = make_folds(d, 2, 5);
    const auto [train, test] = split(d, plan, 0);
    EXPECT_EQ(test.rows(), plan.fold(0));
    EXPECT_EQ(train.rows(), plan.fold(1));
    EXPECT_EQ(train.size() + test.size(), d.size());
    EXPECT_THROW(split(d, plan, 2), InvalidArgument);
    EXPECT_THROW(split(d, plan, -1), InvalidArgument);
}

TEST(Split, Singletons)
{
    const auto d = toy::twenty_ratings();
    const auto plan = make_folds(d, 20, 5);
    for (int j = 0; j < 20; ++j) {
        const auto [train, test] = split(d, plan, j);
        EXPECT_EQ(test.size(), 1u);
        EXPECT_EQ(train.size(), 19u);
        EXPECT_EQ(train.num_users(), d.num_users());
    }
}

TEST(Dataset, Validation)
{
    EXPECT_THROW(RatingsDataset::from_ratings({{1, 1, 0.5, 0}}), InvalidArgument);
    EXPECT_THROW(RatingsDataset::from_ratings({{0, 1, 3, 0}}), InvalidArgument);
    EXPECT_THROW(RatingsDataset::from_ratings({{1, 1, 3, 0}, {1, 1, 4, 0}}), DuplicateError);
}
