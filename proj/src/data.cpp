#include "blendrec/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <string_view>

namespace blendrec {

namespace {

std::vector<std::string_view> split_fields(std::string_view line, std::string_view sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + sep.size();
    }
}

std::string_view strip_cr(std::string_view s)
{
    if (!s.empty() && s.back() == '\r')
        s.remove_suffix(1);
    return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out)
{
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

std::uint64_t pair_key(std::int64_t user, std::int64_t item)
{
    return (static_cast<std::uint64_t>(user) << 32) ^ static_cast<std::uint64_t>(item);
}

} // namespace

RatingsDataset RatingsDataset::from_ratings(std::vector<Rating> ratings)
{
    RatingsDataset d;
    d.users_.reserve(ratings.size());
    d.items_.reserve(ratings.size());
    std::set<std::pair<std::int64_t, std::int64_t>> seen;
    for (const auto& r : ratings) {
        if (r.user_id <= 0 || r.item_id <= 0)
            throw InvalidArgument("ids must be positive integers");
        if (!(r.value >= kMinRating && r.value <= kMaxRating))
            throw InvalidArgument("rating " + std::to_string(r.value) + " outside [1, 5]");
        if (!seen.emplace(r.user_id, r.item_id).second)
            throw DuplicateError("duplicate rating for user " + std::to_string(r.user_id) +
                                 ", item " + std::to_string(r.item_id));
        auto [u, u_new] = d.user_index_.try_emplace(r.user_id, d.num_users());
        if (u_new)
            d.user_ids_.push_back(r.user_id);
        auto [i, i_new] = d.item_index_.try_emplace(r.item_id, d.num_items());
        if (i_new)
            d.item_ids_.push_back(r.item_id);
        d.users_.push_back(u->second);
        d.items_.push_back(i->second);
    }
    d.ratings_ = std::move(ratings);
    return d;
}

Index RatingsDataset::user_index(std::int64_t user_id) const
{
    auto it = user_index_.find(user_id);
    return it == user_index_.end() ? -1 : it->second;
}

Index RatingsDataset::item_index(std::int64_t item_id) const
{
    auto it = item_index_.find(item_id);
    return it == item_index_.end() ? -1 : it->second;
}

RatingsView RatingsView::all(const RatingsDataset& parent)
{
    std::vector<std::size_t> rows(parent.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return RatingsView(parent, std::move(rows));
}

Eigen::SparseMatrix<double> RatingsView::matrix() const
{
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(rows_.size());
    for (std::size_t k = 0; k < rows_.size(); ++k)
        triplets.emplace_back(user(k), item(k), value(k));
    Eigen::SparseMatrix<double> m(num_users(), num_items());
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

GenreCatalog::GenreCatalog(std::vector<std::string> genres,
                           std::map<std::int64_t, std::vector<std::string>> item_tokens)
    : genres_(std::move(genres))
{
    for (const auto& [item, tokens] : item_tokens) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(num_genres());
        for (const auto& t : tokens) {
            auto it = std::lower_bound(genres_.begin(), genres_.end(), t);
            if (it == genres_.end() || *it != t)
                throw InvalidArgument("genre '" + t + "' not in genre list");
            v[it - genres_.begin()] = 1.0;
        }
        item_genres_.emplace(item, std::move(v));
    }
}

Eigen::VectorXd GenreCatalog::genre_vector(std::int64_t item_id) const
{
    auto it = item_genres_.find(item_id);
    if (it == item_genres_.end())
        return Eigen::VectorXd::Zero(num_genres());
    return it->second;
}

Eigen::MatrixXd GenreCatalog::feature_matrix(const RatingsDataset& dataset) const
{
    Eigen::MatrixXd f(dataset.num_items(), num_genres());
    for (Index i = 0; i < dataset.num_items(); ++i)
        f.row(i) = genre_vector(dataset.item_id(i)).transpose();
    return f;
}

std::vector<std::size_t> FoldPlan::fold(int j) const
{
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < assignment.size(); ++r)
        if (assignment[r] == j)
            out.push_back(r);
    return out;
}

std::vector<std::size_t> FoldPlan::complement(int j) const
{
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < assignment.size(); ++r)
        if (assignment[r] != j)
            out.push_back(r);
    return out;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const
{
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int a : assignment)
        ++sizes[static_cast<std::size_t>(a)];
    return sizes;
}

RatingsDataset parse_ratings(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open ratings file " + path.string());
    return parse_ratings(in);
}

RatingsDataset parse_ratings(std::istream& in)
{
    std::vector<Rating> ratings;
    std::unordered_map<std::uint64_t, std::size_t> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto text = strip_cr(line);
        if (text.empty())
            continue;
        auto fields = split_fields(text, "::");
        if (fields.size() != 4)
            throw ParseError("expected 4 '::'-separated fields, got " + std::to_string(fields.size()),
                             line_no);
        Rating r;
        if (!parse_number(fields[0], r.user_id) || r.user_id <= 0)
            throw ParseError("user id is not a positive integer", line_no);
        if (!parse_number(fields[1], r.item_id) || r.item_id <= 0)
            throw ParseError("movie id is not a positive integer", line_no);
        if (!parse_number(fields[2], r.value) || !(r.value >= kMinRating && r.value <= kMaxRating))
            throw ParseError("rating is not a number in [1, 5]", line_no);
        if (!parse_number(fields[3], r.timestamp))
            throw ParseError("timestamp is not an integer", line_no);
        if (r.user_id > 0xffffffffLL || r.item_id > 0xffffffffLL)
            throw ParseError("id exceeds 32 bits", line_no);
        auto [it, fresh] = seen.emplace(pair_key(r.user_id, r.item_id), line_no);
        if (!fresh)
            throw DuplicateError("line " + std::to_string(line_no) + ": duplicate rating for user " +
                                 std::to_string(r.user_id) + ", movie " + std::to_string(r.item_id) +
                                 " (first seen on line " + std::to_string(it->second) + ")");
        ratings.push_back(r);
    }
    return RatingsDataset::from_ratings(std::move(ratings));
}

GenreCatalog parse_movies(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open movies file " + path.string());
    return parse_movies(in);
}

GenreCatalog parse_movies(std::istream& in)
{
    std::map<std::int64_t, std::vector<std::string>> items;
    std::set<std::string> all;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto text = strip_cr(line);
        if (text.empty())
            continue;
        // The title may itself contain "::", so take the id from the front and
        // the genres from the back.
        auto first = text.find("::");
        auto last = text.rfind("::");
        if (first == std::string_view::npos || first == last)
            throw ParseError("expected 'MovieID::Title::Genres'", line_no);
        std::int64_t id = 0;
        if (!parse_number(text.substr(0, first), id) || id <= 0)
            throw ParseError("movie id is not a positive integer", line_no);
        auto genre_field = text.substr(last + 2);
        if (genre_field.empty())
            throw ParseError("movie has no genres", line_no);
        std::vector<std::string> tokens;
        for (auto g : split_fields(genre_field, "|")) {
            if (g.empty())
                throw ParseError("empty genre token", line_no);
            tokens.emplace_back(g);
            all.emplace(g);
        }
        if (!items.emplace(id, std::move(tokens)).second)
            throw ParseError("duplicate movie id " + std::to_string(id), line_no);
    }
    return GenreCatalog(std::vector<std::string>(all.begin(), all.end()), std::move(items));
}

void write_ratings(const RatingsDataset& dataset, std::ostream& out)
{
    char buf[32];
    for (const auto& r : dataset.ratings()) {
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, r.value);
        out << r.user_id << "::" << r.item_id << "::" << std::string_view(buf, end - buf) << "::"
            << r.timestamp << '\n';
    }
}

FoldPlan make_folds(std::size_t n, int k, std::uint64_t seed)
{
    if (k < 2)
        throw InvalidArgument("fold count must be at least 2, got " + std::to_string(k));
    if (static_cast<std::size_t>(k) > n)
        throw InvalidArgument("fold count " + std::to_string(k) + " exceeds row count " +
                              std::to_string(n));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    // Fisher-Yates with explicit draws: std::shuffle's sequence is
    // library-specific, this one is not.
    for (std::size_t p = n; p > 1; --p) {
        std::size_t q = static_cast<std::size_t>(rng() % p);
        std::swap(order[p - 1], order[q]);
    }
    FoldPlan plan{k, seed, std::vector<int>(n)};
    for (std::size_t p = 0; p < n; ++p)
        plan.assignment[order[p]] = static_cast<int>(p % static_cast<std::size_t>(k));
    return plan;
}

FoldPlan make_folds(const RatingsDataset& dataset, int k, std::uint64_t seed)
{
    if (dataset.empty())
        throw InvalidArgument("cannot fold an empty dataset");
    return make_folds(dataset.size(), k, seed);
}

void write_fold_plan(const FoldPlan& plan, std::ostream& out)
{
    out << "rating_index,fold\n";
    for (std::size_t r = 0; r < plan.assignment.size(); ++r)
        out << r << ',' << plan.assignment[r] << '\n';
}

std::pair<RatingsView, RatingsView> split(const RatingsDataset& dataset, const FoldPlan& plan, int j)
{
    if (j < 0 || j >= plan.k)
        throw InvalidArgument("fold " + std::to_string(j) + " outside [0, " + std::to_string(plan.k) + ")");
    if (plan.size() != dataset.size())
        throw InvalidArgument("fold plan does not match dataset size");
    return {RatingsView(dataset, plan.complement(j)), RatingsView(dataset, plan.fold(j))};
}

} // namespace blendrec
