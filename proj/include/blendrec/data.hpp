#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "blendrec/common.hpp"

namespace blendrec {

struct Rating {
    std::int64_t user_id = 0;
    std::int64_t item_id = 0;
    double value = 0.0;
    std::int64_t timestamp = 0;

    bool operator==(const Rating&) const = default;
};

// Historical ratings with dense [0, M) x [0, N) re-indexing in order of first
// appearance. Immutable after construction.
class RatingsDataset {
public:
    RatingsDataset() = default;

    // Throws DuplicateError on a repeated (user, item) pair and InvalidArgument
    // on ids <= 0 or values outside [1, 5].
    static RatingsDataset from_ratings(std::vector<Rating> ratings);

    std::size_t size() const { return ratings_.size(); }
    bool empty() const { return ratings_.empty(); }
    Index num_users() const { return static_cast<Index>(user_ids_.size()); }
    Index num_items() const { return static_cast<Index>(item_ids_.size()); }

    const std::vector<Rating>& ratings() const { return ratings_; }
    const Rating& rating(std::size_t r) const { return ratings_[r]; }

    Index user(std::size_t r) const { return users_[r]; }
    Index item(std::size_t r) const { return items_[r]; }
    double value(std::size_t r) const { return ratings_[r].value; }

    std::int64_t user_id(Index u) const { return user_ids_[static_cast<std::size_t>(u)]; }
    std::int64_t item_id(Index i) const { return item_ids_[static_cast<std::size_t>(i)]; }
    const std::vector<std::int64_t>& user_ids() const { return user_ids_; }
    const std::vector<std::int64_t>& item_ids() const { return item_ids_; }

    // -1 when the external id is unknown.
    Index user_index(std::int64_t user_id) const;
    Index item_index(std::int64_t item_id) const;

    bool operator==(const RatingsDataset& other) const { return ratings_ == other.ratings_; }

private:
    std::vector<Rating> ratings_;
    std::vector<Index> users_;
    std::vector<Index> items_;
    std::vector<std::int64_t> user_ids_;
    std::vector<std::int64_t> item_ids_;
    std::unordered_map<std::int64_t, Index> user_index_;
    std::unordered_map<std::int64_t, Index> item_index_;
};

// A subset of a parent dataset's rows. Dense indices are the parent's.
class RatingsView {
public:
    RatingsView() = default;
    RatingsView(const RatingsDataset& parent, std::vector<std::size_t> rows)
        : parent_(&parent), rows_(std::move(rows)) {}

    static RatingsView all(const RatingsDataset& parent);

    const RatingsDataset& parent() const { return *parent_; }
    const std::vector<std::size_t>& rows() const { return rows_; }

    std::size_t size() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }
    Index num_users() const { return parent_->num_users(); }
    Index num_items() const { return parent_->num_items(); }

    Index user(std::size_t k) const { return parent_->user(rows_[k]); }
    Index item(std::size_t k) const { return parent_->item(rows_[k]); }
    double value(std::size_t k) const { return parent_->value(rows_[k]); }

    // M x N sparse rating matrix restricted to this view.
    Eigen::SparseMatrix<double> matrix() const;

private:
    const RatingsDataset* parent_ = nullptr;
    std::vector<std::size_t> rows_;
};

class GenreCatalog {
public:
    GenreCatalog() = default;
    GenreCatalog(std::vector<std::string> genres,
                 std::map<std::int64_t, std::vector<std::string>> item_tokens);

    const std::vector<std::string>& genres() const { return genres_; }
    Index num_genres() const { return static_cast<Index>(genres_.size()); }
    std::size_t num_items() const { return item_genres_.size(); }
    bool contains(std::int64_t item_id) const { return item_genres_.count(item_id) != 0; }

    // All-zero vector for items absent from the catalog.
    Eigen::VectorXd genre_vector(std::int64_t item_id) const;

    // Row i holds the genre vector of the dataset's dense item i.
    Eigen::MatrixXd feature_matrix(const RatingsDataset& dataset) const;

private:
    std::vector<std::string> genres_;
    std::map<std::int64_t, Eigen::VectorXd> item_genres_;
};

struct FoldPlan {
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<int> assignment;

    std::size_t size() const { return assignment.size(); }
    std::vector<std::size_t> fold(int j) const;
    std::vector<std::size_t> complement(int j) const;
    std::vector<std::size_t> fold_sizes() const;

    bool operator==(const FoldPlan&) const = default;
};

RatingsDataset parse_ratings(const std::filesystem::path& path);
RatingsDataset parse_ratings(std::istream& in);

GenreCatalog parse_movies(const std::filesystem::path& path);
GenreCatalog parse_movies(std::istream& in);

void write_ratings(const RatingsDataset& dataset, std::ostream& out);

// Uniform shuffle of [0, n), position p goes to fold p mod k.
FoldPlan make_folds(std::size_t n, int k, std::uint64_t seed);
FoldPlan make_folds(const RatingsDataset& dataset, int k, std::uint64_t seed);

// CSV with header `rating_index,fold`.
void write_fold_plan(const FoldPlan& plan, std::ostream& out);

// (train, test) where test is fold j.
std::pair<RatingsView, RatingsView> split(const RatingsDataset& dataset, const FoldPlan& plan, int j);

} // namespace blendrec
