#pragma once

#include <array>

#include "blendrec/data.hpp"
#include "blendrec/recommenders.hpp"

namespace blendrec {

inline constexpr int kMetaFeatureCount = 4;
inline constexpr std::array<const char*, kMetaFeatureCount> kMetaFeatureNames{
    "user_support", "movie_support", "user_average", "movie_average"};

struct MetaVector {
    double user_support = 0.0;
    double movie_support = 0.0;
    double user_average = 0.0;
    double movie_average = 0.0;

    Eigen::Vector4d as_vector() const { return {user_support, movie_support, user_average, movie_average}; }
    bool operator==(const MetaVector&) const = default;
};

// Meta-features for any (user, item) pair of one training fold. Averages of
// zero-support keys fall back to the fold's global mean.
class MetaFeatureTable {
public:
    explicit MetaFeatureTable(const RatingsView& train) : stats_(RatingStats::from(train)) {}
    explicit MetaFeatureTable(RatingStats stats) : stats_(std::move(stats)) {}

    MetaVector operator()(Index u, Index i) const;
    const RatingStats& stats() const { return stats_; }

private:
    RatingStats stats_;
};

MetaVector compute_meta(const RatingsView& train, Index u, Index i);

} // namespace blendrec
