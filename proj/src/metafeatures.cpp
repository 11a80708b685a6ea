#include "blendrec/metafeatures.hpp"

namespace blendrec {

MetaVector MetaFeatureTable::operator()(Index u, Index i) const
{
    MetaVector m;
    const bool known_user = u >= 0 && u < stats_.user_count.size();
    const bool known_item = i >= 0 && i < stats_.item_count.size();
    m.user_support = known_user ? stats_.user_count[u] : 0.0;
    m.movie_support = known_item ? stats_.item_count[i] : 0.0;
    m.user_average = stats_.user_mean(u).value_or(stats_.global_mean);
    m.movie_average = stats_.item_mean(i).value_or(stats_.global_mean);
    return m;
}

MetaVector compute_meta(const RatingsView& train, Index u, Index i)
{
    return MetaFeatureTable(train)(u, i);
}

} // namespace blendrec
