#include <algorithm>
#include <cmath>
#include <vector>

#include "blendrec/recommenders.hpp"

namespace blendrec {

namespace {

using RowMajorSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using ColMajorSparse = Eigen::SparseMatrix<double, Eigen::ColMajor>;

// Variances below this (relative to the raw second moment) count as zero.
constexpr double kDegenerateVariance = 1e-10;
// Squared norms of centred co-ratings at or below this count as zero.
constexpr double kDegenerateNorm = 1e-12;
// Similarities this close to zero are rounding noise of an exact zero.
constexpr double kNegligibleSimilarity = 1e-12;

struct Neighbor {
    double similarity;
    Index index;
    double rating;
};

// Sorts by similarity descending, index ascending, and keeps `limit`.
void keep_top(std::vector<Neighbor>& candidates, int limit)
{
    auto order = [](const Neighbor& a, const Neighbor& b) {
        return a.similarity != b.similarity ? a.similarity > b.similarity : a.index < b.index;
    };
    const auto keep = std::min(candidates.size(), static_cast<std::size_t>(std::max(limit, 0)));
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), order);
    candidates.resize(keep);
}

} // namespace

Eigen::MatrixXd pearson_user_similarity(const RowMajorSparse& ratings, int min_overlap)
{
    const Index M = ratings.rows();
    const ColMajorSparse by_item = ratings;
    Eigen::MatrixXd sim = Eigen::MatrixXd::Zero(M, M);

    // Sums over co-rated items, accumulated for every v > u.
    Eigen::VectorXd n(M), sx(M), sy(M), sxx(M), syy(M), sxy(M);
    std::vector<Index> touched;
    std::vector<char> mark(static_cast<std::size_t>(M), 0);
    for (Index u = 0; u < M; ++u) {
        touched.clear();
        for (RowMajorSparse::InnerIterator it(ratings, u); it; ++it) {
            const double x = it.value();
            for (ColMajorSparse::InnerIterator jt(by_item, it.col()); jt; ++jt) {
                const Index v = jt.row();
                if (v <= u)
                    continue;
                if (!mark[static_cast<std::size_t>(v)]) {
                    mark[static_cast<std::size_t>(v)] = 1;
                    touched.push_back(v);
                    n[v] = sx[v] = sy[v] = sxx[v] = syy[v] = sxy[v] = 0.0;
                }
                const double y = jt.value();
                n[v] += 1.0;
                sx[v] += x;
                sy[v] += y;
                sxx[v] += x * x;
                syy[v] += y * y;
                sxy[v] += x * y;
            }
        }
        for (Index v : touched) {
            mark[static_cast<std::size_t>(v)] = 0;
            if (n[v] < min_overlap)
                continue;
            const double vx = sxx[v] - sx[v] * sx[v] / n[v];
            const double vy = syy[v] - sy[v] * sy[v] / n[v];
            if (vx <= kDegenerateVariance * sxx[v] || vy <= kDegenerateVariance * syy[v])
                continue;
            const double cov = sxy[v] - sx[v] * sy[v] / n[v];
            const double s = std::clamp(cov / std::sqrt(vx * vy), -1.0, 1.0);
            if (std::abs(s) <= kNegligibleSimilarity)
                continue;
            sim(u, v) = s;
            sim(v, u) = s;
        }
    }
    return sim;
}

Eigen::MatrixXd adjusted_cosine_item_similarity(const RowMajorSparse& ratings,
                                                const Eigen::VectorXd& user_means, int min_overlap)
{
    const Index N = ratings.cols();
    const ColMajorSparse by_item = ratings;
    Eigen::MatrixXd sim = Eigen::MatrixXd::Zero(N, N);

    Eigen::VectorXd n(N), sab(N), saa(N), sbb(N);
    std::vector<Index> touched;
    std::vector<char> mark(static_cast<std::size_t>(N), 0);
    for (Index i = 0; i < N; ++i) {
        touched.clear();
        for (ColMajorSparse::InnerIterator it(by_item, i); it; ++it) {
            const Index u = it.row();
            const double a = it.value() - user_means[u];
            for (RowMajorSparse::InnerIterator jt(ratings, u); jt; ++jt) {
                const Index j = jt.col();
                if (j <= i)
                    continue;
                if (!mark[static_cast<std::size_t>(j)]) {
                    mark[static_cast<std::size_t>(j)] = 1;
                    touched.push_back(j);
                    n[j] = sab[j] = saa[j] = sbb[j] = 0.0;
                }
                const double b = jt.value() - user_means[u];
                n[j] += 1.0;
                sab[j] += a * b;
                saa[j] += a * a;
                sbb[j] += b * b;
            }
        }
        for (Index j : touched) {
            mark[static_cast<std::size_t>(j)] = 0;
            if (n[j] < min_overlap || saa[j] <= kDegenerateNorm || sbb[j] <= kDegenerateNorm)
                continue;
            const double s = std::clamp(sab[j] / std::sqrt(saa[j] * sbb[j]), -1.0, 1.0);
            if (std::abs(s) <= kNegligibleSimilarity)
                continue;
            sim(i, j) = s;
            sim(j, i) = s;
        }
    }
    return sim;
}

std::optional<double> SimilarityModel::predict_raw(Index u, Index i) const
{
    if (u < 0 || i < 0 || u >= by_user.rows() || i >= by_user.cols())
        return std::nullopt;
    std::vector<Neighbor> candidates;
    if (user_based) {
        if (!has_mean[u])
            return std::nullopt;
        for (ColMajorSparse::InnerIterator it(by_item, i); it; ++it) {
            const Index v = it.row();
            const double s = similarities(u, v);
            if (v != u && s != 0.0)
                candidates.push_back({s, v, it.value()});
        }
        keep_top(candidates, neighborhood_size);
        double num = 0.0, den = 0.0;
        for (const auto& c : candidates) {
            num += c.similarity * (c.rating - means[c.index]);
            den += std::abs(c.similarity);
        }
        if (den == 0.0)
            return std::nullopt;
        return means[u] + num / den;
    }

    for (RowMajorSparse::InnerIterator it(by_user, u); it; ++it) {
        const Index j = it.col();
        const double s = similarities(i, j);
        if (j != i && s > 0.0)
            candidates.push_back({s, j, it.value()});
    }
    keep_top(candidates, neighborhood_size);
    double num = 0.0, den = 0.0;
    for (const auto& c : candidates) {
        num += c.similarity * c.rating;
        den += std::abs(c.similarity);
    }
    if (den == 0.0)
        return std::nullopt;
    return num / den;
}

} // namespace blendrec
