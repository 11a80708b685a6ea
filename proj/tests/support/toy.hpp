#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "blendrec/data.hpp"

namespace blendrec::toy {

// Random dataset with at most `max_ratings` integer ratings over a small
// user x item grid. Every user and item appears at least once.
inline RatingsDataset random_toy(std::uint64_t seed, std::size_t max_ratings = 50)
{
    std::mt19937_64 rng(seed);
    const int M = 3 + static_cast<int>(rng() % 6);
    const int N = 3 + static_cast<int>(rng() % 6);
    std::vector<std::pair<int, int>> cells;
    for (int u = 0; u < M; ++u)
        for (int i = 0; i < N; ++i)
            cells.emplace_back(u, i);
    for (std::size_t p = cells.size(); p > 1; --p)
        std::swap(cells[p - 1], cells[rng() % p]);
    const std::size_t want = std::min<std::size_t>(
        max_ratings, cells.size() * (55 + rng() % 40) / 100 + 1);
    cells.resize(std::min(want, cells.size()));
    std::vector<Rating> ratings;
    for (auto [u, i] : cells)
        ratings.push_back({u + 1, 100 + i, static_cast<double>(1 + rng() % 5), 1000 + static_cast<std::int64_t>(ratings.size())});
    return RatingsDataset::from_ratings(std::move(ratings));
}

// 20 ratings, 5 users x 6 items, fixed values.
inline RatingsDataset twenty_ratings()
{
    const int table[20][3] = {{1, 1, 5}, {1, 2, 3}, {1, 3, 4}, {1, 5, 1}, {2, 1, 4}, {2, 2, 2}, {2, 4, 5},
                              {2, 6, 3}, {3, 2, 4}, {3, 3, 5}, {3, 4, 2}, {3, 5, 2}, {4, 1, 1}, {4, 3, 2},
                              {4, 4, 4}, {4, 6, 5}, {5, 2, 3}, {5, 3, 3}, {5, 5, 4}, {5, 6, 1}};
    std::vector<Rating> ratings;
    for (const auto& row : table)
        ratings.push_back({row[0], row[1], static_cast<double>(row[2]), 0});
    return RatingsDataset::from_ratings(std::move(ratings));
}

inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("blendrec-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace blendrec::toy
