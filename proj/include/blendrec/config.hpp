#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blendrec/pipeline.hpp"

namespace blendrec {

// One experiment, read from a JSON document. Relative paths resolve against
// the config file's directory.
struct ExperimentConfig {
    std::filesystem::path ratings;
    std::optional<std::filesystem::path> movies;
    int trainer_folds = 5;
    int outer_folds = 5;
    int inner_folds = 4;
    std::uint64_t seed = 42;
    std::vector<RecommenderSpec> recommenders;
    BlenderGridConfig blenders;
    std::filesystem::path output_dir = "out";

    // Throws InvalidArgument on bad fold counts, empty grids or unknown names.
    static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static ExperimentConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    // Re-derives recommender seeds after the global seed changes, keeping
    // seeds that the config file pinned explicitly.
    void reseed(std::uint64_t new_seed);
    void validate() const;
    std::string digest() const;

    std::vector<bool> pinned_seeds;
};

} // namespace blendrec
