#include "blendrec/config.hpp"

#include <fstream>

namespace blendrec {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    std::filesystem::path path(p);
    return (path.is_absolute() || base.empty() ? path : base / path).lexically_normal();
}

} // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir)
{
    ExperimentConfig c;
    try {
        if (j.contains("ratings"))
            c.ratings = resolve(base_dir, j.at("ratings").get<std::string>());
        if (j.contains("movies") && !j.at("movies").is_null())
            c.movies = resolve(base_dir, j.at("movies").get<std::string>());
        c.trainer_folds = j.value("trainer_folds", c.trainer_folds);
        c.outer_folds = j.value("outer_folds", c.outer_folds);
        c.inner_folds = j.value("inner_folds", c.inner_folds);
        c.seed = j.value("seed", c.seed);
        if (j.contains("output_dir"))
            c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());

        if (j.contains("recommenders")) {
            std::size_t index = 0;
            for (const auto& r : j.at("recommenders")) {
                auto spec = RecommenderSpec::from_json(r);
                const bool pinned = r.contains("seed");
                if (!pinned)
                    spec.seed = derive_seed(c.seed, "recommender", index);
                c.recommenders.push_back(spec);
                c.pinned_seeds.push_back(pinned);
                ++index;
            }
        } else {
            c.recommenders = default_roster(c.seed);
            c.pinned_seeds.assign(c.recommenders.size(), false);
        }

        if (j.contains("blenders")) {
            const auto& b = j.at("blenders");
            auto& g = c.blenders;
            g.lambdas = b.value("lambdas", g.lambdas);
            if (b.contains("criteria")) {
                g.criteria.clear();
                for (const auto& name : b.at("criteria"))
                    g.criteria.push_back(parse_bin_criterion(name.get<std::string>()));
            }
            g.bin_counts = b.value("bin_counts", g.bin_counts);
            g.tree_counts = b.value("tree_counts", g.tree_counts);
            g.mlp_layers = b.value("mlp_layers", g.mlp_layers);
            g.mlp_epochs = b.value("mlp_epochs", g.mlp_epochs);
            g.forest_min_leaf = b.value("forest_min_leaf", g.forest_min_leaf);
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot open config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("config " + path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

void ExperimentConfig::validate() const
{
    if (trainer_folds < 2 || outer_folds < 2 || inner_folds < 2)
        throw InvalidArgument("fold counts must be at least 2");
    if (recommenders.empty())
        throw InvalidArgument("recommender roster is empty");
    const auto& g = blenders;
    if (g.lambdas.empty() && g.tree_counts.empty() && g.mlp_layers.empty())
        throw InvalidArgument("blender grid is empty");
    if (!g.lambdas.empty() && (g.criteria.empty() || g.bin_counts.empty()))
        throw InvalidArgument("linear grid needs at least one criterion and bin count");
    for (double l : g.lambdas)
        if (l < 0)
            throw InvalidArgument("lambda values must be non-negative");
    for (int b : g.bin_counts)
        if (b < 1)
            throw InvalidArgument("bin counts must be positive");
    for (int t : g.tree_counts)
        if (t < 1)
            throw InvalidArgument("tree counts must be positive");
    for (const auto& layers : g.mlp_layers) {
        if (layers.empty() || layers.size() > 3)
            throw InvalidArgument("mlp configurations need 1 to 3 hidden layers");
        for (int w : layers)
            if (w < 1)
                throw InvalidArgument("mlp layer sizes must be positive");
    }
    if (g.mlp_epochs < 0 || g.forest_min_leaf < 1)
        throw InvalidArgument("mlp_epochs must be >= 0 and forest_min_leaf >= 1");
}

void ExperimentConfig::reseed(std::uint64_t new_seed)
{
    seed = new_seed;
    for (std::size_t k = 0; k < recommenders.size(); ++k)
        if (k >= pinned_seeds.size() || !pinned_seeds[k])
            recommenders[k].seed = derive_seed(seed, "recommender", k);
}

nlohmann::json ExperimentConfig::to_json() const
{
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : recommenders)
        recs.push_back(r.to_json());
    std::vector<std::string> criteria;
    for (auto c : blenders.criteria)
        criteria.push_back(bin_criterion_name(c));
    nlohmann::json j = {{"ratings", ratings.string()},
                        {"trainer_folds", trainer_folds},
                        {"outer_folds", outer_folds},
                        {"inner_folds", inner_folds},
                        {"seed", seed},
                        {"recommenders", recs},
                        {"blenders",
                         {{"lambdas", blenders.lambdas},
                          {"criteria", criteria},
                          {"bin_counts", blenders.bin_counts},
                          {"tree_counts", blenders.tree_counts},
                          {"mlp_layers", blenders.mlp_layers},
                          {"mlp_epochs", blenders.mlp_epochs},
                          {"forest_min_leaf", blenders.forest_min_leaf}}}};
    j["movies"] = movies ? nlohmann::json(movies->string()) : nlohmann::json(nullptr);
    return j;
}

std::string ExperimentConfig::digest() const
{
    // Paths are excluded so that relocating a dataset keeps the digest.
    auto j = to_json();
    j.erase("ratings");
    j.erase("movies");
    return hex_digest(fnv1a(j.dump()));
}

} // namespace blendrec
