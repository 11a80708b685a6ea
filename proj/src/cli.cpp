#include "blendrec/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "blendrec/config.hpp"

namespace blendrec::cli {

namespace {

namespace fs = std::filesystem;

struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string out;
};

class UsageError : public Error {
public:
    using Error::Error;
};

std::string format(const char* fmt, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

ExperimentConfig load_config(const GlobalOptions& g, bool required)
{
    ExperimentConfig c;
    if (!g.config.empty())
        c = ExperimentConfig::load(g.config);
    else if (required)
        throw UsageError("--config is required for this command");
    else
        c = ExperimentConfig::from_json(nlohmann::json::object());
    if (g.seed)
        c.reseed(*g.seed);
    if (!g.out.empty())
        c.output_dir = g.out;
    return c;
}

void write_text(const fs::path& path, const std::string& text)
{
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error("cannot write " + path.string());
    f << text;
}

void write_json(const fs::path& path, const nlohmann::json& j)
{
    write_text(path, j.dump(2) + "\n");
}

struct Inputs {
    RatingsDataset dataset;
    std::optional<GenreCatalog> genres;
};

Inputs load_inputs(const ExperimentConfig& c)
{
    if (c.ratings.empty())
        throw UsageError("config has no ratings path");
    Inputs in{parse_ratings(c.ratings), std::nullopt};
    if (c.movies)
        in.genres = parse_movies(*c.movies);
    if (in.dataset.empty())
        throw UsageError("ratings file " + c.ratings.string() + " is empty");
    return in;
}

int cmd_evaluate(const GlobalOptions& g, const std::string& family, const std::string& params, std::ostream& out)
{
    auto c = load_config(g, true);
    std::vector<RecommenderSpec> specs = c.recommenders;
    if (!family.empty()) {
        nlohmann::json j{{"family", family}, {"seed", derive_seed(c.seed, "recommender", 0)}};
        if (!params.empty()) {
            try {
                j["params"] = nlohmann::json::parse(params);
            } catch (const nlohmann::json::exception& e) {
                throw UsageError(std::string("--params is not valid JSON: ") + e.what());
            }
        }
        specs = {RecommenderSpec::from_json(j)};
    } else if (!params.empty()) {
        throw UsageError("--params requires --family");
    }
    const auto in = load_inputs(c);
    const GenreCatalog* genres = in.genres ? &*in.genres : nullptr;

    nlohmann::json results = nlohmann::json::array();
    out << "recommender           mean_rmse  folds\n";
    for (const auto& spec : specs) {
        const auto ev = evaluate_recommender(in.dataset, spec, genres, c.trainer_folds, c.seed, g.threads);
        results.push_back(ev.to_json());
        char line[64];
        std::snprintf(line, sizeof line, "%-20s  %9.4f ", spec.label().c_str(), ev.mean_rmse);
        out << line;
        for (double r : ev.fold_rmse)
            out << ' ' << format("%.4f", r);
        out << '\n';
    }
    const std::string name = family.empty() ? "evaluate.json" : "evaluate_" + specs.front().label() + ".json";
    write_json(c.output_dir / name, {{"config_digest", c.digest()},
                                     {"seed", c.seed},
                                     {"k", c.trainer_folds},
                                     {"results", results}});
    return kSuccess;
}

int cmd_blendset(const GlobalOptions& g, std::ostream& out)
{
    const auto c = load_config(g, true);
    const auto in = load_inputs(c);
    const GenreCatalog* genres = in.genres ? &*in.genres : nullptr;
    const auto blendset = build_blendset(in.dataset, c.recommenders, genres, c.trainer_folds, c.seed, g.threads);

    std::ostringstream csv, folds;
    write_blendset_csv(blendset, csv);
    write_fold_plan(blendset.fold_plan, folds);
    write_text(c.output_dir / "blendset.csv", csv.str());
    write_text(c.output_dir / "folds.csv", folds.str());

    std::ostringstream ratings;
    write_ratings(in.dataset, ratings);
    nlohmann::json specs = nlohmann::json::array(), columns = nlohmann::json::array();
    for (std::size_t s = 0; s < blendset.specs.size(); ++s) {
        specs.push_back(blendset.specs[s].to_json());
        const auto fold_rmse = blendset_column_fold_rmse(blendset, static_cast<int>(s));
        double mean = 0.0;
        for (double r : fold_rmse)
            mean += r;
        mean /= static_cast<double>(fold_rmse.size());
        columns.push_back({{"column", "p_" + std::to_string(s + 1)},
                           {"label", blendset.specs[s].label()},
                           {"fold_rmse", fold_rmse},
                           {"mean_rmse", mean}});
    }
    write_json(c.output_dir / "blendset.json", {{"config_digest", c.digest()},
                                                {"seed", c.seed},
                                                {"k", c.trainer_folds},
                                                {"rows", blendset.size()},
                                                {"recommenders", specs},
                                                {"columns", columns},
                                                {"dataset_digest", hex_digest(fnv1a(ratings.str()))},
                                                {"fold_plan_digest", hex_digest(fnv1a(folds.str()))}});

    out << "wrote " << blendset.size() << " rows x " << blendset.predictions() << " recommenders to "
        << (c.output_dir / "blendset.csv").string() << '\n';
    for (const auto& col : columns)
        out << "  " << col["column"].get<std::string>() << "  " << col["label"].get<std::string>() << "  "
            << format("%.4f", col["mean_rmse"].get<double>()) << '\n';
    return kSuccess;
}

int cmd_nested_cv(const GlobalOptions& g, const std::string& blendset_path, const std::string& restrict_family,
                  bool finalize, std::ostream& out)
{
    const auto c = load_config(g, false);
    const fs::path path = blendset_path.empty() ? c.output_dir / "blendset.csv" : fs::path(blendset_path);
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw UsageError("cannot open blendset " + path.string());
    Blendset blendset;
    try {
        blendset = read_blendset_csv(f);
    } catch (const ParseError& e) {
        throw UsageError("corrupt blendset " + path.string() + ": " + e.what());
    }
    if (blendset.size() < static_cast<std::size_t>(c.outer_folds))
        throw UsageError("blendset has fewer rows than outer folds");

    auto grid = make_blender_grid(c.blenders, derive_seed(c.seed, "blender-grid"));
    if (!restrict_family.empty())
        grid = restrict_grid(grid, parse_blender_family(restrict_family));
    if (grid.empty())
        throw UsageError("blender grid is empty after restriction");

    const NestedCvOptions options{c.outer_folds, c.inner_folds, c.seed, g.threads};
    const auto report = nested_cv(blendset, grid, options);
    auto j = report.to_json();
    j["config_digest"] = c.digest();
    j["seed"] = c.seed;
    j["blendset_digest"] = [&] {
        std::ostringstream csv;
        write_blendset_csv(blendset, csv);
        return hex_digest(fnv1a(csv.str()));
    }();
    const std::string stem = restrict_family.empty() ? "nested_cv" : "nested_cv_" + restrict_family;
    write_json(c.output_dir / (stem + ".json"), j);

    out << "nested CV (" << report.k << " outer x " << report.inner_k << " inner folds, " << grid.size()
        << " candidates)\n";
    for (const auto& fold : report.per_fold)
        out << "  fold " << fold.fold << "  " << format("%.4f", fold.rmse) << "  " << fold.selected.label() << '\n';
    out << "mean RMSE " << format("%.4f", report.mean_rmse) << '\n';

    if (finalize) {
        const auto final_blender = finalize_blender(blendset, grid, c.inner_folds, c.seed, g.threads);
        write_json(c.output_dir / (restrict_family.empty() ? "blender.json" : "blender_" + restrict_family + ".json"),
                   final_blender.model.to_json());
        out << "final blender " << final_blender.selection.spec.label() << " (cv "
            << format("%.4f", final_blender.cv_rmse) << ")\n";
    }
    return kSuccess;
}

int cmd_report(const std::vector<std::string>& paths, std::ostream& out)
{
    struct Row {
        std::string path, digest, mean, selected;
    };
    std::vector<Row> rows;
    for (const auto& p : paths) {
        std::ifstream f(p);
        if (!f)
            throw UsageError("cannot read report " + p);
        nlohmann::json j;
        try {
            f >> j;
            Row row{p, j.value("config_digest", std::string("-")), j.at("mean_rmse").dump(), ""};
            std::vector<std::string> seen;
            for (const auto& fold : j.at("per_fold")) {
                const auto label = fold.contains("selected_label")
                                       ? fold.at("selected_label").get<std::string>()
                                       : BlenderSpec::from_json(fold.at("selected")).label();
                if (std::find(seen.begin(), seen.end(), label) == seen.end())
                    seen.push_back(label);
            }
            for (std::size_t k = 0; k < seen.size(); ++k)
                row.selected += (k ? "; " : "") + seen[k];
            rows.push_back(std::move(row));
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("report " + p + " is not a nested-cv report: " + e.what());
        }
    }
    std::size_t wp = 6, wd = 13, wm = 9;
    for (const auto& r : rows) {
        wp = std::max(wp, r.path.size());
        wd = std::max(wd, r.digest.size());
        wm = std::max(wm, r.mean.size());
    }
    auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); };
    out << pad("report", wp) << "  " << pad("config_digest", wd) << "  " << pad("mean_rmse", wm) << "  selected\n";
    for (const auto& r : rows)
        out << pad(r.path, wp) << "  " << pad(r.digest, wd) << "  " << pad(r.mean, wm) << "  " << r.selected << '\n';
    return kSuccess;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Hybrid recommender: trainer-layer blendsets and nested cross-validated blending", "blendrec"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--config", g.config, "Experiment config (JSON)");
    app.add_option("--seed", g.seed, "Override the config seed");
    app.add_option("--threads", g.threads, "Worker threads; outputs do not depend on it")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Output directory (overrides the config)");

    std::string family, params;
    auto* evaluate = app.add_subcommand("evaluate", "Cross-validated RMSE of individual recommenders");
    evaluate->add_option("--family", family, "Evaluate one family instead of the configured roster");
    evaluate->add_option("--params", params, "Hyper-parameters for --family as a JSON object");

    app.add_subcommand("blendset", "Build the out-of-fold blendset");

    std::string blendset_path, restrict_family;
    bool finalize = false;
    auto* nested = app.add_subcommand("nested-cv", "Nested cross-validation over the blender grid");
    nested->add_option("--blendset", blendset_path, "Blendset CSV (default: <out>/blendset.csv)");
    nested->add_option("--restrict-family", restrict_family, "Only consider one blender family")
        ->check(CLI::IsMember({"linear", "forest", "mlp"}));
    nested->add_flag("--finalize", finalize, "Also select and refit a serving blender on all rows");

    std::vector<std::string> report_paths;
    auto* report = app.add_subcommand("report", "Compare nested-cv report files");
    report->add_option("reports", report_paths, "Report JSON files")->required();

    for (auto* sub : {evaluate, nested, report})
        sub->fallthrough();
    app.get_subcommand("blendset")->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }

    try {
        if (evaluate->parsed())
            return cmd_evaluate(g, family, params, out);
        if (app.get_subcommand("blendset")->parsed())
            return cmd_blendset(g, out);
        if (nested->parsed())
            return cmd_nested_cv(g, blendset_path, restrict_family, finalize, out);
        return cmd_report(report_paths, out);
    } catch (const TrainingError& e) {
        err << "training error: " << e.what() << '\n';
        return kRuntimeError;
    } catch (const PipelineError& e) {
        err << "pipeline error: " << e.what() << '\n';
        return kRuntimeError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << '\n';
        return kRuntimeError;
    }
}

} // namespace blendrec::cli
