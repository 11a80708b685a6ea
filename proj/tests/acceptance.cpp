// Acceptance run: one PASS/FAIL line per criterion.
//
//   blendrec_acceptance [--only N] [--ml1m DIR] [--work DIR] [--threads N]
//
// Criterion 6 (MovieLens 1M) runs only when --ml1m or BLENDREC_ML1M_DIR
// points at a directory holding ratings.dat and movies.dat.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <sstream>

#include "CLI11.hpp"
#include "blendrec/cli.hpp"
#include "blendrec/config.hpp"
#include "checks.hpp"

using namespace blendrec;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    enum Status { Pass, Fail, Skip } status = Pass;
    std::string detail;
};

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

int run_cli(const std::vector<std::string>& args, std::string* out = nullptr)
{
    std::ostringstream o, e;
    const int code = cli::run(args, o, e);
    if (out)
        *out = o.str();
    if (code != 0)
        std::cerr << "  blendrec";
    if (code != 0)
        for (const auto& a : args)
            std::cerr << ' ' << a;
    if (code != 0)
        std::cerr << "\n  -> exit " << code << ": " << e.str();
    return code;
}

Outcome from_check(const checks::Result& r, double seconds, double budget)
{
    Outcome o;
    o.detail = r.detail + "; worst deviation " + fmt("%.3g", r.worst) + "; " + fmt("%.1f s", seconds);
    if (!r.ok)
        o.status = Outcome::Fail;
    if (budget > 0 && seconds >= budget) {
        o.status = Outcome::Fail;
        o.detail += " (over the " + fmt("%.0f s", budget) + " budget)";
    }
    return o;
}

template <typename F>
double timed(F&& f)
{
    const auto start = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Blendset + nested CV + finalisation through the command-line front end.
struct EndToEnd {
    double best_individual = 0;
    std::string best_label;
    double blend = 0;
    double seconds = 0;
    double final_train_rmse = 0;
    double final_cv_rmse = 0;
    std::string selected;
    nlohmann::json columns;
};

EndToEnd end_to_end(const fs::path& config, const fs::path& out, int threads)
{
    EndToEnd r;
    const std::vector<std::string> base{"--config", config.string(), "--out", out.string(), "--threads",
                                        std::to_string(threads)};
    auto with = [&](std::vector<std::string> extra) {
        auto a = base;
        a.insert(a.end(), extra.begin(), extra.end());
        return a;
    };
    std::string stdout_text;
    r.seconds = timed([&] {
        if (run_cli(with({"blendset"})) != 0)
            throw std::runtime_error("blendset command failed");
        if (run_cli(with({"nested-cv", "--finalize"}), &stdout_text) != 0)
            throw std::runtime_error("nested-cv command failed");
    });
    const auto provenance = read_json(out / "blendset.json");
    r.columns = provenance["columns"];
    r.best_individual = INFINITY;
    for (const auto& c : r.columns)
        if (c["mean_rmse"].get<double>() < r.best_individual) {
            r.best_individual = c["mean_rmse"].get<double>();
            r.best_label = c["label"].get<std::string>();
        }
    const auto report = read_json(out / "nested_cv.json");
    r.blend = report["mean_rmse"].get<double>();
    std::map<std::string, int> picks;
    for (const auto& f : report["per_fold"])
        ++picks[f["selected_label"].get<std::string>()];
    for (const auto& [label, n] : picks)
        r.selected += (r.selected.empty() ? "" : ", ") + label + " x" + std::to_string(n);

    // Serving model: training RMSE on all rows versus its selection CV RMSE.
    const auto model = BlenderModel::from_json(read_json(out / "blender.json"));
    std::ifstream csv(out / "blendset.csv");
    const auto blendset = read_blendset_csv(csv);
    r.final_train_rmse = rmse(model.predict_all(blendset.features), blendset.actual);
    const auto pos = stdout_text.find("(cv ");
    r.final_cv_rmse = pos == std::string::npos ? NAN : std::stod(stdout_text.substr(pos + 4));
    return r;
}

Outcome criterion5(const fs::path& source, const fs::path& work, int threads)
{
    const auto config = source / "configs" / "ml100k_desk.json";
    const auto cfg = ExperimentConfig::load(config);
    if (!fs::exists(cfg.ratings))
        return {Outcome::Skip, "MovieLens 100K not found at " + cfg.ratings.string() +
                                   " (run tools/fetch_movielens_100k.py)"};
    const auto r = end_to_end(config, work / "ml100k", threads);
    const double margin = r.best_individual - r.blend;
    Outcome o;
    o.detail = "blend " + fmt("%.4f", r.blend) + " vs best individual " + r.best_label + " " +
               fmt("%.4f", r.best_individual) + " (margin " + fmt("%.4f", margin) + "); selected " + r.selected +
               "; final blender train " + fmt("%.4f", r.final_train_rmse) + " / cv " + fmt("%.4f", r.final_cv_rmse) +
               "; " + fmt("%.0f s", r.seconds);
    if (!(margin >= 0.005))
        o.status = Outcome::Fail;
    if (!(r.final_train_rmse <= r.final_cv_rmse + 0.05))
        o.status = Outcome::Fail;
    if (r.seconds > 1800) {
        o.status = Outcome::Fail;
        o.detail += " (over 30 min)";
    }
    return o;
}

Outcome criterion6(const fs::path& source, const fs::path& ml1m, const fs::path& work, int threads)
{
    if (ml1m.empty())
        return {Outcome::Skip, "optional long run; pass --ml1m DIR or set BLENDREC_ML1M_DIR"};
    auto j = read_json(source / "configs" / "ml1m.json");
    j["ratings"] = fs::absolute(ml1m / "ratings.dat").string();
    j["movies"] = fs::absolute(ml1m / "movies.dat").string();
    fs::create_directories(work / "ml1m");
    const auto config = work / "ml1m" / "config.json";
    std::ofstream(config) << j.dump(2);
    const auto r = end_to_end(config, work / "ml1m" / "out", threads);

    const std::map<std::string, double> table{{"ubcf-20", 0.9707},    {"ubcf-80", 0.9067}, {"ibcf-20", 0.8737},
                                              {"ibcf-80", 0.8763},    {"svd-50", 0.8737},  {"svd-500", 0.8496},
                                              {"autorec-100", 0.8578}, {"autorec-300", 0.8402},
                                              {"rfcb-20", 0.9095},    {"rfcb-30", 0.8951}};
    Outcome o;
    std::string cols;
    for (const auto& c : r.columns) {
        const auto label = c["label"].get<std::string>();
        const double got = c["mean_rmse"].get<double>();
        const auto it = table.find(label);
        const bool ok = it == table.end() || std::abs(got - it->second) <= 0.02;
        cols += " " + label + "=" + fmt("%.4f", got) + (ok ? "" : "(!)");
        if (!ok)
            o.status = Outcome::Fail;
    }
    if (!(r.blend <= 0.835))
        o.status = Outcome::Fail;
    o.detail = "blend " + fmt("%.4f", r.blend) + " (reference 0.8206, bound 0.835); selected " + r.selected +
               ";" + cols + "; " + fmt("%.0f s", r.seconds);
    return o;
}

// Every command twice with one thread and once with four; all artifacts and
// printed tables must match byte for byte.
Outcome criterion7(const fs::path& work)
{
    const auto dir = work / "determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::mt19937_64 rng(2024);
    {
        // 60 users x 40 items, low-rank structure plus noise.
        std::ofstream ratings(dir / "ratings.dat");
        std::normal_distribution<double> n(0, 1);
        std::vector<double> a(60), b(40);
        for (auto& x : a)
            x = n(rng);
        for (auto& x : b)
            x = n(rng);
        for (int u = 0; u < 60; ++u)
            for (int i = 0; i < 40; ++i)
                if (rng() % 3 == 0) {
                    const double v = std::round(3.2 + 0.6 * a[static_cast<std::size_t>(u)] * b[static_cast<std::size_t>(i)] +
                                                0.5 * n(rng));
                    ratings << u + 1 << "::" << i + 1 << "::" << std::clamp(v, 1.0, 5.0) << "::" << 9000 + u * 40 + i
                            << "\n";
                }
        std::ofstream movies(dir / "movies.dat");
        const char* g[] = {"Action", "Comedy", "Drama", "Horror", "Romance"};
        for (int i = 0; i < 40; ++i)
            movies << i + 1 << "::Movie " << i << " (1999)::" << g[i % 5] << "|" << g[(i * 3 + 1) % 5] << "\n";
    }
    const nlohmann::json config = {
        {"ratings", "ratings.dat"},
        {"movies", "movies.dat"},
        {"trainer_folds", 3},
        {"outer_folds", 3},
        {"inner_folds", 2},
        {"seed", 7},
        {"recommenders",
         {{{"family", "ubcf"}, {"params", {{"neighbors", 10}}}},
          {{"family", "ibcf"}, {"params", {{"neighbors", 10}}}},
          {{"family", "svd"}, {"params", {{"factors", 4}, {"epochs", 10}}}},
          {{"family", "autorec"}, {"params", {{"hidden", 8}, {"epochs", 5}}}},
          {{"family", "rfcb"}, {"params", {{"trees", 3}}}},
          {{"family", "user_avg"}},
          {{"family", "movie_avg"}}}},
        {"blenders",
         {{"lambdas", {0.01, 1.0}},
          {"criteria", {"user_support", "movie_support"}},
          {"bin_counts", {1, 2}},
          {"tree_counts", {5}},
          {"mlp_layers", {{4}, {4, 4}}},
          {"mlp_epochs", 5}}}};
    std::ofstream(dir / "config.json") << config.dump(2);

    std::map<std::string, std::string> reference;
    std::string mismatch;
    std::size_t compared = 0;
    int runs = 0;
    for (const char* threads : {"1", "1", "4"}) {
        const auto out = dir / ("run" + std::to_string(runs++));
        const std::vector<std::string> base{"--config", (dir / "config.json").string(), "--threads", threads, "--out",
                                            out.string()};
        std::map<std::string, std::string> produced;
        auto step = [&](const std::string& name, std::vector<std::string> extra) {
            auto args = base;
            args.insert(args.end(), extra.begin(), extra.end());
            std::string text;
            if (run_cli(args, &text) != 0)
                throw std::runtime_error(name + " failed");
            // Printed paths name the per-run directory.
            produced["stdout:" + name] = std::regex_replace(text, std::regex(out.string()), "<out>");
        };
        step("evaluate", {"evaluate"});
        step("evaluate-family", {"evaluate", "--family", "svd", "--params", "{\"factors\": 3}"});
        step("blendset", {"blendset"});
        step("nested-cv", {"nested-cv", "--finalize"});
        step("nested-cv-mlp", {"nested-cv", "--restrict-family", "mlp"});
        std::string report;
        if (run_cli({"report", (out / "nested_cv.json").string(), (out / "nested_cv_mlp.json").string()}, &report) != 0)
            throw std::runtime_error("report failed");
        // The report table names the file, which differs per run directory.
        produced["stdout:report"] = std::regex_replace(report, std::regex(out.string()), "<out>");
        for (const auto& e : fs::directory_iterator(out))
            produced[e.path().filename().string()] = slurp(e.path());
        if (reference.empty()) {
            reference = produced;
            continue;
        }
        for (const auto& [name, bytes] : reference) {
            ++compared;
            if (!produced.count(name) || produced[name] != bytes)
                if (mismatch.empty())
                    mismatch = name + " differs with --threads " + threads;
        }
    }
    Outcome o;
    o.detail = std::to_string(reference.size()) + " artifacts and tables compared over 3 runs (threads 1, 1, 4)";
    if (!mismatch.empty()) {
        o.status = Outcome::Fail;
        o.detail = mismatch;
    }
    return o;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance criteria"};
    int only = 0, threads = 1;
    std::string ml1m, work = "acceptance-work";
    if (const char* env = std::getenv("BLENDREC_ML1M_DIR"))
        ml1m = env;
    app.add_option("--only", only, "Run a single criterion");
    app.add_option("--ml1m", ml1m, "MovieLens 1M directory (enables criterion 6)");
    app.add_option("--work", work, "Scratch directory");
    app.add_option("--threads", threads, "Worker threads for the end-to-end runs");
    CLI11_PARSE(app, argc, argv);

    const fs::path source = BLENDREC_SOURCE_DIR;
    const fs::path work_dir = fs::absolute(work);
    fs::create_directories(work_dir);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 formula oracles (100 random datasets, <= 50 ratings, 1e-10)",
         [&] {
             checks::Result r;
             const double s = timed([&] { r = checks::formula_oracles(100); });
             return from_check(r, s, 60);
         }},
        {"2 gradient checks (AutoRec, MLP blender; rel. error 1e-4)",
         [&] {
             checks::Result r;
             const double s = timed([&] { r = checks::gradient_checks(); });
             return from_check(r, s, 60);
         }},
        {"3 nested-CV correctness (|A|=1, exact mean, no leakage)",
         [&] {
             checks::Result r;
             const double s = timed([&] { r = checks::nested_cv_checks(); });
             return from_check(r, s, 60);
         }},
        {"4 binned-LR degeneracy and ridge normal equations",
         [&] {
             checks::Result r;
             const double s = timed([&] { r = checks::binned_lr_checks(); });
             return from_check(r, s, 0);
         }},
        {"5 MovieLens 100K desk-scale end-to-end (blend beats best single by >= 0.005)",
         [&] { return criterion5(source, work_dir, threads); }},
        {"6 MovieLens 1M reproduction (optional long run)", [&] { return criterion6(source, ml1m, work_dir, threads); }},
        {"7 determinism of every command, including --threads 4", [&] { return criterion7(work_dir); }},
    };

    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (only && static_cast<int>(k + 1) != only)
            continue;
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {Outcome::Fail, std::string("exception: ") + e.what()};
        }
        const char* tag = o.status == Outcome::Pass ? "PASS" : o.status == Outcome::Fail ? "FAIL" : "SKIP";
        std::cout << tag << "  criterion " << criteria[k].first << " -- " << o.detail << std::endl;
        failures += o.status == Outcome::Fail;
    }
    return failures == 0 ? 0 : 1;
}
