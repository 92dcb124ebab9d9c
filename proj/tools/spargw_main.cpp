#include "spargw/bench.hpp"
#include "spargw/datagen.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using spargw::ExperimentConfig;
using spargw::Index;
using spargw::Matrix;
using spargw::ValidationError;
using spargw::Vector;

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = text.find(sep, start);
        out.push_back(text.substr(start, pos == std::string::npos ? pos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::uint64_t parse_u64(const std::string& text) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw ValidationError("cannot parse seed '" + text + "'");
    return v;
}

// Accepts "0,3,7" or an inclusive range "0..19".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::size_t dots = text.find("..");
    if (dots != std::string::npos) {
        std::uint64_t lo = parse_u64(text.substr(0, dots));
        std::uint64_t hi = parse_u64(text.substr(dots + 2));
        if (hi < lo) throw ValidationError("seed range '" + text + "' is reversed");
        if (hi - lo >= 1000000) throw ValidationError("seed range '" + text + "' is too large");
        std::vector<std::uint64_t> out;
        for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
        return out;
    }
    std::vector<std::uint64_t> out;
    for (const std::string& piece : split(text, ',')) out.push_back(parse_u64(piece));
    return out;
}

// Flags shared by run, sweep, and pairwise; set fields only when passed so
// they override the JSON config.
struct MethodFlags {
    std::string config_path, method, cost, s, mode, seeds, out;
    double eps = 0, lambda = 0, alpha = 0;
    long outer = 0, inner = 0, retries = 0;
    CLI::Option *o_config = nullptr, *o_method = nullptr, *o_cost = nullptr, *o_eps = nullptr,
                *o_lambda = nullptr, *o_alpha = nullptr, *o_s = nullptr, *o_mode = nullptr,
                *o_seeds = nullptr, *o_outer = nullptr, *o_inner = nullptr, *o_out = nullptr,
                *o_retries = nullptr;

    void attach(CLI::App* cmd) {
        o_config = cmd->add_option("--config", config_path, "JSON experiment config");
        o_method = cmd->add_option(
            "--method", method,
            "egw | pga-gw | fgw | spar-gw | eugw | pga-ugw | spar-fgw | spar-ugw");
        o_cost = cmd->add_option("--cost", cost, "Ground cost: l1 | l2 | kl");
        o_eps = cmd->add_option("--eps", eps, "Regularization strength");
        o_lambda = cmd->add_option("--lambda", lambda, "Marginal relaxation strength");
        o_alpha = cmd->add_option("--alpha", alpha, "Fused trade-off in [0, 1]");
        o_s = cmd->add_option("--s", s, "Subsample budget, absolute or per-n like 16n");
        o_mode = cmd->add_option("--mode", mode, "Sampling mode: iid | poisson | full");
        o_seeds = cmd->add_option("--seeds", seeds, "Comma list or inclusive range like 0..19");
        o_outer = cmd->add_option("--R", outer, "Outer solver rounds");
        o_inner = cmd->add_option("--H", inner, "Sinkhorn iterations per round");
        o_out = cmd->add_option("--out", out, "Output directory");
        o_retries = cmd->add_option("--retries", retries,
                                    "Extra attempts after an infeasible sampled kernel");
    }

    ExperimentConfig resolve() const {
        ExperimentConfig cfg;
        if (o_config->count()) cfg = spargw::load_config(config_path);
        if (o_method->count()) cfg.method = method;
        if (o_cost->count()) cfg.cost = cost;
        if (o_eps->count()) cfg.eps = eps;
        if (o_lambda->count()) cfg.lambda = lambda;
        if (o_alpha->count()) cfg.alpha = alpha;
        if (o_s->count()) cfg.s = spargw::parse_budget(s);
        if (o_mode->count()) cfg.mode = mode;
        if (o_seeds->count()) cfg.seeds = parse_seeds(seeds);
        if (o_outer->count()) cfg.outer = outer;
        if (o_inner->count()) cfg.inner = inner;
        if (o_out->count()) cfg.out_dir = out;
        if (o_retries->count()) cfg.retries = retries;
        return cfg;
    }
};

std::string out_file(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    return (std::filesystem::path(dir) / name).string();
}

int do_gen(const std::string& kind, Index n, std::uint64_t seed, double noise,
           const std::string& weights, double bandwidth, const std::string& out_dir) {
    namespace dg = spargw;
    std::filesystem::create_directories(out_dir);
    nlohmann::json manifest;
    manifest["kind"] = kind;
    manifest["n"] = n;
    manifest["gen_seed"] = seed;
    manifest["weights"] = weights;
    nlohmann::json files;

    auto weight_for = [&](const dg::PointCloud* cloud) -> Vector {
        if (weights == "uniform") return dg::uniform_weights(n).weights();
        if (weights == "gaussian") {
            if (!cloud) throw ValidationError("gaussian weights need point coordinates");
            return dg::gaussian_weights(*cloud, bandwidth).weights();
        }
        throw ValidationError("unknown weights '" + weights + "'");
    };

    if (kind == "graph") {
        dg::GraphSpec g1 = dg::gen_powerlaw_graph(n, seed);
        dg::GraphSpec g2 = dg::gen_powerlaw_graph(n, seed + 1);
        spargw::write_matrix_csv(out_file(out_dir, "source_relation.csv"), g1.adjacency());
        spargw::write_matrix_csv(out_file(out_dir, "target_relation.csv"), g2.adjacency());
        spargw::write_weights_csv(out_file(out_dir, "source_weights.csv"), weight_for(nullptr));
        spargw::write_weights_csv(out_file(out_dir, "target_weights.csv"), weight_for(nullptr));
        files["source_relation"] = "source_relation.csv";
        files["target_relation"] = "target_relation.csv";
        files["source_weights"] = "source_weights.csv";
        files["target_weights"] = "target_weights.csv";
    } else {
        std::pair<dg::PointCloud, dg::PointCloud> clouds;
        if (kind == "moon") {
            clouds = dg::gen_moon(n, seed, noise);
            manifest["noise"] = noise;
        } else if (kind == "gaussian") {
            clouds = dg::gen_gaussian_mixture(n, seed);
        } else if (kind == "spiral") {
            clouds = dg::gen_spiral(n, seed);
        } else {
            throw ValidationError("unknown dataset kind '" + kind + "'");
        }
        if (weights == "gaussian") manifest["bandwidth"] = bandwidth;
        spargw::write_matrix_csv(out_file(out_dir, "source_points.csv"), clouds.first.points);
        spargw::write_matrix_csv(out_file(out_dir, "target_points.csv"), clouds.second.points);
        spargw::write_matrix_csv(out_file(out_dir, "source_relation.csv"),
                                 dg::euclidean_relation(clouds.first));
        spargw::write_matrix_csv(out_file(out_dir, "target_relation.csv"),
                                 dg::euclidean_relation(clouds.second));
        spargw::write_weights_csv(out_file(out_dir, "source_weights.csv"),
                                  weight_for(&clouds.first));
        spargw::write_weights_csv(out_file(out_dir, "target_weights.csv"),
                                  weight_for(&clouds.second));
        files["source_points"] = "source_points.csv";
        files["target_points"] = "target_points.csv";
        files["source_relation"] = "source_relation.csv";
        files["target_relation"] = "target_relation.csv";
        files["source_weights"] = "source_weights.csv";
        files["target_weights"] = "target_weights.csv";
        if (clouds.first.dim() == clouds.second.dim()) {
            spargw::write_matrix_csv(out_file(out_dir, "feature_relation.csv"),
                                     dg::feature_distance(clouds.first, clouds.second));
            files["feature_relation"] = "feature_relation.csv";
        }
    }

    manifest["files"] = files;
    std::ofstream mf(out_file(out_dir, "manifest.json"));
    if (!mf) throw spargw::ParseError("cannot write manifest.json");
    mf << manifest.dump(2) << '\n';
    std::cout << "wrote " << kind << " dataset (n=" << n << ") to " << out_dir << '\n';
    return 0;
}

int do_run(const MethodFlags& flags) {
    ExperimentConfig cfg = flags.resolve();
    spargw::ExperimentOutcome outcome = spargw::run_experiment(cfg);
    std::string path = out_file(cfg.out_dir, "runs.csv");
    spargw::write_records_csv(path, outcome);
    std::cout << "method=" << cfg.method << " seeds=" << cfg.seeds.size()
              << " mean=" << outcome.mean << " stddev=" << outcome.stddev
              << " failures=" << outcome.failures << " -> " << path << '\n';
    return outcome.failures > 0 ? 2 : 0;
}

int do_sweep(const MethodFlags& flags, const std::string& variable, const std::string& values) {
    ExperimentConfig cfg = flags.resolve();
    std::vector<std::string> list;
    if (values.empty()) {
        if (variable != "eps")
            throw ValidationError("--values is required when sweeping " + variable);
        list = {"1", "0.1", "0.01", "0.001"};
    } else {
        list = split(values, ',');
    }
    std::vector<spargw::SweepRow> rows = spargw::error_sweep(cfg, variable, list);
    std::string path = out_file(cfg.out_dir, "sweep.csv");
    spargw::write_sweep_csv(path, rows);
    long failures = 0;
    for (const auto& r : rows) {
        failures += r.failures;
        std::cout << variable << "=" << r.value << " oracle=" << r.oracle_distance
                  << " mean_abs_error=" << r.mean_abs_error << " failures=" << r.failures
                  << '\n';
    }
    std::cout << "-> " << path << '\n';
    return failures > 0 ? 2 : 0;
}

int do_pairwise(const MethodFlags& flags, const std::string& relations,
                const std::string& weights, const std::string& features) {
    ExperimentConfig cfg = flags.resolve();
    std::vector<std::string> rel_paths = split(relations, ',');
    std::vector<std::string> w_paths = weights.empty() ? std::vector<std::string>{}
                                                       : split(weights, ',');
    std::vector<std::string> f_paths = features.empty() ? std::vector<std::string>{}
                                                        : split(features, ',');
    if (!w_paths.empty() && w_paths.size() != rel_paths.size())
        throw ValidationError("--weights must list one file per relation");
    if (!f_paths.empty() && f_paths.size() != rel_paths.size())
        throw ValidationError("--features must list one file per relation");

    std::vector<spargw::CollectionItem> items;
    for (std::size_t i = 0; i < rel_paths.size(); ++i) {
        Matrix relation = spargw::ingest_relation(rel_paths[i]);
        // Ingested without the simplex check here; the driver rewraps the
        // weights in whichever mode the method needs.
        spargw::Distribution w =
            w_paths.empty() ? spargw::uniform_weights(relation.rows())
                            : spargw::ingest_weights(w_paths[i], spargw::WeightMode::unbalanced);
        std::optional<Matrix> feats;
        if (!f_paths.empty()) feats = spargw::ingest_matrix(f_paths[i]);
        items.push_back({std::move(relation), std::move(w), std::move(feats)});
    }

    std::vector<std::string> failures;
    Matrix D = spargw::pairwise_distances(items, cfg, &failures);
    std::string path = out_file(cfg.out_dir, "distances.csv");
    spargw::write_matrix_csv(path, D);
    for (const auto& f : failures) std::cerr << "warning: " << f << '\n';
    std::cout << "pairwise " << items.size() << "x" << items.size() << " -> " << path << '\n';
    return failures.empty() ? 0 : 2;
}

int do_similarity(const std::string& distances, double gamma, const std::string& out_dir) {
    Matrix D = spargw::read_matrix_csv(distances);
    long nans = 0;
    Matrix S = spargw::similarity_matrix(D, gamma, &nans);
    if (nans > 0)
        std::cerr << "warning: " << nans << " NaN distances mapped to similarity 0\n";
    std::string path = out_file(out_dir, "similarity.csv");
    spargw::write_matrix_csv(path, S);
    std::cout << "similarity (gamma=" << gamma << ") -> " << path << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gromov-Wasserstein distances with importance-sparsified solvers"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset as CSV files");
    std::string gen_kind = "moon", gen_weights = "uniform", gen_out = ".";
    Index gen_n = 200;
    std::uint64_t gen_seed = 0;
    double gen_noise = 0.05, gen_bandwidth = 1.0;
    gen->add_option("--kind", gen_kind, "moon | graph | gaussian | spiral");
    gen->add_option("--n", gen_n, "Points per space");
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("--noise", gen_noise, "Moon noise standard deviation");
    gen->add_option("--weights", gen_weights, "uniform | gaussian");
    gen->add_option("--bandwidth", gen_bandwidth, "Gaussian weight bandwidth");
    gen->add_option("--out", gen_out, "Output directory");

    auto* run = app.add_subcommand("run", "Run one experiment across seeds");
    MethodFlags run_flags;
    run_flags.attach(run);

    auto* sweep = app.add_subcommand("sweep", "Error sweep against the dense reference");
    MethodFlags sweep_flags;
    sweep_flags.attach(sweep);
    std::string sweep_var = "eps", sweep_values;
    sweep->add_option("--var", sweep_var, "Swept variable: n | s | eps");
    sweep->add_option("--values", sweep_values,
                      "Comma list of values; eps defaults to 1,0.1,0.01,0.001");

    auto* pairwise = app.add_subcommand("pairwise", "Distance matrix over a collection");
    MethodFlags pair_flags;
    pair_flags.attach(pairwise);
    std::string pair_relations, pair_weights, pair_features;
    pairwise->add_option("--relations", pair_relations, "Comma list of relation CSV files")
        ->required();
    pairwise->add_option("--weights", pair_weights, "Comma list of weight CSV files");
    pairwise->add_option("--features", pair_features, "Comma list of feature CSV files");

    auto* similarity = app.add_subcommand("similarity", "Kernelize a distance matrix");
    std::string sim_distances, sim_out = ".";
    double sim_gamma = 1.0;
    similarity->add_option("--distances", sim_distances, "Distance matrix CSV")->required();
    similarity->add_option("--gamma", sim_gamma, "Kernel bandwidth");
    similarity->add_option("--out", sim_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (gen->parsed())
            return do_gen(gen_kind, gen_n, gen_seed, gen_noise, gen_weights, gen_bandwidth,
                          gen_out);
        if (run->parsed()) return do_run(run_flags);
        if (sweep->parsed()) return do_sweep(sweep_flags, sweep_var, sweep_values);
        if (pairwise->parsed())
            return do_pairwise(pair_flags, pair_relations, pair_weights, pair_features);
        if (similarity->parsed()) return do_similarity(sim_distances, sim_gamma, sim_out);
    } catch (const spargw::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
