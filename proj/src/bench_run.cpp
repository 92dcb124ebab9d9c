#include "spargw/bench.hpp"
#include "spargw/datagen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

namespace spargw {

namespace {

std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

const std::set<std::string>& known_methods() {
    static const std::set<std::string> methods = {"egw",  "pga-gw",  "fgw",      "spar-gw",
                                                  "eugw", "pga-ugw", "spar-fgw", "spar-ugw"};
    return methods;
}

bool is_unbalanced(const std::string& method) {
    return method == "eugw" || method == "pga-ugw" || method == "spar-ugw";
}

bool is_fused(const std::string& method) { return method == "fgw" || method == "spar-fgw"; }

bool is_sparsified(const std::string& method) {
    return method == "spar-gw" || method == "spar-fgw" || method == "spar-ugw";
}

GroundCost cost_from_name(const std::string& name) {
    if (name == "l1") return GroundCost::l1();
    if (name == "l2") return GroundCost::l2();
    if (name == "kl") return GroundCost::kl();
    throw ValidationError("unknown cost '" + name + "'");
}

SampleMode mode_from_name(const std::string& name) {
    if (name == "iid") return SampleMode::iid_with_replacement;
    if (name == "poisson") return SampleMode::poisson;
    if (name == "full") return SampleMode::full_deterministic;
    throw ValidationError("unknown sampling mode '" + name + "'");
}

Distribution wrap_weights(const Vector& w, WeightMode mode) {
    return mode == WeightMode::balanced ? Distribution::balanced(w)
                                        : Distribution::unbalanced(w);
}

Vector weight_vector(const DatasetSpec& d, const PointCloud* cloud, Index n) {
    if (d.weights == "uniform") return uniform_weights(n).weights();
    if (d.weights == "gaussian") {
        if (!cloud)
            throw ValidationError("gaussian weights need point coordinates; dataset kind '" +
                                  d.kind + "' has none");
        return gaussian_weights(*cloud, d.bandwidth).weights();
    }
    throw ValidationError("unknown weights '" + d.weights + "'");
}

// Mixes an attempt counter into a seed so kernel-infeasibility retries explore
// fresh draws deterministically.
std::uint64_t derive_seed(std::uint64_t seed, long attempt) {
    std::uint64_t x = seed;
    for (long k = 0; k < attempt; ++k) x = x * 6364136223846793005ULL + 1442695040888963407ULL;
    return x;
}

RunRecord run_cell(const ProblemBundle& bundle, const ExperimentConfig& cfg, std::uint64_t seed,
                   const std::string& hash) {
    RunRecord rec;
    rec.config_hash = hash;
    rec.seed = seed;
    rec.outer_iterations = cfg.outer;
    long retries = is_sparsified(cfg.method) ? std::max<long>(cfg.retries, 0) : 0;
    for (long attempt = 0;; ++attempt) {
        try {
            GwResult r = run_method(bundle, cfg, derive_seed(seed, attempt));
            rec.distance = r.distance;
            rec.wall_seconds = r.wall_seconds;
            rec.peak_matrix_bytes = r.peak_matrix_bytes;
            if (!r.objective_trace.empty()) {
                rec.objective_initial = r.objective_trace.front();
                rec.objective_final = r.objective_trace.back();
            }
            return rec;
        } catch (const InfeasibleKernel& e) {
            if (attempt >= retries) {
                rec.error = e.what();
                return rec;
            }
        } catch (const Error& e) {
            rec.error = e.what();
            return rec;
        }
    }
}

void summarize(ExperimentOutcome& out) {
    double sum = 0.0;
    long ok = 0;
    for (const auto& r : out.records) {
        if (r.ok()) {
            sum += r.distance;
            ++ok;
        } else {
            ++out.failures;
        }
    }
    if (ok == 0) {
        out.mean = std::numeric_limits<double>::quiet_NaN();
        out.stddev = std::numeric_limits<double>::quiet_NaN();
        return;
    }
    out.mean = sum / static_cast<double>(ok);
    double ss = 0.0;
    for (const auto& r : out.records)
        if (r.ok()) ss += (r.distance - out.mean) * (r.distance - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(ok));
}

}  // namespace

void validate_experiment(const ExperimentConfig& cfg) {
    if (!known_methods().count(cfg.method))
        throw ValidationError("unknown method '" + cfg.method + "'");
    cost_from_name(cfg.cost);
    if (cfg.lambda && !is_unbalanced(cfg.method))
        throw ValidationError("lambda only applies to unbalanced methods, not " + cfg.method);
    if (cfg.alpha && !is_fused(cfg.method))
        throw ValidationError("alpha only applies to fused methods, not " + cfg.method);
    if (cfg.s && !is_sparsified(cfg.method))
        throw ValidationError("a subsample budget only applies to sparsified methods, not " +
                              cfg.method);
    if (cfg.mode && !is_sparsified(cfg.method))
        throw ValidationError("a sampling mode only applies to sparsified methods, not " +
                              cfg.method);
    if (cfg.mode) mode_from_name(*cfg.mode);
    if (cfg.seeds.empty()) throw ValidationError("at least one seed is required");
    if (cfg.outer < 1 || cfg.inner < 1)
        throw ValidationError("R and H must be at least 1");
    if (cfg.retries < 0) throw ValidationError("retries must be non-negative");
}

ProblemBundle build_problem(const ExperimentConfig& cfg) {
    const DatasetSpec& d = cfg.dataset;
    WeightMode mode =
        is_unbalanced(cfg.method) ? WeightMode::unbalanced : WeightMode::balanced;

    Matrix cx, cy;
    Vector wa, wb;
    std::optional<Matrix> features;

    if (d.kind == "files") {
        if (d.cx.empty() || d.cy.empty())
            throw ValidationError("dataset kind 'files' needs cx and cy paths");
        cx = ingest_relation(d.cx);
        cy = ingest_relation(d.cy);
        wa = d.a.empty() ? uniform_weights(cx.rows()).weights() : read_weights_csv(d.a);
        wb = d.b.empty() ? uniform_weights(cy.rows()).weights() : read_weights_csv(d.b);
        if (!d.m.empty()) {
            Matrix m = ingest_matrix(d.m);
            if (m.rows() != cx.rows() || m.cols() != cy.rows())
                throw ValidationError("feature relation shape does not match cx x cy");
            features = std::move(m);
        }
    } else if (d.kind == "graph") {
        GraphSpec g1 = gen_powerlaw_graph(d.n, d.gen_seed);
        GraphSpec g2 = gen_powerlaw_graph(d.n, d.gen_seed + 1);
        cx = g1.adjacency();
        cy = g2.adjacency();
        wa = weight_vector(d, nullptr, d.n);
        wb = weight_vector(d, nullptr, d.n);
    } else {
        std::pair<PointCloud, PointCloud> clouds;
        if (d.kind == "moon")
            clouds = gen_moon(d.n, d.gen_seed, d.noise);
        else if (d.kind == "gaussian")
            clouds = gen_gaussian_mixture(d.n, d.gen_seed);
        else if (d.kind == "spiral")
            clouds = gen_spiral(d.n, d.gen_seed);
        else
            throw ValidationError("unknown dataset kind '" + d.kind + "'");
        cx = euclidean_relation(clouds.first);
        cy = euclidean_relation(clouds.second);
        wa = weight_vector(d, &clouds.first, clouds.first.size());
        wb = weight_vector(d, &clouds.second, clouds.second.size());
        if (clouds.first.dim() == clouds.second.dim())
            features = feature_distance(clouds.first, clouds.second);
    }

    if (is_fused(cfg.method) && !features)
        throw ValidationError("method " + cfg.method +
                              " needs a feature relation; this dataset provides none");

    ProblemBundle bundle{Problem{wrap_weights(wa, mode), wrap_weights(wb, mode), std::move(cx),
                                 std::move(cy)},
                         std::move(features)};
    validate_problem(bundle.problem);
    return bundle;
}

GwResult run_method(const ProblemBundle& bundle, const ExperimentConfig& cfg,
                    std::uint64_t seed) {
    GroundCost L = cost_from_name(cfg.cost);
    SolverConfig sc;
    sc.eps = cfg.eps.value_or(1e-2);
    sc.outer = cfg.outer;
    sc.inner = cfg.inner;
    sc.reg = (cfg.method == "egw" || cfg.method == "eugw") ? Regularizer::entropic
                                                           : Regularizer::proximal_kl;

    double lambda = cfg.lambda.value_or(1.0);
    double alpha = cfg.alpha.value_or(0.5);
    long s = 0;
    SampleMode mode = SampleMode::iid_with_replacement;
    if (is_sparsified(cfg.method)) {
        s = cfg.s.value_or(SampleBudget{}).resolve(bundle.problem.n());
        mode = mode_from_name(cfg.mode.value_or("iid"));
    }

    if (cfg.method == "egw" || cfg.method == "pga-gw")
        return solve_gw_dense(bundle.problem, L, sc);
    if (cfg.method == "fgw")
        return solve_fgw_dense(bundle.problem, *bundle.feature_relation, L, alpha, sc);
    if (cfg.method == "eugw" || cfg.method == "pga-ugw")
        return solve_ugw_dense(bundle.problem, L, lambda, sc);
    if (cfg.method == "spar-gw") return solve_spar_gw(bundle.problem, L, sc, s, mode, seed);
    if (cfg.method == "spar-fgw")
        return solve_spar_fgw(bundle.problem, *bundle.feature_relation, L, alpha, sc, s, mode,
                              seed);
    if (cfg.method == "spar-ugw")
        return solve_spar_ugw(bundle.problem, L, lambda, sc, s, mode, seed);
    throw ValidationError("unknown method '" + cfg.method + "'");
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
    validate_experiment(cfg);
    ProblemBundle bundle = build_problem(cfg);
    std::string hash = config_hash(cfg);

    ExperimentOutcome out;
    out.records.resize(cfg.seeds.size());
    parallel_for(static_cast<long>(cfg.seeds.size()), [&](long i) {
        out.records[static_cast<std::size_t>(i)] =
            run_cell(bundle, cfg, cfg.seeds[static_cast<std::size_t>(i)], hash);
    });
    summarize(out);
    return out;
}

void write_records_csv(const std::string& path, const ExperimentOutcome& outcome) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open " + path + " for writing");
    f << "config_hash,seed,distance,wall_seconds,peak_matrix_bytes,outer_iterations,"
         "objective_initial,objective_final,error,summary_mean,summary_stddev,summary_failures\n";
    for (const auto& r : outcome.records) {
        f << r.config_hash << ',' << r.seed << ',' << fmt_double(r.distance) << ','
          << fmt_double(r.wall_seconds) << ',' << r.peak_matrix_bytes << ','
          << r.outer_iterations << ',' << fmt_double(r.objective_initial) << ','
          << fmt_double(r.objective_final) << ',' << csv_escape(r.error) << ",,,\n";
    }
    std::string hash = outcome.records.empty() ? "" : outcome.records.front().config_hash;
    f << hash << ",summary,,,,,,,," << fmt_double(outcome.mean) << ','
      << fmt_double(outcome.stddev) << ',' << outcome.failures << '\n';
    if (!f) throw ParseError("write to " + path + " failed");
}

std::vector<SweepRow> error_sweep(const ExperimentConfig& base, const std::string& variable,
                                  const std::vector<std::string>& values) {
    validate_experiment(base);
    if (variable != "n" && variable != "s" && variable != "eps")
        throw ValidationError("sweep variable must be n, s, or eps");
    if (values.empty()) throw ValidationError("sweep needs at least one value");

    std::vector<SweepRow> rows;
    for (const std::string& value : values) {
        SweepRow row;
        row.value = value;
        ExperimentConfig cfg = base;
        try {
            if (variable == "n") {
                SampleBudget b = parse_budget(value);
                if (b.per_n) throw ValidationError("n values must be absolute");
                cfg.dataset.n = static_cast<Index>(b.resolve(0));
            } else if (variable == "s") {
                cfg.s = parse_budget(value);
            } else {
                SampleBudget b = parse_budget(value);
                if (b.per_n) throw ValidationError("eps values must be plain numbers");
                cfg.eps = b.value;
            }

            ProblemBundle bundle = build_problem(cfg);

            // The reference is the dense proximal solver of the same family,
            // run once; it is deterministic, so it takes no seed spread.
            ExperimentConfig oracle = cfg;
            oracle.s.reset();
            oracle.mode.reset();
            if (is_unbalanced(cfg.method))
                oracle.method = "pga-ugw";
            else if (is_fused(cfg.method))
                oracle.method = "fgw";
            else
                oracle.method = "pga-gw";
            GwResult ref = run_method(bundle, oracle, 0);
            row.oracle_distance = ref.distance;
            row.oracle_seconds = ref.wall_seconds;

            std::string hash = config_hash(cfg);
            std::vector<RunRecord> records(cfg.seeds.size());
            parallel_for(static_cast<long>(cfg.seeds.size()), [&](long i) {
                records[static_cast<std::size_t>(i)] =
                    run_cell(bundle, cfg, cfg.seeds[static_cast<std::size_t>(i)], hash);
            });

            double sum = 0.0;
            double time_sum = 0.0;
            long ok = 0;
            for (const auto& r : records) {
                if (!r.ok()) {
                    ++row.failures;
                    continue;
                }
                sum += std::abs(r.distance - ref.distance);
                time_sum += r.wall_seconds;
                ++ok;
            }
            if (ok > 0) {
                row.mean_abs_error = sum / static_cast<double>(ok);
                row.mean_seconds = time_sum / static_cast<double>(ok);
                double ss = 0.0;
                for (const auto& r : records)
                    if (r.ok()) {
                        double d = std::abs(r.distance - ref.distance) - row.mean_abs_error;
                        ss += d * d;
                    }
                row.stddev_abs_error = std::sqrt(ss / static_cast<double>(ok));
            } else {
                row.mean_abs_error = std::numeric_limits<double>::quiet_NaN();
                row.stddev_abs_error = std::numeric_limits<double>::quiet_NaN();
                row.mean_seconds = std::numeric_limits<double>::quiet_NaN();
            }
        } catch (const Error&) {
            row.oracle_distance = std::numeric_limits<double>::quiet_NaN();
            row.oracle_seconds = std::numeric_limits<double>::quiet_NaN();
            row.mean_abs_error = std::numeric_limits<double>::quiet_NaN();
            row.stddev_abs_error = std::numeric_limits<double>::quiet_NaN();
            row.mean_seconds = std::numeric_limits<double>::quiet_NaN();
            row.failures = static_cast<long>(base.seeds.size());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open " + path + " for writing");
    f << "value,oracle_distance,oracle_seconds,mean_abs_error,stddev_abs_error,mean_seconds,"
         "failures\n";
    for (const auto& r : rows) {
        f << csv_escape(r.value) << ',' << fmt_double(r.oracle_distance) << ','
          << fmt_double(r.oracle_seconds) << ',' << fmt_double(r.mean_abs_error) << ','
          << fmt_double(r.stddev_abs_error) << ',' << fmt_double(r.mean_seconds) << ','
          << r.failures << '\n';
    }
    if (!f) throw ParseError("write to " + path + " failed");
}

Matrix pairwise_distances(const std::vector<CollectionItem>& items, const ExperimentConfig& cfg,
                          std::vector<std::string>* failures) {
    validate_experiment(cfg);
    if (items.size() < 2) throw ValidationError("pairwise needs at least two items");
    for (const auto& item : items) {
        validate_relation(item.relation);
        if (item.weights.size() != item.relation.rows())
            throw ValidationError("item weights do not match its relation");
    }

    const Index n = static_cast<Index>(items.size());
    WeightMode mode =
        is_unbalanced(cfg.method) ? WeightMode::unbalanced : WeightMode::balanced;
    // One shared seed keeps every pair's draw independent of enumeration
    // order, so shuffling the collection permutes D consistently.
    std::uint64_t seed = cfg.seeds.front();

    std::vector<std::pair<Index, Index>> pairs;
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

    Matrix D = Matrix::Zero(n, n);
    std::vector<std::string> errors(pairs.size());

    parallel_for(static_cast<long>(pairs.size()), [&](long k) {
        auto [i, j] = pairs[static_cast<std::size_t>(k)];
        const CollectionItem& x = items[static_cast<std::size_t>(i)];
        const CollectionItem& y = items[static_cast<std::size_t>(j)];
        try {
            ProblemBundle bundle{Problem{wrap_weights(x.weights.weights(), mode),
                                         wrap_weights(y.weights.weights(), mode), x.relation,
                                         y.relation},
                                 std::nullopt};
            if (is_fused(cfg.method)) {
                if (!x.features || !y.features || x.features->cols() != y.features->cols())
                    throw ValidationError("fused methods need features of a shared dimension");
                bundle.feature_relation =
                    feature_distance(PointCloud{*x.features}, PointCloud{*y.features});
            }
            RunRecord rec = run_cell(bundle, cfg, seed, "");
            if (!rec.ok()) throw ValidationError(rec.error);
            D(i, j) = D(j, i) = rec.distance;
        } catch (const Error& e) {
            D(i, j) = D(j, i) = std::numeric_limits<double>::quiet_NaN();
            errors[static_cast<std::size_t>(k)] = "pair (" + std::to_string(i) + ", " +
                                                  std::to_string(j) + "): " + e.what();
        }
    });

    if (failures) {
        failures->clear();
        for (auto& e : errors)
            if (!e.empty()) failures->push_back(std::move(e));
    }
    return D;
}

Matrix similarity_matrix(const Matrix& D, double gamma, long* nan_count) {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw InvalidGamma("gamma must be positive and finite, got " + std::to_string(gamma));
    Matrix S(D.rows(), D.cols());
    long nans = 0;
    for (Index i = 0; i < D.rows(); ++i)
        for (Index j = 0; j < D.cols(); ++j) {
            if (std::isnan(D(i, j))) {
                S(i, j) = 0.0;
                ++nans;
            } else {
                S(i, j) = std::exp(-D(i, j) / gamma);
            }
        }
    if (nan_count) *nan_count = nans;
    return S;
}

long worker_count() {
    if (const char* env = std::getenv("SPARGW_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v >= 1) return v;
        throw ValidationError(std::string("SPARGW_THREADS must be a positive integer, got '") +
                              env + "'");
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<long>(hw) : 1;
}

void parallel_for(long count, const std::function<void(long)>& fn) {
    if (count <= 0) return;
    long workers = std::min(worker_count(), count);
    if (workers <= 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }

    std::atomic<long> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&] {
        while (true) {
            long i = next.fetch_add(1);
            if (i >= count) break;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (long w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace spargw
