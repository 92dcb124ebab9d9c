#pragma once

#include "spargw/dense_solvers.hpp"
#include "spargw/spar_solvers.hpp"
#include "spargw/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace spargw {

// ---------------------------------------------------------------------------
// File formats: headerless CSV matrices, one weight per line, JSON manifest
// ---------------------------------------------------------------------------

// Values are written with 17 significant digits so a write/read cycle is
// bitwise exact.
void write_matrix_csv(const std::string& path, const Matrix& m);
Matrix read_matrix_csv(const std::string& path);

void write_weights_csv(const std::string& path, const Vector& w);
Vector read_weights_csv(const std::string& path);

// Reads and finiteness-checks a rectangular matrix file.
Matrix ingest_matrix(const std::string& path);
// Same, then enforces the square/symmetric relation contract.
Matrix ingest_relation(const std::string& path);
Distribution ingest_weights(const std::string& path, WeightMode mode);

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

// Subsample budget, either absolute ("3200") or a multiple of the target
// size ("16n").
struct SampleBudget {
    double value = 16.0;
    bool per_n = true;

    long resolve(Index n) const;
    std::string text() const;
};
SampleBudget parse_budget(const std::string& text);

struct DatasetSpec {
    std::string kind = "moon";  // moon | graph | gaussian | spiral | files
    Index n = 200;
    double noise = 0.05;
    std::string weights = "uniform";  // uniform | gaussian
    double bandwidth = 1.0;
    std::uint64_t gen_seed = 0;
    // file-backed inputs (kind == "files")
    std::string cx, cy, a, b, m;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    std::string method = "spar-gw";
    std::string cost = "l2";
    std::optional<double> eps;     // default 1e-2
    std::optional<double> lambda;  // unbalanced methods only, default 1
    std::optional<double> alpha;   // fused methods only, default 0.5
    std::optional<SampleBudget> s;  // sparsified methods only, default 16n
    std::optional<std::string> mode;  // iid | poisson | full, default iid
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    long outer = 20;
    long inner = 50;
    std::string out_dir = ".";
    long retries = 3;  // extra attempts after InfeasibleKernel, fresh derived seed each
};

ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Method/parameter compatibility (lambda only with unbalanced methods, alpha
// only with fused ones, s/mode only with sparsified ones).
void validate_experiment(const ExperimentConfig& cfg);

// FNV-1a over the canonical JSON rendering of the config.
std::string config_hash(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Problem assembly
// ---------------------------------------------------------------------------

struct ProblemBundle {
    Problem problem;
    std::optional<Matrix> feature_relation;
};

// Instantiates the dataset (generator or files) with weights in the mode the
// method needs.
ProblemBundle build_problem(const ExperimentConfig& cfg);

// Runs the configured method on the bundle with one sampling seed.
GwResult run_method(const ProblemBundle& bundle, const ExperimentConfig& cfg,
                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiment drivers
// ---------------------------------------------------------------------------

struct RunRecord {
    std::string config_hash;
    std::uint64_t seed = 0;
    double distance = 0.0;
    double wall_seconds = 0.0;
    std::size_t peak_matrix_bytes = 0;
    long outer_iterations = 0;
    double objective_initial = 0.0;
    double objective_final = 0.0;
    std::string error;  // empty on success

    bool ok() const { return error.empty(); }
};

struct ExperimentOutcome {
    std::vector<RunRecord> records;  // one per seed, request order
    double mean = 0.0;               // over successful seeds
    double stddev = 0.0;             // population standard deviation
    long failures = 0;
};

// One solver run per seed, parallel across seeds, failures recorded per row.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

void write_records_csv(const std::string& path, const ExperimentOutcome& outcome);

struct SweepRow {
    std::string value;
    double oracle_distance = 0.0;
    double oracle_seconds = 0.0;
    double mean_abs_error = 0.0;
    double stddev_abs_error = 0.0;
    double mean_seconds = 0.0;
    long failures = 0;
};

// For each value of the swept variable ("n", "s", or "eps"), runs the dense
// proximal solver once as the reference and the configured method across
// seeds.
std::vector<SweepRow> error_sweep(const ExperimentConfig& base, const std::string& variable,
                                  const std::vector<std::string>& values);

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

struct CollectionItem {
    Matrix relation;
    Distribution weights;
    std::optional<Matrix> features;  // one row per node
};

// Symmetric distance matrix over the collection; each (i, j) with i < j is
// solved once with one shared seed, so the result is invariant under input
// reordering. Failed pairs become NaN and a message in `failures`.
Matrix pairwise_distances(const std::vector<CollectionItem>& items, const ExperimentConfig& cfg,
                          std::vector<std::string>* failures = nullptr);

// S = exp(-D / gamma); NaN distances turn into 0 similarity and are counted.
Matrix similarity_matrix(const Matrix& D, double gamma, long* nan_count = nullptr);

// ---------------------------------------------------------------------------
// Parallel execution
// ---------------------------------------------------------------------------

// Worker cap: SPARGW_THREADS when set, else the hardware concurrency.
long worker_count();

// Runs fn(i) for i in [0, count) on up to worker_count() threads. Exceptions
// inside fn propagate after all workers join.
void parallel_for(long count, const std::function<void(long)>& fn);

}  // namespace spargw
