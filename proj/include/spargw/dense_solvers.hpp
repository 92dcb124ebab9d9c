#pragma once

#include "spargw/contraction.hpp"
#include "spargw/sinkhorn.hpp"
#include "spargw/types.hpp"

#include <variant>

namespace spargw {

// Inner-subproblem regularizer: plain entropy on the kernel, or a KL proximal
// step that reuses the current plan as the reference measure.
enum class Regularizer { entropic, proximal_kl };

struct SolverConfig {
    Regularizer reg = Regularizer::proximal_kl;
    double eps = 1e-2;
    long outer = 20;  // R
    long inner = 50;  // H
    double alpha = 1.0;   // fused trade-off, only read by the FGW solvers
    double lambda = 1.0;  // marginal relaxation, only read by the UGW solvers
    bool sinkhorn_early_exit = false;
    // Keep per-round plan snapshots in the result (test hook, small instances only).
    bool record_plans = false;
    // Drop multiplicity weighting in the sampled-kernel adjustment, i.e. scale
    // by 1/(s P) even when a cell was drawn more than once.
    bool ignore_draw_multiplicity = false;
    // Let the sampling-probability fallback run its quartic contraction on
    // instances larger than 1000 points.
    bool allow_large_naive = false;
};

void validate_config(const SolverConfig& cfg);

struct GwResult {
    double distance = 0.0;
    std::variant<Matrix, SparseCoo> plan;
    // Objective of T^(0), ..., T^(R); the last entry is the unclamped output value.
    std::vector<double> objective_trace;
    double wall_seconds = 0.0;
    std::size_t peak_matrix_bytes = 0;
    std::vector<Matrix> plan_trace;  // filled only when cfg.record_plans

    const Matrix& dense_plan() const { return std::get<Matrix>(plan); }
    const SparseCoo& sparse_plan() const { return std::get<SparseCoo>(plan); }
};

// Alternating contraction + Sinkhorn from T = a bᵀ; returns <C(T), T> at the
// final plan. EGW uses the entropic kernel, PGA-GW the proximal one.
GwResult solve_gw_dense(const Problem& problem, const GroundCost& L, const SolverConfig& cfg);

// Fused variant: the per-round cost is alpha * (L ⊗ T) + (1 - alpha) * M and
// the reported value alpha * <L⊗T, T> + (1 - alpha) * <M, T>. alpha = 1 runs
// the exact GW code path; alpha = 0 never contracts at all.
GwResult solve_fgw_dense(const Problem& problem, const Matrix& M, const GroundCost& L,
                         double alpha, const SolverConfig& cfg);

// Unbalanced variant with KL marginal penalties of weight lambda. Regularizers
// are rescaled by the running plan mass each round and the plan mass is pulled
// back geometrically after each Sinkhorn call. Returns
// <L⊗T, T> + lambda * KLt(T1 || a) + lambda * KLt(T'1 || b), where KLt is the
// KL divergence between product measures.
GwResult solve_ugw_dense(const Problem& problem, const GroundCost& L, double lambda,
                         const SolverConfig& cfg);

}  // namespace spargw
