#pragma once

#include "spargw/dense_solvers.hpp"
#include "spargw/types.hpp"

namespace spargw {

enum class SampleMode { iid_with_replacement, poisson, full_deterministic };

// An importance-sampling design over the m*n coupling cells: the probability
// matrix plus the drawn cells. Cells are stored sorted and unique; iid draws
// keep their multiplicities.
struct SamplingPlan {
    Matrix P;
    std::vector<Index> row, col;
    std::vector<double> multiplicity;
    long s = 0;
    SampleMode mode = SampleMode::iid_with_replacement;
    std::uint64_t seed = 0;

    Index nnz() const { return static_cast<Index>(multiplicity.size()); }
};

// P_ij = sqrt(a_i b_j) / sum_kl sqrt(a_k b_l), the design that minimizes the
// variance proxy of the plan-mass estimator under balanced marginals.
Matrix gw_sampling_probabilities(const Distribution& a, const Distribution& b);

// Unbalanced design: P_ij proportional to (a_i b_j)^{lambda/(2 lambda + eps)}
// * K_ij^{eps/(2 lambda + eps)} with K the first-round kernel at the rank-one
// initial plan. Decomposable costs keep this O(mn); otherwise the naive
// contraction runs, guarded above 1000 points unless allow_large_naive.
Matrix ugw_sampling_probabilities(const Distribution& a, const Distribution& b, const Matrix& cx,
                                  const Matrix& cy, const GroundCost& L, double lambda, double eps,
                                  bool allow_large_naive = false);

// Draws the cell multiset: s categorical draws with replacement, or one
// independent coin per cell with inclusion probability min(1, s P_ij), or the
// full grid. Deterministic per (P, s, mode, seed).
SamplingPlan draw_sample(const Matrix& P, long s, SampleMode mode, std::uint64_t seed);

// Inverse-probability-weighted kernel subsample: included cells carry
// K_ij / min(1, s P_ij), so the sparse kernel is entrywise unbiased for K.
SparseCoo sparsify_kernel_poisson(const Matrix& K, const SamplingPlan& plan);

// Sparsified solvers. Each runs the corresponding dense loop on the sampled
// support only: contraction restricted to S, kernel entries scaled by the
// importance adjustment, Sinkhorn over stored entries. FullDeterministic mode
// reproduces the dense solvers.
GwResult solve_spar_gw(const Problem& problem, const GroundCost& L, const SolverConfig& cfg,
                       long s, SampleMode mode, std::uint64_t seed);

GwResult solve_spar_fgw(const Problem& problem, const Matrix& M, const GroundCost& L, double alpha,
                        const SolverConfig& cfg, long s, SampleMode mode, std::uint64_t seed);

GwResult solve_spar_ugw(const Problem& problem, const GroundCost& L, double lambda,
                        const SolverConfig& cfg, long s, SampleMode mode, std::uint64_t seed);

}  // namespace spargw
