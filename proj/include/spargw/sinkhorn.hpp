#pragma once

#include "spargw/types.hpp"

namespace spargw {

struct SinkhornOptions {
    // H is a fixed budget; the optional residual early-exit is off by default
    // so runs with the same config stay bitwise identical.
    bool early_exit = false;
    double early_exit_tol = 1e-9;
};

// Alternating scaling u <- a ./ (K v), v <- b ./ (K' u) for H rounds, starting
// from u = v = 1; returns diag(u) K diag(v). Atoms with zero weight scale to
// zero rather than dividing by zero, and the products Kv / K'u are floored at
// 1e-300 before division.
Matrix sinkhorn_balanced(const Vector& a, const Vector& b, const Matrix& K, long H,
                         const SinkhornOptions& opts = {});
SparseCoo sinkhorn_balanced(const Vector& a, const Vector& b, const SparseCoo& K, long H,
                            const SinkhornOptions& opts = {});

// Unbalanced variant: the updates are raised to the power lambda_bar / (lambda_bar
// + eps_bar), which relaxes the marginal constraints to KL penalties.
Matrix sinkhorn_unbalanced(const Vector& a, const Vector& b, const Matrix& K, double lambda_bar,
                           double eps_bar, long H, const SinkhornOptions& opts = {});
SparseCoo sinkhorn_unbalanced(const Vector& a, const Vector& b, const SparseCoo& K,
                              double lambda_bar, double eps_bar, long H,
                              const SinkhornOptions& opts = {});

}  // namespace spargw
