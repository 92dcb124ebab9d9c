#pragma once

#include "spargw/types.hpp"

namespace spargw {

// Which implementation produced a cost matrix.
enum class ContractionKind { naive, decomposable, sparse };

struct CostMatrix {
    Matrix values;
    ContractionKind kind;
};

// Quadratic-cost contraction: out(i,j) = sum_{i',j'} L(Cx(i,i'), Cy(j,j')) * T(i',j').
// Four nested loops, Theta(m^2 n^2); the reference everything else is tested against.
Matrix contract_naive(const Matrix& cx, const Matrix& cy, const GroundCost& L, const Matrix& T);

// Same matrix via the decomposition L(a,b) = f1(a)+f2(b)-h1(a)h2(b):
//   out = f1(Cx)·mu·1ᵀ + 1·(f2(Cy)·nu)ᵀ − h1(Cx)·T·h2(Cy)ᵀ,  mu = T·1, nu = Tᵀ·1,
// which costs O(mn(m+n)) instead of O(m^2 n^2).
Matrix contract_decomposable(const Matrix& cx, const Matrix& cy, const GroundCost& L,
                             const Matrix& T);

// Dispatches to the fastest applicable dense path.
CostMatrix contract(const Matrix& cx, const Matrix& cy, const GroundCost& L, const Matrix& T);

// Contraction restricted to the fixed support S of T: for each (i,j) in S,
// out(i,j) = sum over (i',j') in S of L(Cx(i,i'), Cy(j,j')) * T(i',j').
// O(|S|^2) with cost values computed on demand; the s x s cost slice is never
// materialized. The result shares T's support.
SparseCoo contract_sparse(const Matrix& cx, const Matrix& cy, const GroundCost& L,
                          const SparseCoo& T);

}  // namespace spargw
