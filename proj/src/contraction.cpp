#include "spargw/contraction.hpp"

#include <cmath>

namespace spargw {

namespace {

struct L1Op {
    double operator()(double a, double b) const { return std::abs(a - b); }
};

struct L2Op {
    double operator()(double a, double b) const {
        double d = a - b;
        return d * d;
    }
};

struct KlOp {
    double operator()(double a, double b) const {
        if (a <= 0.0 || b <= 0.0)
            throw DomainError("kl cost needs strictly positive relation entries");
        return a * std::log(a / b) - a + b;
    }
};

struct CustomOp {
    const GroundCost* L;
    double operator()(double a, double b) const { return (*L)(a, b); }
};

void check_dims(const Matrix& cx, const Matrix& cy, Index tr, Index tc) {
    if (tr != cx.rows() || tc != cy.rows())
        throw DimensionMismatch("plan is " + std::to_string(tr) + "x" + std::to_string(tc) +
                                " but relations are " + std::to_string(cx.rows()) + "/" +
                                std::to_string(cy.rows()));
}

// The i' loop runs down a column of Cx (symmetry makes Cx(i,i') = Cx(i',i))
// and a column of T, so both inner streams are contiguous.
template <class Op>
Matrix naive_impl(const Matrix& cx, const Matrix& cy, const Matrix& T, Op op) {
    const Index m = cx.rows(), n = cy.rows();
    Matrix out(m, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < m; ++i) {
            double acc = 0.0;
            for (Index jp = 0; jp < n; ++jp) {
                const double cyv = cy(jp, j);
                const double* cxcol = cx.col(i).data();
                const double* tcol = T.col(jp).data();
                double inner = 0.0;
                for (Index ip = 0; ip < m; ++ip) inner += op(cxcol[ip], cyv) * tcol[ip];
                acc += inner;
            }
            out(i, j) = acc;
        }
    }
    return out;
}

template <class Op>
SparseCoo sparse_impl(const Matrix& cx, const Matrix& cy, const SparseCoo& T, Op op) {
    SparseCoo out;
    out.rows = T.rows;
    out.cols = T.cols;
    out.row = T.row;
    out.col = T.col;
    out.val.assign(T.val.size(), 0.0);
    const std::size_t nnz = T.val.size();
    const Index* r = T.row.data();
    const Index* c = T.col.data();
    const double* v = T.val.data();
    for (std::size_t k1 = 0; k1 < nnz; ++k1) {
        const double* cxcol = cx.col(r[k1]).data();
        const double* cycol = cy.col(c[k1]).data();
        double acc = 0.0;
        for (std::size_t k2 = 0; k2 < nnz; ++k2)
            acc += op(cxcol[r[k2]], cycol[c[k2]]) * v[k2];
        out.val[k1] = acc;
    }
    return out;
}

Matrix apply_scalar(const Matrix& C, const std::function<double(double)>& f) {
    return C.unaryExpr([&](double x) { return f(x); });
}

}  // namespace

Matrix contract_naive(const Matrix& cx, const Matrix& cy, const GroundCost& L, const Matrix& T) {
    check_dims(cx, cy, T.rows(), T.cols());
    switch (L.kind()) {
        case CostKind::l1:
            return naive_impl(cx, cy, T, L1Op{});
        case CostKind::l2:
            return naive_impl(cx, cy, T, L2Op{});
        case CostKind::kl:
            return naive_impl(cx, cy, T, KlOp{});
        case CostKind::custom:
            return naive_impl(cx, cy, T, CustomOp{&L});
    }
    throw Error("unreachable cost kind");
}

Matrix contract_decomposable(const Matrix& cx, const Matrix& cy, const GroundCost& L,
                             const Matrix& T) {
    check_dims(cx, cy, T.rows(), T.cols());
    const Vector mu = T.rowwise().sum();
    const Vector nu = T.colwise().sum().transpose();

    Matrix f1cx, f2cy, h1cx, h2cy;
    switch (L.kind()) {
        case CostKind::l2:
            f1cx = cx.array().square().matrix();
            f2cy = cy.array().square().matrix();
            h1cx = cx;
            h2cy = 2.0 * cy;
            break;
        case CostKind::kl:
            if ((cx.array() <= 0.0).any() || (cy.array() <= 0.0).any())
                throw DomainError("kl cost needs strictly positive relation entries");
            f1cx = (cx.array() * cx.array().log() - cx.array()).matrix();
            f2cy = cy;
            h1cx = cx;
            h2cy = cy.array().log().matrix();
            break;
        default: {
            const Decomposition& d = L.decomposition();
            f1cx = apply_scalar(cx, d.f1);
            f2cy = apply_scalar(cy, d.f2);
            h1cx = apply_scalar(cx, d.h1);
            h2cy = apply_scalar(cy, d.h2);
            break;
        }
    }

    Matrix out = (f1cx * mu).replicate(1, T.cols());
    out.noalias() += ((f2cy * nu).transpose()).replicate(T.rows(), 1);
    out.noalias() -= h1cx * T * h2cy.transpose();
    return out;
}

CostMatrix contract(const Matrix& cx, const Matrix& cy, const GroundCost& L, const Matrix& T) {
    if (L.has_decomposition())
        return CostMatrix{contract_decomposable(cx, cy, L, T), ContractionKind::decomposable};
    return CostMatrix{contract_naive(cx, cy, L, T), ContractionKind::naive};
}

SparseCoo contract_sparse(const Matrix& cx, const Matrix& cy, const GroundCost& L,
                          const SparseCoo& T) {
    if (T.rows != cx.rows() || T.cols != cy.rows())
        throw DimensionMismatch("sparse plan shape does not match the relation matrices");
    for (std::size_t k = 0; k < T.val.size(); ++k)
        if (T.row[k] < 0 || T.row[k] >= T.rows || T.col[k] < 0 || T.col[k] >= T.cols)
            throw IndexOutOfRange("sparse plan entry outside the grid");
    switch (L.kind()) {
        case CostKind::l1:
            return sparse_impl(cx, cy, T, L1Op{});
        case CostKind::l2:
            return sparse_impl(cx, cy, T, L2Op{});
        case CostKind::kl:
            return sparse_impl(cx, cy, T, KlOp{});
        case CostKind::custom:
            return sparse_impl(cx, cy, T, CustomOp{&L});
    }
    throw Error("unreachable cost kind");
}

}  // namespace spargw
