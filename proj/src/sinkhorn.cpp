#include "spargw/sinkhorn.hpp"

#include <algorithm>
#include <cmath>

namespace spargw {

namespace {

constexpr double kProductFloor = 1e-300;

struct DenseKernel {
    const Matrix& K;
    Index rows() const { return K.rows(); }
    Index cols() const { return K.cols(); }
    void apply(const Vector& v, Vector& out) const { out.noalias() = K * v; }
    void apply_t(const Vector& u, Vector& out) const { out.noalias() = K.transpose() * u; }
};

struct SparseKernel {
    const SparseCoo& K;
    Index rows() const { return K.rows; }
    Index cols() const { return K.cols; }
    void apply(const Vector& v, Vector& out) const {
        out.setZero();
        for (std::size_t k = 0; k < K.val.size(); ++k) out(K.row[k]) += K.val[k] * v(K.col[k]);
    }
    void apply_t(const Vector& u, Vector& out) const {
        out.setZero();
        for (std::size_t k = 0; k < K.val.size(); ++k) out(K.col[k]) += K.val[k] * u(K.row[k]);
    }
};

void check_feasible(const Vector& a, const Vector& b, const std::vector<bool>& row_has,
                    const std::vector<bool>& col_has) {
    for (Index i = 0; i < a.size(); ++i)
        if (a(i) > 0.0 && !row_has[i])
            throw InfeasibleKernel("kernel row " + std::to_string(i) +
                                   " is empty but the source atom has positive mass");
    for (Index j = 0; j < b.size(); ++j)
        if (b(j) > 0.0 && !col_has[j])
            throw InfeasibleKernel("kernel column " + std::to_string(j) +
                                   " is empty but the target atom has positive mass");
}

void check_kernel(const Vector& a, const Vector& b, const Matrix& K) {
    if (K.rows() != a.size() || K.cols() != b.size())
        throw DimensionMismatch("kernel shape does not match the marginals");
    std::vector<bool> row_has(K.rows(), false), col_has(K.cols(), false);
    for (Index j = 0; j < K.cols(); ++j)
        for (Index i = 0; i < K.rows(); ++i) {
            double k = K(i, j);
            if (k < 0.0 || !std::isfinite(k))
                throw ValidationError("kernel entries must be finite and non-negative");
            if (k > 0.0) {
                row_has[i] = true;
                col_has[j] = true;
            }
        }
    check_feasible(a, b, row_has, col_has);
}

void check_kernel(const Vector& a, const Vector& b, const SparseCoo& K) {
    if (K.rows != a.size() || K.cols != b.size())
        throw DimensionMismatch("kernel shape does not match the marginals");
    std::vector<bool> row_has(K.rows, false), col_has(K.cols, false);
    for (std::size_t k = 0; k < K.val.size(); ++k) {
        double kv = K.val[k];
        if (kv < 0.0 || !std::isfinite(kv))
            throw ValidationError("kernel entries must be finite and non-negative");
        if (kv > 0.0) {
            row_has[K.row[k]] = true;
            col_has[K.col[k]] = true;
        }
    }
    check_feasible(a, b, row_has, col_has);
}

// One scaling update: target ./ floor(product), optionally raised to p.
void rescale(const Vector& target, const Vector& product, double p, bool balanced, Vector& out) {
    for (Index i = 0; i < target.size(); ++i) {
        if (target(i) == 0.0) {
            out(i) = 0.0;
            continue;
        }
        double q = target(i) / std::max(product(i), kProductFloor);
        out(i) = balanced ? q : std::pow(q, p);
    }
    if (!out.allFinite())
        throw NumericalUnderflow("scaling vector left the finite range");
}

template <class Kernel>
std::pair<Vector, Vector> scale_loop(const Vector& a, const Vector& b, const Kernel& ker,
                                     double p, bool balanced, long H,
                                     const SinkhornOptions& opts) {
    Vector u = Vector::Ones(ker.rows());
    Vector v = Vector::Ones(ker.cols());
    Vector kv(ker.rows()), ktu(ker.cols());
    for (long h = 0; h < H; ++h) {
        ker.apply(v, kv);
        rescale(a, kv, p, balanced, u);
        ker.apply_t(u, ktu);
        rescale(b, ktu, p, balanced, v);
        if (opts.early_exit) {
            ker.apply(v, kv);
            double res = 0.0;
            for (Index i = 0; i < u.size(); ++i)
                res = std::max(res, std::abs(u(i) * kv(i) - a(i)));
            for (Index j = 0; j < v.size(); ++j)
                res = std::max(res, std::abs(v(j) * ktu(j) - b(j)));
            if (res < opts.early_exit_tol) break;
        }
    }
    return {std::move(u), std::move(v)};
}

double unbalanced_exponent(double lambda_bar, double eps_bar) {
    if (!(lambda_bar > 0.0) || !std::isfinite(lambda_bar))
        throw InvalidRegularizer("lambda must be positive and finite");
    if (!(eps_bar > 0.0) || !std::isfinite(eps_bar))
        throw InvalidRegularizer("epsilon must be positive and finite");
    return lambda_bar / (lambda_bar + eps_bar);
}

Matrix scaled_plan(const Matrix& K, const Vector& u, const Vector& v) {
    return u.asDiagonal() * K * v.asDiagonal();
}

SparseCoo scaled_plan(const SparseCoo& K, const Vector& u, const Vector& v) {
    SparseCoo T = K;
    for (std::size_t k = 0; k < T.val.size(); ++k) T.val[k] *= u(T.row[k]) * v(T.col[k]);
    return T;
}

}  // namespace

Matrix sinkhorn_balanced(const Vector& a, const Vector& b, const Matrix& K, long H,
                         const SinkhornOptions& opts) {
    check_kernel(a, b, K);
    auto [u, v] = scale_loop(a, b, DenseKernel{K}, 1.0, true, H, opts);
    return scaled_plan(K, u, v);
}

SparseCoo sinkhorn_balanced(const Vector& a, const Vector& b, const SparseCoo& K, long H,
                            const SinkhornOptions& opts) {
    check_kernel(a, b, K);
    auto [u, v] = scale_loop(a, b, SparseKernel{K}, 1.0, true, H, opts);
    return scaled_plan(K, u, v);
}

Matrix sinkhorn_unbalanced(const Vector& a, const Vector& b, const Matrix& K, double lambda_bar,
                           double eps_bar, long H, const SinkhornOptions& opts) {
    double p = unbalanced_exponent(lambda_bar, eps_bar);
    check_kernel(a, b, K);
    auto [u, v] = scale_loop(a, b, DenseKernel{K}, p, false, H, opts);
    return scaled_plan(K, u, v);
}

SparseCoo sinkhorn_unbalanced(const Vector& a, const Vector& b, const SparseCoo& K,
                              double lambda_bar, double eps_bar, long H,
                              const SinkhornOptions& opts) {
    double p = unbalanced_exponent(lambda_bar, eps_bar);
    check_kernel(a, b, K);
    auto [u, v] = scale_loop(a, b, SparseKernel{K}, p, false, H, opts);
    return scaled_plan(K, u, v);
}

}  // namespace spargw
