#include "spargw/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace spargw {

namespace {

void check_weights(const Vector& w) {
    if (w.size() == 0)
        throw EmptyDistribution("distribution has no atoms");
    bool any_positive = false;
    for (Index i = 0; i < w.size(); ++i) {
        if (!std::isfinite(w(i)))
            throw ValidationError("non-finite weight at index " + std::to_string(i));
        if (w(i) < 0.0)
            throw NegativeWeight("negative weight at index " + std::to_string(i));
        if (w(i) > 0.0) any_positive = true;
    }
    if (!any_positive)
        throw EmptyDistribution("all weights are zero");
}

}  // namespace

Distribution Distribution::balanced(Vector w) {
    check_weights(w);
    double sum = w.sum();
    if (std::abs(sum - 1.0) > kBalancedSumTol)
        throw ValidationError("balanced weights sum to " + std::to_string(sum) +
                              ", expected 1 within 1e-12");
    return Distribution(std::move(w), WeightMode::balanced);
}

Distribution Distribution::unbalanced(Vector w) {
    check_weights(w);
    return Distribution(std::move(w), WeightMode::unbalanced);
}

void validate_relation(const Matrix& C) {
    if (C.rows() != C.cols())
        throw ValidationError("relation matrix is " + std::to_string(C.rows()) + "x" +
                              std::to_string(C.cols()) + ", expected square");
    for (Index i = 0; i < C.rows(); ++i)
        for (Index j = 0; j < C.cols(); ++j) {
            if (!std::isfinite(C(i, j)))
                throw ValidationError("non-finite relation entry");
            if (std::abs(C(i, j) - C(j, i)) > kSymmetryTol)
                throw NonSymmetricRelation("relation entries (" + std::to_string(i) + "," +
                                           std::to_string(j) + ") differ across the diagonal");
        }
}

GroundCost GroundCost::l1() { return GroundCost(CostKind::l1, nullptr, std::nullopt); }

GroundCost GroundCost::l2() {
    Decomposition d;
    d.f1 = [](double a) { return a * a; };
    d.f2 = [](double b) { return b * b; };
    d.h1 = [](double a) { return a; };
    d.h2 = [](double b) { return 2.0 * b; };
    return GroundCost(CostKind::l2, nullptr, std::move(d));
}

GroundCost GroundCost::kl() {
    Decomposition d;
    d.f1 = [](double a) { return a > 0.0 ? a * std::log(a) - a : 0.0; };
    d.f2 = [](double b) { return b; };
    d.h1 = [](double a) { return a; };
    d.h2 = [](double b) { return std::log(b); };
    return GroundCost(CostKind::kl, nullptr, std::move(d));
}

GroundCost GroundCost::custom(std::function<double(double, double)> fn,
                              std::optional<Decomposition> decomp) {
    return GroundCost(CostKind::custom, std::move(fn), std::move(decomp));
}

const Decomposition& GroundCost::decomposition() const {
    if (!decomp_)
        throw MissingDecomposition("ground cost declares no decomposition");
    return *decomp_;
}

double GroundCost::operator()(double a, double b) const {
    switch (kind_) {
        case CostKind::l1:
            return std::abs(a - b);
        case CostKind::l2:
            return (a - b) * (a - b);
        case CostKind::kl:
            if (a <= 0.0 || b <= 0.0)
                throw DomainError("kl cost needs strictly positive arguments");
            return a * std::log(a / b) - a + b;
        case CostKind::custom:
            return fn_(a, b);
    }
    throw Error("unreachable cost kind");
}

double eval_cost(const GroundCost& L, double a, double b) { return L(a, b); }

Problem validate_problem(Distribution a, Distribution b, Matrix cx, Matrix cy) {
    Problem p{std::move(a), std::move(b), std::move(cx), std::move(cy)};
    validate_problem(p);
    return p;
}

void validate_problem(const Problem& p) {
    validate_relation(p.cx);
    validate_relation(p.cy);
    if (p.a.size() != p.cx.rows())
        throw DimensionMismatch("source has " + std::to_string(p.a.size()) + " atoms but Cx is " +
                                std::to_string(p.cx.rows()) + "x" + std::to_string(p.cx.cols()));
    if (p.b.size() != p.cy.rows())
        throw DimensionMismatch("target has " + std::to_string(p.b.size()) + " atoms but Cy is " +
                                std::to_string(p.cy.rows()) + "x" + std::to_string(p.cy.cols()));
    if (p.a.mode() != p.b.mode())
        throw ValidationError("source and target distributions use different weight modes");
}

double SparseCoo::sum() const { return std::accumulate(val.begin(), val.end(), 0.0); }

Vector SparseCoo::row_marginal() const {
    Vector mu = Vector::Zero(rows);
    for (std::size_t k = 0; k < val.size(); ++k) mu(row[k]) += val[k];
    return mu;
}

Vector SparseCoo::col_marginal() const {
    Vector nu = Vector::Zero(cols);
    for (std::size_t k = 0; k < val.size(); ++k) nu(col[k]) += val[k];
    return nu;
}

Matrix SparseCoo::to_dense() const {
    Matrix out = Matrix::Zero(rows, cols);
    for (std::size_t k = 0; k < val.size(); ++k) out(row[k], col[k]) = val[k];
    return out;
}

SparseCoo make_sparse(Index rows, Index cols, std::vector<Index> r, std::vector<Index> c,
                      std::vector<double> v) {
    if (r.size() != c.size() || r.size() != v.size())
        throw DimensionMismatch("sparse triplet arrays have mismatched lengths");
    std::vector<std::size_t> order(r.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return r[x] != r[y] ? r[x] < r[y] : c[x] < c[y];
    });
    SparseCoo out;
    out.rows = rows;
    out.cols = cols;
    out.row.reserve(r.size());
    out.col.reserve(r.size());
    out.val.reserve(r.size());
    for (std::size_t k : order) {
        if (r[k] < 0 || r[k] >= rows || c[k] < 0 || c[k] >= cols)
            throw IndexOutOfRange("sparse entry (" + std::to_string(r[k]) + "," +
                                  std::to_string(c[k]) + ") outside " + std::to_string(rows) +
                                  "x" + std::to_string(cols));
        if (!out.row.empty() && out.row.back() == r[k] && out.col.back() == c[k]) {
            out.val.back() += v[k];
        } else {
            out.row.push_back(r[k]);
            out.col.push_back(c[k]);
            out.val.push_back(v[k]);
        }
    }
    return out;
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Rejection on the top of the range keeps the draw exactly uniform.
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                          std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = gen_();
    } while (x >= limit);
    return x % n;
}

}  // namespace spargw
