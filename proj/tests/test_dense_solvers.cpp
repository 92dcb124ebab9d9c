#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spargw/dense_solvers.hpp"

#include <cmath>
#include <numeric>
#include <vector>

using namespace spargw;

namespace {

Matrix random_relation(Index n, Rng& rng, double lo = 0.0, double hi = 1.0) {
    Matrix c(n, n);
    for (Index i = 0; i < n; ++i) {
        c(i, i) = 0.0;
        for (Index j = i + 1; j < n; ++j) c(i, j) = c(j, i) = lo + (hi - lo) * rng.uniform();
    }
    return c;
}

Problem uniform_problem(const Matrix& cx, const Matrix& cy) {
    Vector a = Vector::Constant(cx.rows(), 1.0 / double(cx.rows()));
    Vector b = Vector::Constant(cy.rows(), 1.0 / double(cy.rows()));
    return {Distribution::balanced(a), Distribution::balanced(b), cx, cy};
}

double quad_objective(const Problem& p, const GroundCost& L, const Matrix& t) {
    return (contract_naive(p.cx, p.cy, L, t).array() * t.array()).sum();
}

// KL(mu (x) mu || nu (x) nu) reduced to one dimension:
// 2 m(mu) sum_i mu_i log(mu_i/nu_i) - m(mu)^2 + m(nu)^2, zero-mass terms skipped.
double kl_outer(const Vector& mu, const Vector& nu) {
    double cross = 0.0;
    for (Index i = 0; i < mu.size(); ++i)
        if (mu(i) > 0.0) cross += mu(i) * std::log(mu(i) / nu(i));
    double mm = mu.sum(), mn = nu.sum();
    return 2.0 * mm * cross - mm * mm + mn * mn;
}

}  // namespace

TEST_CASE("self-distance of identical spaces is near zero") {
    Rng rng(71);
    Matrix c = random_relation(10, rng);
    SolverConfig cfg;
    cfg.reg = Regularizer::proximal_kl;
    cfg.eps = 0.01;
    cfg.outer = 20;
    cfg.inner = 50;
    GwResult r = solve_gw_dense(uniform_problem(c, c), GroundCost::l2(), cfg);
    CHECK(r.distance >= 0.0);
    CHECK(r.distance <= 1e-3);
}

TEST_CASE("single-point spaces give the pointwise cost exactly") {
    Matrix cx(1, 1), cy(1, 1);
    cx << 2.0;
    cy << 2.0;
    SolverConfig cfg;
    GwResult same = solve_gw_dense(uniform_problem(cx, cy), GroundCost::l2(), cfg);
    CHECK(same.distance == 0.0);

    cy << 5.0;
    GwResult diff = solve_gw_dense(uniform_problem(cx, cy), GroundCost::l1(), cfg);
    CHECK(diff.distance == 3.0);
}

TEST_CASE("proximal objective trace descends") {
    Rng rng(73);
    for (int rep = 0; rep < 10; ++rep) {
        Index m = 3 + Index(rng.below(6)), n = 3 + Index(rng.below(6));
        Matrix cx = random_relation(m, rng), cy = random_relation(n, rng);
        SolverConfig cfg;
        cfg.eps = 0.1;
        cfg.inner = 300;
        GwResult r = solve_gw_dense(uniform_problem(cx, cy), GroundCost::l2(), cfg);
        REQUIRE(r.objective_trace.size() == std::size_t(cfg.outer + 1));
        for (std::size_t k = 1; k < r.objective_trace.size(); ++k)
            CHECK(r.objective_trace[k] <= r.objective_trace[k - 1] + 1e-7);
    }
}

TEST_CASE("returned balanced plans satisfy the marginals tightly") {
    Rng rng(79);
    SolverConfig cfg;
    cfg.inner = 200;
    cfg.outer = 5;
    cfg.eps = 0.1;
    for (int rep = 0; rep < 10; ++rep) {
        Index m = 3 + Index(rng.below(5)), n = 3 + Index(rng.below(5));
        Problem p = uniform_problem(random_relation(m, rng), random_relation(n, rng));
        GwResult r = solve_gw_dense(p, GroundCost::l2(), cfg);
        const Matrix& t = r.dense_plan();
        double res = std::max(
            (t.rowwise().sum() - p.a.weights()).cwiseAbs().maxCoeff(),
            (t.colwise().sum().transpose() - p.b.weights()).cwiseAbs().maxCoeff());
        CHECK(res <= 1e-6);
    }
}

TEST_CASE("permuting one space's labels leaves the distance unchanged") {
    Rng rng(83);
    Matrix cx = random_relation(6, rng), cy = random_relation(5, rng);
    Problem p = uniform_problem(cx, cy);
    SolverConfig cfg;
    cfg.eps = 0.05;
    GwResult base = solve_gw_dense(p, GroundCost::l2(), cfg);

    std::vector<Index> perm = {3, 0, 5, 1, 4, 2};
    Matrix pcx(6, 6);
    for (Index i = 0; i < 6; ++i)
        for (Index j = 0; j < 6; ++j) pcx(i, j) = cx(perm[std::size_t(i)], perm[std::size_t(j)]);
    GwResult permuted = solve_gw_dense(uniform_problem(pcx, cy), GroundCost::l2(), cfg);
    CHECK(std::abs(base.distance - permuted.distance) <= 1e-9);

    // The plan follows the same relabeling row by row.
    const Matrix& t = base.dense_plan();
    const Matrix& tp = permuted.dense_plan();
    for (Index i = 0; i < 6; ++i)
        CHECK((tp.row(i) - t.row(perm[std::size_t(i)])).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("entropic and proximal agree on the symmetric two-point instance") {
    Matrix c(2, 2);
    c << 0, 1, 1, 0;
    SolverConfig prox;
    prox.eps = 1e-3;
    SolverConfig ent = prox;
    ent.reg = Regularizer::entropic;
    double d1 = solve_gw_dense(uniform_problem(c, c), GroundCost::l2(), prox).distance;
    double d2 = solve_gw_dense(uniform_problem(c, c), GroundCost::l2(), ent).distance;
    CHECK(std::abs(d1 - d2) <= 0.05 * std::max(d1, d2));
}

TEST_CASE("fused solver with full structure weight reproduces the plain solver bitwise") {
    Rng rng(89);
    Matrix cx = random_relation(5, rng), cy = random_relation(4, rng);
    Matrix M(5, 4);
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 4; ++j) M(i, j) = rng.uniform();
    Problem p = uniform_problem(cx, cy);
    SolverConfig cfg;
    cfg.eps = 0.05;
    GwResult plain = solve_gw_dense(p, GroundCost::l2(), cfg);
    GwResult fused = solve_fgw_dense(p, M, GroundCost::l2(), 1.0, cfg);
    CHECK(fused.distance == plain.distance);
    CHECK((fused.dense_plan() - plain.dense_plan()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fused solver with zero structure weight solves entropic transport on the features") {
    Rng rng(97);
    Matrix cx = random_relation(3, rng), cy = random_relation(3, rng);
    Matrix M(3, 3);
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 3; ++j) M(i, j) = rng.uniform();
    Problem p = uniform_problem(cx, cy);
    SolverConfig cfg;
    cfg.reg = Regularizer::entropic;
    cfg.eps = 0.05;
    cfg.inner = 200;
    GwResult r = solve_fgw_dense(p, M, GroundCost::l2(), 0.0, cfg);

    Matrix K = (-M.array() / cfg.eps).exp().matrix();
    Matrix t = sinkhorn_balanced(p.a.weights(), p.b.weights(), K, cfg.inner);
    double want = (M.array() * t.array()).sum();
    CHECK(std::abs(r.distance - want) <= 1e-8);
}

TEST_CASE("fused objective decomposes into its quadratic and linear parts") {
    Rng rng(103);
    Matrix cx = random_relation(4, rng), cy = random_relation(4, rng);
    Matrix M(4, 4);
    for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 4; ++j) M(i, j) = rng.uniform();
    Problem p = uniform_problem(cx, cy);
    SolverConfig cfg;
    cfg.eps = 0.05;
    double alpha = 0.6;
    GwResult r = solve_fgw_dense(p, M, GroundCost::l2(), alpha, cfg);
    double recomputed = alpha * quad_objective(p, GroundCost::l2(), r.dense_plan()) +
                        (1 - alpha) * (M.array() * r.dense_plan().array()).sum();
    CHECK(std::abs(r.distance - recomputed) <= 1e-12);
}

TEST_CASE("fused solver validates the feature matrix and trade-off") {
    Rng rng(107);
    Matrix cx = random_relation(3, rng), cy = random_relation(3, rng);
    Problem p = uniform_problem(cx, cy);
    SolverConfig cfg;
    Matrix bad = Matrix::Constant(3, 3, -1.0);
    CHECK_THROWS_AS(solve_fgw_dense(p, bad, GroundCost::l2(), 0.5, cfg), ValidationError);
    Matrix wrong_shape = Matrix::Zero(3, 2);
    CHECK_THROWS_AS(solve_fgw_dense(p, wrong_shape, GroundCost::l2(), 0.5, cfg),
                    DimensionMismatch);
    Matrix ok = Matrix::Constant(3, 3, 0.5);
    CHECK_THROWS_AS(solve_fgw_dense(p, ok, GroundCost::l2(), 1.5, cfg), ValidationError);
}

TEST_CASE("relaxed solver with huge marginal penalty recovers the balanced distance") {
    Rng rng(109);
    Matrix cx = random_relation(5, rng), cy = random_relation(5, rng);
    Vector a = Vector::Constant(5, 0.2), b = Vector::Constant(5, 0.2);
    Problem balanced{Distribution::balanced(a), Distribution::balanced(b), cx, cy};
    Problem relaxed{Distribution::unbalanced(a), Distribution::unbalanced(b), cx, cy};
    // The marginal penalty multiplies the squared Sinkhorn residual by the huge
    // relaxation weight, so the inner loop has to run to convergence.
    SolverConfig cfg;
    cfg.eps = 0.2;
    cfg.inner = 500;
    GwResult g = solve_gw_dense(balanced, GroundCost::l2(), cfg);
    GwResult u = solve_ugw_dense(relaxed, GroundCost::l2(), 1e6, cfg);
    CHECK(std::abs(u.distance - g.distance) <= 1e-3 * std::max(1e-30, std::abs(g.distance)));
}

TEST_CASE("relaxed solver on a single pair of points returns zero") {
    Matrix c(1, 1);
    c << 3.0;
    Vector one = Vector::Ones(1);
    Problem p{Distribution::unbalanced(one), Distribution::unbalanced(one), c, c};
    SolverConfig cfg;
    for (double lam : {0.1, 1.0, 100.0}) {
        GwResult r = solve_ugw_dense(p, GroundCost::l2(), lam, cfg);
        CHECK(std::abs(r.distance) <= 1e-12);
    }
}

TEST_CASE("relaxed objective equals its three-term recomputation") {
    Rng rng(113);
    Matrix cx = random_relation(3, rng), cy = random_relation(3, rng);
    Vector a(3), b(3);
    a << 0.5, 0.8, 0.2;
    b << 0.4, 0.3, 0.9;
    Problem p{Distribution::unbalanced(a), Distribution::unbalanced(b), cx, cy};
    SolverConfig cfg;
    cfg.eps = 0.1;
    double lam = 1.0;
    GwResult r = solve_ugw_dense(p, GroundCost::l2(), lam, cfg);
    const Matrix& t = r.dense_plan();
    double recomputed = quad_objective(p, GroundCost::l2(), t) +
                        lam * kl_outer(t.rowwise().sum(), a) +
                        lam * kl_outer(t.colwise().sum().transpose(), b);
    CHECK(std::abs(r.distance - recomputed) <= 1e-12);
}

TEST_CASE("solver configuration is validated") {
    Rng rng(127);
    Matrix c = random_relation(3, rng);
    Problem p = uniform_problem(c, c);
    SolverConfig cfg;
    cfg.eps = 0.0;
    CHECK_THROWS_AS(solve_gw_dense(p, GroundCost::l2(), cfg), InvalidRegularizer);
    cfg = SolverConfig{};
    cfg.outer = 0;
    CHECK_THROWS_AS(solve_gw_dense(p, GroundCost::l2(), cfg), ValidationError);
    cfg = SolverConfig{};

    Vector w = Vector::Constant(3, 1.0 / 3);
    Problem relaxed{Distribution::unbalanced(w), Distribution::unbalanced(w), c, c};
    CHECK_THROWS_AS(solve_gw_dense(relaxed, GroundCost::l2(), cfg), ValidationError);
    CHECK_THROWS_AS(solve_ugw_dense(relaxed, GroundCost::l2(), -1.0, cfg), InvalidRegularizer);

    Vector zw(3);
    zw << 0.5, 0.0, 0.5;
    Problem zero_atom{Distribution::unbalanced(zw), Distribution::unbalanced(w), c, c};
    CHECK_THROWS_AS(solve_ugw_dense(zero_atom, GroundCost::l2(), 1.0, cfg), ValidationError);
}

TEST_CASE("recorded plan snapshots cover every outer round") {
    Rng rng(131);
    Matrix c = random_relation(4, rng);
    SolverConfig cfg;
    cfg.outer = 7;
    cfg.record_plans = true;
    GwResult r = solve_gw_dense(uniform_problem(c, c), GroundCost::l2(), cfg);
    CHECK(r.plan_trace.size() == 7);
    CHECK((r.plan_trace.back() - r.dense_plan()).cwiseAbs().maxCoeff() == 0.0);
}
