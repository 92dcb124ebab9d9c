#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spargw/sinkhorn.hpp"

#include <cmath>
#include <vector>

using namespace spargw;

namespace {

Matrix random_kernel(Index m, Index n, Rng& rng, double lo = 0.1, double hi = 1.0) {
    Matrix k(m, n);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) k(i, j) = lo + (hi - lo) * rng.uniform();
    return k;
}

double marginal_residual(const Matrix& t, const Vector& a, const Vector& b) {
    double r = (t.rowwise().sum() - a).cwiseAbs().maxCoeff();
    double c = (t.colwise().sum().transpose() - b).cwiseAbs().maxCoeff();
    return std::max(r, c);
}

SparseCoo densify_to_coo(const Matrix& k) {
    std::vector<Index> rows, cols;
    std::vector<double> vals;
    for (Index i = 0; i < k.rows(); ++i)
        for (Index j = 0; j < k.cols(); ++j) {
            rows.push_back(i);
            cols.push_back(j);
            vals.push_back(k(i, j));
        }
    return make_sparse(k.rows(), k.cols(), rows, cols, vals);
}

}  // namespace

TEST_CASE("product kernel is a fixed point of balanced scaling") {
    Vector a(3), b(2);
    a << 0.2, 0.5, 0.3;
    b << 0.6, 0.4;
    Matrix k = a * b.transpose();
    Matrix t = sinkhorn_balanced(a, b, k, 1);
    CHECK((t - k).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single-cell kernel scales to the exact coupling") {
    Vector one = Vector::Ones(1);
    Matrix k(1, 1);
    k << 0.5;
    Matrix t = sinkhorn_balanced(one, one, k, 3);
    CHECK(t(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("balanced scaling reaches the marginals on a random instance") {
    Rng rng(17);
    Vector a = Vector::Constant(4, 0.25), b = Vector::Constant(5, 0.2);
    Matrix k = random_kernel(4, 5, rng);
    Matrix t = sinkhorn_balanced(a, b, k, 500);
    CHECK(marginal_residual(t, a, b) <= 1e-8);
}

TEST_CASE("marginal residual is non-increasing in the iteration budget") {
    Rng rng(19);
    Vector a(4), b(4);
    a << 0.1, 0.2, 0.3, 0.4;
    b << 0.4, 0.3, 0.2, 0.1;
    Matrix k = random_kernel(4, 4, rng);
    double prev = std::numeric_limits<double>::infinity();
    for (long H : {10L, 50L, 250L}) {
        double res = marginal_residual(sinkhorn_balanced(a, b, k, H), a, b);
        CHECK(res <= prev * (1 + 1e-12));
        prev = res;
    }
}

TEST_CASE("sparse balanced scaling equals dense on the densified kernel") {
    Rng rng(23);
    for (int rep = 0; rep < 20; ++rep) {
        Index m = 2 + Index(rng.below(9)), n = 2 + Index(rng.below(9));
        Vector a = Vector::Constant(m, 1.0 / double(m));
        Vector b = Vector::Constant(n, 1.0 / double(n));
        Matrix k = random_kernel(m, n, rng);
        Matrix dense = sinkhorn_balanced(a, b, k, 60);
        Matrix sparse = sinkhorn_balanced(a, b, densify_to_coo(k), 60).to_dense();
        CHECK((dense - sparse).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("scaled output keeps exactly the kernel's support") {
    Vector a(2), b(2);
    a << 0.5, 0.5;
    b << 0.5, 0.5;
    SparseCoo k = make_sparse(2, 2, {0, 0, 1}, {0, 1, 1}, {0.3, 0.7, 0.4});
    SparseCoo t = sinkhorn_balanced(a, b, k, 100);
    REQUIRE(t.nnz() == 3);
    CHECK(t.row == k.row);
    CHECK(t.col == k.col);
    for (double v : t.val) CHECK(v > 0.0);
}

TEST_CASE("zero-weight atoms transport nothing instead of dividing by zero") {
    Vector a(2), b(2);
    a << 1.0, 0.0;
    b << 1.0, 0.0;
    Matrix k = Matrix::Constant(2, 2, 0.5);
    Matrix t = sinkhorn_balanced(a, b, k, 50);
    CHECK(t.row(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(t.col(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(t(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("kernel with an empty required row is rejected") {
    Vector a(2), b(2);
    a << 0.5, 0.5;
    b << 0.5, 0.5;
    Matrix k(2, 2);
    k << 0.5, 0.5, 0.0, 0.0;
    CHECK_THROWS_AS(sinkhorn_balanced(a, b, k, 10), InfeasibleKernel);
    CHECK_THROWS_AS(sinkhorn_unbalanced(a, b, k, 1.0, 1.0, 10), InfeasibleKernel);

    SparseCoo sk = make_sparse(2, 2, {0, 0}, {0, 1}, {0.5, 0.5});
    CHECK_THROWS_AS(sinkhorn_balanced(a, b, sk, 10), InfeasibleKernel);

    // The same support is fine when the missing row has no mass to place.
    Vector a0(2);
    a0 << 1.0, 0.0;
    CHECK_NOTHROW(sinkhorn_balanced(a0, b, sk, 10));
}

TEST_CASE("negative or non-finite kernels are rejected") {
    Vector a(2), b(2);
    a << 0.5, 0.5;
    b << 0.5, 0.5;
    Matrix k = Matrix::Constant(2, 2, 0.5);
    k(0, 1) = -0.1;
    CHECK_THROWS_AS(sinkhorn_balanced(a, b, k, 10), ValidationError);
    k(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(sinkhorn_balanced(a, b, k, 10), ValidationError);
}

TEST_CASE("unbalanced scaling with a huge relaxation approaches the balanced plan") {
    Rng rng(29);
    Vector a = Vector::Constant(4, 0.25), b = Vector::Constant(4, 0.25);
    Matrix k = random_kernel(4, 4, rng);
    Matrix balanced = sinkhorn_balanced(a, b, k, 200);
    Matrix relaxed = sinkhorn_unbalanced(a, b, k, 1e6, 1.0, 200);
    CHECK((balanced - relaxed).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("unbalanced single-cell fixed point") {
    Vector one = Vector::Ones(1);
    Matrix k(1, 1);
    k << 1.0;
    for (double lam : {0.5, 3.0}) {
        Matrix t = sinkhorn_unbalanced(one, one, k, lam, 0.7, 20);
        CHECK(t(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("unbalanced iterates satisfy the stationarity relation") {
    Rng rng(101);
    Vector a(4), b(4);
    for (Index i = 0; i < 4; ++i) {
        a(i) = 0.2 + rng.uniform();
        b(i) = 0.2 + rng.uniform();
    }
    Matrix k = random_kernel(4, 4, rng);
    double lam = 1.3, eps = 0.4, p = lam / (lam + eps);

    // Straight-line reimplementation of the alternating update, kept here so
    // the scaling vectors themselves are observable.
    Vector u = Vector::Ones(4), v = Vector::Ones(4);
    for (int h = 0; h < 300; ++h) {
        u = (a.array() / (k * v).array()).pow(p);
        v = (b.array() / (k.transpose() * u).array()).pow(p);
    }
    Matrix t = sinkhorn_unbalanced(a, b, k, lam, eps, 300);
    Matrix reference = u.asDiagonal() * k * v.asDiagonal();
    CHECK((t - reference).cwiseAbs().maxCoeff() <= 1e-12);

    // At the fixed point u^{1/p} (K v) = a holds row by row.
    for (Index i = 0; i < 4; ++i) {
        double kv = (k.row(i).transpose().array() * v.array()).sum();
        CHECK(std::abs(std::pow(u(i), 1.0 / p) * kv - a(i)) <= 1e-6);
    }
}

TEST_CASE("non-positive regularizers are rejected") {
    Vector a = Vector::Ones(1), b = Vector::Ones(1);
    Matrix k(1, 1);
    k << 1.0;
    CHECK_THROWS_AS(sinkhorn_unbalanced(a, b, k, 0.0, 1.0, 5), InvalidRegularizer);
    CHECK_THROWS_AS(sinkhorn_unbalanced(a, b, k, 1.0, -2.0, 5), InvalidRegularizer);
}

TEST_CASE("early exit returns the same plan as a converged full budget") {
    Rng rng(31);
    Vector a = Vector::Constant(3, 1.0 / 3), b = Vector::Constant(3, 1.0 / 3);
    Matrix k = random_kernel(3, 3, rng);
    SinkhornOptions early;
    early.early_exit = true;
    Matrix t_full = sinkhorn_balanced(a, b, k, 2000);
    Matrix t_early = sinkhorn_balanced(a, b, k, 2000, early);
    CHECK((t_full - t_early).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("mismatched marginal lengths are rejected") {
    Vector a = Vector::Constant(3, 1.0 / 3), b = Vector::Constant(2, 0.5);
    Matrix k = Matrix::Constant(2, 2, 1.0);
    CHECK_THROWS_AS(sinkhorn_balanced(a, b, k, 5), DimensionMismatch);
}
