#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spargw/datagen.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <map>
#include <vector>

using namespace spargw;

namespace {

// Least-squares slope of log(#nodes with degree >= d) against log(d) over the
// distinct observed degrees d >= 5. The survival counts are monotone, so the
// fit is stable even where individual degree bins hold a single node.
double degree_tail_slope(const GraphSpec& g) {
    std::vector<int> deg(g.n, 0);
    for (const auto& [i, j] : g.edges) {
        deg[i]++;
        deg[j]++;
    }
    std::map<int, double> survival;
    for (int d : deg) survival[d] += 1.0;
    double above = 0.0;
    for (auto it = survival.rbegin(); it != survival.rend(); ++it) it->second = (above += it->second);

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int k = 0;
    for (const auto& [d, c] : survival) {
        if (d < 5) continue;
        double x = std::log(static_cast<double>(d)), y = std::log(c);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++k;
    }
    REQUIRE(k >= 3);
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

}  // namespace

TEST_CASE("moon clouds with zero noise lie exactly on the two half circles") {
    auto [src, tgt] = gen_moon(4, 7, 0.0);
    REQUIRE(src.points.rows() == 4);
    REQUIRE(tgt.points.rows() == 4);
    for (Index i = 0; i < 4; ++i) {
        Eigen::Vector2d p = src.points.row(i);
        CHECK(std::abs(p.norm() - 1.0) <= 1e-12);
        CHECK(p(1) >= -1e-12);

        Eigen::Vector2d q = tgt.points.row(i);
        CHECK(std::abs((q - Eigen::Vector2d(1.0, 0.5)).norm() - 1.0) <= 1e-12);
        CHECK(q(1) <= 0.5 + 1e-12);
    }
}

TEST_CASE("moon generator is deterministic per seed") {
    auto [s1, t1] = gen_moon(30, 42);
    auto [s2, t2] = gen_moon(30, 42);
    CHECK(s1.points == s2.points);
    CHECK(t1.points == t2.points);

    auto [s3, t3] = gen_moon(30, 43);
    CHECK(s1.points != s3.points);
}

TEST_CASE("noisy moon stays inside the half-circle boxes inflated by six sigma") {
    const double noise = 0.05, pad = 6.0 * noise;
    auto [src, tgt] = gen_moon(200, 0, noise);
    CHECK(src.points.rows() == 200);
    CHECK(src.points.cols() == 2);
    CHECK(tgt.points.rows() == 200);
    CHECK(tgt.points.cols() == 2);

    CHECK(src.points.col(0).minCoeff() >= -1.0 - pad);
    CHECK(src.points.col(0).maxCoeff() <= 1.0 + pad);
    CHECK(src.points.col(1).minCoeff() >= 0.0 - pad);
    CHECK(src.points.col(1).maxCoeff() <= 1.0 + pad);

    CHECK(tgt.points.col(0).minCoeff() >= 0.0 - pad);
    CHECK(tgt.points.col(0).maxCoeff() <= 2.0 + pad);
    CHECK(tgt.points.col(1).minCoeff() >= -0.5 - pad);
    CHECK(tgt.points.col(1).maxCoeff() <= 0.5 + pad);
}

TEST_CASE("moon generator rejects degenerate inputs") {
    CHECK_THROWS_AS(gen_moon(1, 0), ValidationError);
    CHECK_THROWS_AS(gen_moon(10, 0, -0.1), ValidationError);
}

TEST_CASE("power-law graph adjacency is symmetric, binary, and hollow") {
    GraphSpec g = gen_powerlaw_graph(40, 3);
    Matrix adj = g.adjacency();
    REQUIRE(adj.rows() == 40);
    REQUIRE(adj.cols() == 40);
    CHECK(adj == adj.transpose().eval());
    CHECK(adj.diagonal().cwiseAbs().maxCoeff() == 0.0);
    for (Index i = 0; i < adj.rows(); ++i)
        for (Index j = 0; j < adj.cols(); ++j) CHECK((adj(i, j) == 0.0 || adj(i, j) == 1.0));
    CHECK_NOTHROW(validate_relation(adj));
    for (const auto& [i, j] : g.edges) CHECK(i < j);
}

TEST_CASE("power-law graph degree tail has a power-law slope at n = 500") {
    for (std::uint64_t seed : {0, 2, 3}) {
        GraphSpec g = gen_powerlaw_graph(500, seed);
        double slope = degree_tail_slope(g);
        CHECK(slope <= -1.5);
        CHECK(slope >= -3.5);
    }
}

TEST_CASE("power-law graph generator is deterministic per seed") {
    GraphSpec g1 = gen_powerlaw_graph(120, 9);
    GraphSpec g2 = gen_powerlaw_graph(120, 9);
    CHECK(g1.edges == g2.edges);
    GraphSpec g3 = gen_powerlaw_graph(120, 10);
    CHECK(g1.edges != g3.edges);
    CHECK_THROWS_AS(gen_powerlaw_graph(2, 0), ValidationError);
}

TEST_CASE("mixture clouds have the documented shapes and repeat per seed") {
    auto [src, tgt] = gen_gaussian_mixture(50, 17);
    CHECK(src.points.rows() == 50);
    CHECK(src.points.cols() == 5);
    CHECK(tgt.points.rows() == 50);
    CHECK(tgt.points.cols() == 10);
    CHECK(src.points.allFinite());
    CHECK(tgt.points.allFinite());

    auto [src2, tgt2] = gen_gaussian_mixture(50, 17);
    CHECK(src.points == src2.points);
    CHECK(tgt.points == tgt2.points);
}

TEST_CASE("source mixture covariance decays geometrically with index distance") {
    Matrix cov = mixture_source_covariance();
    REQUIRE(cov.rows() == 5);
    REQUIRE(cov.cols() == 5);
    CHECK(cov == cov.transpose().eval());
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 5; ++j)
            CHECK(std::abs(cov(i, j) - std::pow(0.6, std::abs(double(i - j)))) <= 1e-15);
}

TEST_CASE("sampled component covariance reproduces the 0.6 off-diagonal entry") {
    const Index big = 100000;
    Rng rng(0);
    Matrix chol = mixture_source_covariance().llt().matrixL();
    Matrix pts = sample_mvn(Vector::Zero(5), chol, big, rng);
    REQUIRE(pts.rows() == big);

    Vector mean = pts.colwise().mean().transpose();
    double c01 = 0.0;
    for (Index i = 0; i < big; ++i) c01 += (pts(i, 0) - mean(0)) * (pts(i, 1) - mean(1));
    c01 /= static_cast<double>(big - 1);

    // For a unit-variance Gaussian pair with correlation rho the sample
    // covariance has variance (1 + rho^2) / N.
    double band = 3.0 * std::sqrt((1.0 + 0.6 * 0.6) / static_cast<double>(big));
    CHECK(std::abs(c01 - 0.6) <= band);
}

TEST_CASE("sample_mvn rejects a Cholesky factor of the wrong shape") {
    Rng rng(1);
    CHECK_THROWS_AS(sample_mvn(Vector::Zero(5), Matrix::Identity(4, 4), 3, rng), DimensionMismatch);
}

TEST_CASE("spiral source point matches the closed form at r = 1") {
    // At r = 1 the angle is 3*pi, where cos = -1 and sin = 0.
    Eigen::Vector2d p = spiral_source_point(1.0, 0.0, 0.0);
    CHECK(std::abs(p(0) - (3.0 * M_PI - 10.0)) <= 1e-12);
    CHECK(std::abs(p(1) - (-10.0)) <= 1e-12);
}

TEST_CASE("spiral target is the source rotated a quarter turn and recentered") {
    const double c = std::cos(M_PI / 4.0), s = std::sin(M_PI / 4.0);
    Rng rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        double r = rng.uniform(), u = rng.uniform(), up = rng.uniform();
        Eigen::Vector2d src = spiral_source_point(r, u, up);
        Eigen::Vector2d tgt = spiral_target_point(r, u, up);
        CHECK(std::abs(tgt(0) - (c * src(0) - s * src(1) + 20.0)) <= 1e-12);
        CHECK(std::abs(tgt(1) - (s * src(0) + c * src(1) + 20.0)) <= 1e-12);
    }
}

TEST_CASE("spiral clouds have the right shape and repeat per seed") {
    auto [src, tgt] = gen_spiral(25, 11);
    CHECK(src.points.rows() == 25);
    CHECK(src.points.cols() == 2);
    CHECK(tgt.points.rows() == 25);
    CHECK(tgt.points.cols() == 2);

    auto [src2, tgt2] = gen_spiral(25, 11);
    CHECK(src.points == src2.points);
    CHECK(tgt.points == tgt2.points);
    CHECK_THROWS_AS(gen_spiral(1, 0), ValidationError);
}

TEST_CASE("euclidean relation reproduces the 3-4-5 triangle") {
    PointCloud cloud{Matrix(2, 2)};
    cloud.points << 0.0, 0.0, 3.0, 4.0;
    Matrix d = euclidean_relation(cloud);
    CHECK(d(0, 0) == 0.0);
    CHECK(d(1, 1) == 0.0);
    CHECK(d(0, 1) == 5.0);
    CHECK(d(1, 0) == 5.0);

    PointCloud lone{Matrix::Zero(1, 3)};
    Matrix single = euclidean_relation(lone);
    REQUIRE(single.rows() == 1);
    CHECK(single(0, 0) == 0.0);
}

TEST_CASE("euclidean relation matches a bare double loop") {
    Rng rng(23);
    PointCloud cloud{Matrix(5, 3)};
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 3; ++j) cloud.points(i, j) = 4.0 * rng.uniform() - 2.0;

    Matrix d = euclidean_relation(cloud);
    CHECK_NOTHROW(validate_relation(d));
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 5; ++j) {
            double acc = 0.0;
            for (Index k = 0; k < 3; ++k) {
                double diff = cloud.points(i, k) - cloud.points(j, k);
                acc += diff * diff;
            }
            CHECK(std::abs(d(i, j) - std::sqrt(acc)) <= 1e-12);
        }
}

TEST_CASE("euclidean relation satisfies the triangle inequality") {
    Rng rng(29);
    PointCloud cloud{Matrix(12, 2)};
    for (Index i = 0; i < 12; ++i)
        for (Index j = 0; j < 2; ++j) cloud.points(i, j) = 10.0 * rng.uniform();

    Matrix d = euclidean_relation(cloud);
    for (Index i = 0; i < 12; ++i)
        for (Index j = 0; j < 12; ++j)
            for (Index k = 0; k < 12; ++k) CHECK(d(i, j) <= d(i, k) + d(k, j) + 1e-9);
}

TEST_CASE("feature distance crosses the two clouds and checks dimensions") {
    PointCloud x{Matrix(2, 2)}, y{Matrix(3, 2)};
    x.points << 0.0, 0.0, 1.0, 1.0;
    y.points << 3.0, 4.0, 0.0, 0.0, 1.0, 0.0;
    Matrix d = feature_distance(x, y);
    REQUIRE(d.rows() == 2);
    REQUIRE(d.cols() == 3);
    CHECK(d(0, 0) == 5.0);
    CHECK(d(0, 1) == 0.0);
    CHECK(d(0, 2) == 1.0);
    CHECK(std::abs(d(1, 0) - std::sqrt(13.0)) <= 1e-15);

    PointCloud z{Matrix::Zero(2, 3)};
    CHECK_THROWS_AS(feature_distance(x, z), DimensionMismatch);
}

TEST_CASE("uniform weights form a balanced distribution") {
    Distribution u = uniform_weights(7);
    REQUIRE(u.size() == 7);
    CHECK(u.mode() == WeightMode::balanced);
    for (Index i = 0; i < 7; ++i) CHECK(u.weights()(i) == 1.0 / 7.0);
    CHECK_THROWS_AS(uniform_weights(0), EmptyDistribution);
}

TEST_CASE("gaussian weights favor points near the centroid") {
    PointCloud cloud{Matrix(3, 2)};
    cloud.points << 0.0, 0.0, 1.0, 0.0, 5.0, 0.0;
    Distribution w = gaussian_weights(cloud);
    REQUIRE(w.size() == 3);
    CHECK(w.mode() == WeightMode::balanced);
    CHECK(std::abs(w.weights().sum() - 1.0) <= 1e-12);
    CHECK(w.weights().minCoeff() > 0.0);
    // Centroid (2, 0): the middle point sits closest, the far point farthest.
    CHECK(w.weights()(1) > w.weights()(0));
    CHECK(w.weights()(0) > w.weights()(2));

    // Equidistant pair splits the mass evenly.
    PointCloud pair{Matrix(2, 2)};
    pair.points << 0.0, 0.0, 4.0, 0.0;
    Distribution even = gaussian_weights(pair);
    CHECK(std::abs(even.weights()(0) - 0.5) <= 1e-15);
    CHECK(std::abs(even.weights()(1) - 0.5) <= 1e-15);

    CHECK_THROWS_AS(gaussian_weights(cloud, 0.0), ValidationError);
    CHECK_THROWS_AS(gaussian_weights(cloud, -1.0), ValidationError);
}

TEST_CASE("a wide bandwidth flattens the gaussian weights toward uniform") {
    PointCloud cloud{Matrix(4, 2)};
    cloud.points << 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0;
    Distribution w = gaussian_weights(cloud, 1e6);
    for (Index i = 0; i < 4; ++i) CHECK(std::abs(w.weights()(i) - 0.25) <= 1e-9);
}
