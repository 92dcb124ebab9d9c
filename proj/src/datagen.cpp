#include "spargw/datagen.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <string>

namespace spargw {

namespace {

void require_count(Index n, Index least, const char* what) {
    if (n < least)
        throw ValidationError(std::string(what) + " needs at least " + std::to_string(least) +
                              " points, got " + std::to_string(n));
}

Vector mvn_point(const Vector& mean, const Matrix& chol, Rng& rng) {
    Vector z(mean.size());
    for (Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    return mean + chol * z;
}

}  // namespace

Matrix GraphSpec::adjacency() const {
    Matrix adj = Matrix::Zero(n, n);
    for (const auto& [i, j] : edges) {
        adj(i, j) = 1.0;
        adj(j, i) = 1.0;
    }
    return adj;
}

std::pair<PointCloud, PointCloud> gen_moon(Index n, std::uint64_t seed, double noise) {
    require_count(n, 2, "moon generator");
    if (noise < 0.0 || !std::isfinite(noise))
        throw ValidationError("noise level must be finite and non-negative");
    Rng rng(seed);
    PointCloud source{Matrix(n, 2)}, target{Matrix(n, 2)};
    for (Index i = 0; i < n; ++i) {
        double theta = M_PI * rng.uniform();
        source.points(i, 0) = std::cos(theta) + noise * rng.normal();
        source.points(i, 1) = std::sin(theta) + noise * rng.normal();
    }
    for (Index i = 0; i < n; ++i) {
        double theta = M_PI * rng.uniform();
        target.points(i, 0) = 1.0 - std::cos(theta) + noise * rng.normal();
        target.points(i, 1) = 0.5 - std::sin(theta) + noise * rng.normal();
    }
    return {std::move(source), std::move(target)};
}

GraphSpec gen_powerlaw_graph(Index n, std::uint64_t seed) {
    require_count(n, 3, "power-law graph generator");
    Rng rng(seed);
    GraphSpec g;
    g.n = n;
    g.seed = seed;

    // Each new node attaches to two distinct existing nodes picked uniformly
    // from the edge-endpoint multiset, so the pick chance is proportional to
    // the current degree.
    std::vector<Index> targets = {0, 1};
    std::vector<Index> repeated;
    for (Index v = 2; v < n; ++v) {
        for (Index t : targets) {
            g.edges.emplace_back(std::min(v, t), std::max(v, t));
            repeated.push_back(t);
            repeated.push_back(v);
        }
        if (v + 1 == n) break;
        targets.clear();
        while (targets.size() < 2) {
            Index pick = repeated[rng.below(repeated.size())];
            if (std::find(targets.begin(), targets.end(), pick) == targets.end())
                targets.push_back(pick);
        }
    }
    return g;
}

Matrix mixture_source_covariance() {
    Matrix cov(5, 5);
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 5; ++j) cov(i, j) = std::pow(0.6, std::abs(double(i - j)));
    return cov;
}

Matrix sample_mvn(const Vector& mean, const Matrix& chol, Index n, Rng& rng) {
    if (chol.rows() != mean.size() || chol.cols() != mean.size())
        throw DimensionMismatch("Cholesky factor shape does not match the mean");
    Matrix out(n, mean.size());
    for (Index i = 0; i < n; ++i) out.row(i) = mvn_point(mean, chol, rng).transpose();
    return out;
}

std::pair<PointCloud, PointCloud> gen_gaussian_mixture(Index n, std::uint64_t seed) {
    require_count(n, 2, "gaussian mixture generator");
    Rng rng(seed);

    std::vector<Vector> src_means = {Vector::Zero(5), Vector::Ones(5), Vector::Zero(5)};
    src_means[2](1) = 2.0;
    src_means[2](2) = 2.0;
    Matrix src_chol = mixture_source_covariance().llt().matrixL();

    std::vector<Vector> tgt_means = {Vector::Constant(10, 0.5), Vector::Constant(10, 2.0)};
    Matrix tgt_chol = Matrix::Identity(10, 10);

    PointCloud source{Matrix(n, 5)}, target{Matrix(n, 10)};
    for (Index i = 0; i < n; ++i) {
        Index comp = static_cast<Index>(rng.below(3));
        source.points.row(i) = mvn_point(src_means[comp], src_chol, rng).transpose();
    }
    for (Index i = 0; i < n; ++i) {
        Index comp = static_cast<Index>(rng.below(2));
        target.points.row(i) = mvn_point(tgt_means[comp], tgt_chol, rng).transpose();
    }
    return {std::move(source), std::move(target)};
}

Eigen::Vector2d spiral_source_point(double r, double u, double up) {
    double t = 3.0 * M_PI * std::sqrt(r);
    return {-t * std::cos(t) + u - 10.0, t * std::sin(t) + up - 10.0};
}

Eigen::Vector2d spiral_target_point(double r, double u, double up) {
    Eigen::Vector2d p = spiral_source_point(r, u, up);
    const double c = std::cos(M_PI / 4.0), s = std::sin(M_PI / 4.0);
    return {c * p(0) - s * p(1) + 20.0, s * p(0) + c * p(1) + 20.0};
}

std::pair<PointCloud, PointCloud> gen_spiral(Index n, std::uint64_t seed) {
    require_count(n, 2, "spiral generator");
    Rng rng(seed);
    PointCloud source{Matrix(n, 2)}, target{Matrix(n, 2)};
    for (Index i = 0; i < n; ++i) {
        double r = rng.uniform(), u = rng.uniform(), up = rng.uniform();
        source.points.row(i) = spiral_source_point(r, u, up).transpose();
    }
    for (Index i = 0; i < n; ++i) {
        double r = rng.uniform(), u = rng.uniform(), up = rng.uniform();
        target.points.row(i) = spiral_target_point(r, u, up).transpose();
    }
    return {std::move(source), std::move(target)};
}

Matrix euclidean_relation(const PointCloud& cloud) {
    const Index n = cloud.size();
    Matrix d = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) {
            double dist = (cloud.points.row(i) - cloud.points.row(j)).norm();
            d(i, j) = dist;
            d(j, i) = dist;
        }
    return d;
}

Matrix feature_distance(const PointCloud& x, const PointCloud& y) {
    if (x.dim() != y.dim())
        throw DimensionMismatch("feature clouds live in different ambient dimensions");
    Matrix d(x.size(), y.size());
    for (Index i = 0; i < x.size(); ++i)
        for (Index j = 0; j < y.size(); ++j)
            d(i, j) = (x.points.row(i) - y.points.row(j)).norm();
    return d;
}

Distribution uniform_weights(Index n) {
    if (n < 1) throw EmptyDistribution("weight vector needs at least one atom");
    return Distribution::balanced(Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

Distribution gaussian_weights(const PointCloud& cloud, double bandwidth) {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
        throw ValidationError("bandwidth must be positive and finite");
    Vector center = cloud.points.colwise().mean().transpose();
    Vector w(cloud.size());
    for (Index i = 0; i < cloud.size(); ++i) {
        double sq = (cloud.points.row(i).transpose() - center).squaredNorm();
        w(i) = std::exp(-sq / (2.0 * bandwidth * bandwidth));
    }
    return Distribution::balanced(w / w.sum());
}

}  // namespace spargw
