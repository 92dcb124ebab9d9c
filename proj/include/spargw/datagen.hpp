#pragma once

#include "spargw/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace spargw {

struct PointCloud {
    Matrix points;  // one point per row

    Index size() const { return points.rows(); }
    Index dim() const { return points.cols(); }
};

struct GraphSpec {
    Index n = 0;
    std::vector<std::pair<Index, Index>> edges;  // undirected, stored with first < second
    std::uint64_t seed = 0;

    Matrix adjacency() const;
};

// Two interleaving half circles: source on the unit upper half circle, target
// on the lower half circle shifted to (1, 0.5), each point perturbed by
// isotropic Gaussian noise of the given standard deviation.
std::pair<PointCloud, PointCloud> gen_moon(Index n, std::uint64_t seed, double noise = 0.05);

// Preferential attachment with two edges per new node, which gives a
// power-law degree tail at benchmark sizes.
GraphSpec gen_powerlaw_graph(Index n, std::uint64_t seed);

// Source: n points from a three-component equal-weight mixture in R^5 with
// means 0, 1, (0,2,2,0,0) and covariance 0.6^|i-j|. Target: n points from a
// two-component equal-weight mixture in R^10 with means 0.5 and 2 and
// identity covariance.
std::pair<PointCloud, PointCloud> gen_gaussian_mixture(Index n, std::uint64_t seed);

// Two noisy spirals; the target spiral is the source construction rotated by
// pi/4 and shifted by (20, 20). Latent draws r, u, u' are iid uniform(0,1).
std::pair<PointCloud, PointCloud> gen_spiral(Index n, std::uint64_t seed);

// One point of each spiral evaluated at explicit latent draws.
Eigen::Vector2d spiral_source_point(double r, double u, double up);
Eigen::Vector2d spiral_target_point(double r, double u, double up);

// Shared covariance of the source mixture components, (i,j) -> 0.6^|i-j|.
Matrix mixture_source_covariance();

// n iid draws from N(mean, chol * chol'), one per row; chol is the lower
// Cholesky factor of the covariance.
Matrix sample_mvn(const Vector& mean, const Matrix& chol, Index n, Rng& rng);

// Pairwise Euclidean distances within one cloud; symmetric with zero diagonal.
Matrix euclidean_relation(const PointCloud& cloud);

// Cross-cloud Euclidean distances, used as the fused feature relation.
Matrix feature_distance(const PointCloud& x, const PointCloud& y);

Distribution uniform_weights(Index n);

// Weights proportional to an isotropic Gaussian density evaluated at the
// points, centered at the centroid, renormalized to the simplex.
Distribution gaussian_weights(const PointCloud& cloud, double bandwidth = 1.0);

}  // namespace spargw
