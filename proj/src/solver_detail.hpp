#pragma once

#include "spargw/types.hpp"

#include <chrono>
#include <cmath>

namespace spargw::detail {

// KL(mu (x) mu || nu (x) nu) collapsed to one pass over the atoms:
//   sum_{i,i'} mu_i mu_i' log(mu_i mu_i' / (nu_i nu_i')) = 2 m(mu) sum_i mu_i log(mu_i / nu_i),
// plus the mass terms -m(mu)^2 + m(nu)^2 of the generalized divergence.
inline double kl_tensor_product(const Vector& mu, const Vector& nu) {
    double cross = 0.0;
    for (Index i = 0; i < mu.size(); ++i) {
        if (mu(i) > 0.0) cross += mu(i) * std::log(mu(i) / nu(i));
    }
    double mm = mu.sum(), mn = nu.sum();
    return 2.0 * mm * cross - mm * mm + mn * mn;
}

// The scalar mass penalty added to every entry of the unbalanced cost matrix:
//   lambda * [ sum_i log(mu_i/a_i) mu_i + sum_j log(nu_j/b_j) nu_j ].
inline double ugw_cost_offset(const Vector& mu, const Vector& nu, const Vector& a,
                              const Vector& b, double lambda) {
    double s = 0.0;
    for (Index i = 0; i < mu.size(); ++i)
        if (mu(i) > 0.0) s += std::log(mu(i) / a(i)) * mu(i);
    for (Index j = 0; j < nu.size(); ++j)
        if (nu(j) > 0.0) s += std::log(nu(j) / b(j)) * nu(j);
    return lambda * s;
}

// Result-boundary policy: tiny negative floating-point noise collapses to 0,
// anything further below or non-finite is an error.
inline double finalize_distance(double d) {
    if (!std::isfinite(d) || d < -1e-9)
        throw NonFiniteObjective("objective evaluated to " + std::to_string(d));
    return d < 0.0 ? 0.0 : d;
}

inline void check_objective_finite(double d) {
    if (!std::isfinite(d))
        throw NonFiniteObjective("objective left the finite range mid-solve");
}

class WallClock {
public:
    WallClock() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace spargw::detail
