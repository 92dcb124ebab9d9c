#include "spargw/dense_solvers.hpp"

#include "solver_detail.hpp"

#include <cmath>

namespace spargw {

namespace {

using detail::check_objective_finite;
using detail::finalize_distance;

void require_balanced(const Problem& p) {
    if (p.a.mode() != WeightMode::balanced || p.b.mode() != WeightMode::balanced)
        throw ValidationError("this solver needs balanced marginals");
}

std::size_t dense_peak_bytes(Index m, Index n, bool decomposable, bool fused) {
    auto sq = [](Index k) { return static_cast<std::size_t>(k) * static_cast<std::size_t>(k); };
    std::size_t mn = static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
    std::size_t doubles = sq(m) + sq(n) + 3 * mn;  // Cx, Cy, T, K, cost
    if (decomposable) doubles += sq(m) + sq(n) + mn;
    if (fused) doubles += mn;
    return doubles * sizeof(double);
}

// Shared EGW / PGA-GW / FGW loop. M == nullptr or alpha == 1 is plain GW and
// alpha == 0 is entropic OT on M; both shortcuts keep those limits exact.
GwResult gw_core(const Problem& p, const GroundCost& L, const SolverConfig& cfg, const Matrix* M,
                 double alpha) {
    detail::WallClock clock;
    validate_problem(p);
    require_balanced(p);
    validate_config(cfg);
    const bool quad_active = M == nullptr || alpha > 0.0;
    const bool fused_active = M != nullptr && alpha < 1.0;

    const Vector& a = p.a.weights();
    const Vector& b = p.b.weights();
    Matrix T = a * b.transpose();

    GwResult out;
    SinkhornOptions sopts{cfg.sinkhorn_early_exit};
    auto objective = [&](const Matrix& quad_cost, const Matrix& plan) {
        double val = 0.0;
        if (quad_active) {
            double q = quad_cost.cwiseProduct(plan).sum();
            val = fused_active ? alpha * q : q;
        }
        if (fused_active) val += (1.0 - alpha) * M->cwiseProduct(plan).sum();
        return val;
    };

    Matrix quad_cost, cost, K;
    for (long r = 0; r < cfg.outer; ++r) {
        if (quad_active) quad_cost = contract(p.cx, p.cy, L, T).values;
        double obj = objective(quad_cost, T);
        check_objective_finite(obj);
        out.objective_trace.push_back(obj);

        if (!fused_active)
            cost = quad_cost;
        else if (!quad_active)
            cost = *M;
        else
            cost = alpha * quad_cost + (1.0 - alpha) * (*M);

        K = (-cost.array() / cfg.eps).exp().matrix();
        if (cfg.reg == Regularizer::proximal_kl) K = K.cwiseProduct(T);
        T = sinkhorn_balanced(a, b, K, cfg.inner, sopts);
        if (cfg.record_plans) out.plan_trace.push_back(T);
    }

    if (quad_active) quad_cost = contract(p.cx, p.cy, L, T).values;
    double final_obj = objective(quad_cost, T);
    out.objective_trace.push_back(final_obj);
    out.distance = finalize_distance(final_obj);
    out.plan = std::move(T);
    out.peak_matrix_bytes =
        dense_peak_bytes(p.m(), p.n(), quad_active && L.has_decomposition(), M != nullptr);
    out.wall_seconds = clock.seconds();
    return out;
}

}  // namespace

void validate_config(const SolverConfig& cfg) {
    if (!(cfg.eps > 0.0) || !std::isfinite(cfg.eps))
        throw InvalidRegularizer("epsilon must be positive and finite");
    if (cfg.outer < 1 || cfg.inner < 1)
        throw ValidationError("iteration budgets must be at least 1");
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0))
        throw ValidationError("alpha must lie in [0, 1]");
    if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda))
        throw InvalidRegularizer("lambda must be positive and finite");
}

GwResult solve_gw_dense(const Problem& problem, const GroundCost& L, const SolverConfig& cfg) {
    return gw_core(problem, L, cfg, nullptr, 1.0);
}

GwResult solve_fgw_dense(const Problem& problem, const Matrix& M, const GroundCost& L,
                         double alpha, const SolverConfig& cfg) {
    if (M.rows() != problem.m() || M.cols() != problem.n())
        throw DimensionMismatch("feature relation matrix shape does not match the problem");
    if (!M.allFinite() || (M.array() < 0.0).any())
        throw ValidationError("feature relation matrix must be finite and non-negative");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw ValidationError("alpha must lie in [0, 1]");
    return gw_core(problem, L, cfg, &M, alpha);
}

GwResult solve_ugw_dense(const Problem& problem, const GroundCost& L, double lambda,
                         const SolverConfig& cfg) {
    detail::WallClock clock;
    validate_problem(problem);
    validate_config(cfg);
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw InvalidRegularizer("lambda must be positive and finite");
    const Vector& a = problem.a.weights();
    const Vector& b = problem.b.weights();
    if ((a.array() <= 0.0).any() || (b.array() <= 0.0).any())
        throw ValidationError("unbalanced marginals must be strictly positive");

    Matrix T = (a * b.transpose()) / std::sqrt(a.sum() * b.sum());

    GwResult out;
    SinkhornOptions sopts{cfg.sinkhorn_early_exit};
    auto objective = [&](const Matrix& quad_cost, const Matrix& plan) {
        double q = quad_cost.cwiseProduct(plan).sum();
        Vector mu = plan.rowwise().sum();
        Vector nu = plan.colwise().sum().transpose();
        return q + lambda * detail::kl_tensor_product(mu, a) +
               lambda * detail::kl_tensor_product(nu, b);
    };

    Matrix quad_cost, K;
    for (long r = 0; r < cfg.outer; ++r) {
        double mass = T.sum();
        if (!(mass > 0.0) || !std::isfinite(mass))
            throw MassCollapse("plan mass reached " + std::to_string(mass));
        double eps_bar = cfg.eps * mass;
        double lambda_bar = lambda * mass;

        quad_cost = contract(problem.cx, problem.cy, L, T).values;
        double obj = objective(quad_cost, T);
        check_objective_finite(obj);
        out.objective_trace.push_back(obj);

        Vector mu = T.rowwise().sum();
        Vector nu = T.colwise().sum().transpose();
        double offset = detail::ugw_cost_offset(mu, nu, a, b, lambda);
        K = (-(quad_cost.array() + offset) / eps_bar).exp().matrix();
        if (cfg.reg == Regularizer::proximal_kl) K = K.cwiseProduct(T);

        Matrix next = sinkhorn_unbalanced(a, b, K, lambda_bar, eps_bar, cfg.inner, sopts);
        double next_mass = next.sum();
        if (!(next_mass > 0.0) || !std::isfinite(next_mass))
            throw MassCollapse("plan mass reached " + std::to_string(next_mass));
        T = std::sqrt(mass / next_mass) * next;
        if (cfg.record_plans) out.plan_trace.push_back(T);
    }

    quad_cost = contract(problem.cx, problem.cy, L, T).values;
    double final_obj = objective(quad_cost, T);
    out.objective_trace.push_back(final_obj);
    out.distance = finalize_distance(final_obj);
    out.plan = std::move(T);
    out.peak_matrix_bytes = dense_peak_bytes(problem.m(), problem.n(), L.has_decomposition(), false);
    out.wall_seconds = clock.seconds();
    return out;
}

}  // namespace spargw
